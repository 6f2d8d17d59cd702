#include "eacl/curriculum.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "eacl/error.hpp"

namespace eacl::curriculum {

std::size_t BucketSpec::bucket_count() const { return static_cast<std::size_t>(bucket_of.back()); }

void BucketSpec::validate() const {
  if (bucket_of.front() != 1) throw InputError("bucket mapping must send difficulty 0 to bucket 1");
  for (std::size_t h = 1; h < bucket_of.size(); ++h) {
    const int step = bucket_of[h] - bucket_of[h - 1];
    if (step < 0) throw InputError(fmt::format("bucket mapping is not monotone at difficulty {}", h));
    if (step > 1) throw InputError(fmt::format("bucket mapping skips a bucket at difficulty {}", h));
  }
}

BucketSpec BucketSpec::single() {
  BucketSpec s;
  s.bucket_of.fill(1);
  return s;
}

corpus::Json BucketSpec::to_json() const { return corpus::Json(std::vector<int>(bucket_of.begin(), bucket_of.end())); }

BucketSpec BucketSpec::from_json(const corpus::Json& j) {
  BucketSpec s;
  std::vector<int> v;
  try {
    v = j.get<std::vector<int>>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("bucket_spec must be an array of six bucket indices");
  }
  if (v.size() != s.bucket_of.size()) throw InputError("bucket_spec must map each difficulty 0..5");
  std::copy(v.begin(), v.end(), s.bucket_of.begin());
  s.validate();
  return s;
}

std::vector<Bucket> partition(std::span<const ScoredItem> items, const BucketSpec& spec) {
  spec.validate();
  std::vector<Bucket> buckets(spec.bucket_count());
  for (const auto& item : items) {
    if (item.difficulty < 0 || item.difficulty > kMaxDifficulty) {
      throw InputError(fmt::format("instance '{}': difficulty {} outside 0..{}", item.id, item.difficulty, kMaxDifficulty));
    }
    buckets[static_cast<std::size_t>(spec.bucket_of[static_cast<std::size_t>(item.difficulty)] - 1)].push_back(item.id);
  }
  return buckets;
}

std::vector<Bucket> baby_steps(std::span<const Bucket> buckets, bool reverse) {
  std::vector<Bucket> stages;
  stages.reserve(buckets.size());
  Bucket pool;
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    const Bucket& b = buckets[reverse ? buckets.size() - 1 - k : k];
    pool.insert(pool.end(), b.begin(), b.end());
    stages.push_back(pool);
  }
  return stages;
}

std::optional<double> stage_loss(std::span<const std::string> pool, const LossTable& losses) {
  if (pool.empty()) return std::nullopt;
  // Neumaier summation keeps the mean independent of pool order to ~1 ulp.
  double sum = 0.0;
  double carry = 0.0;
  for (const auto& id : pool) {
    auto it = losses.find(id);
    if (it == losses.end()) throw InputError(fmt::format("no loss recorded for instance '{}'", id));
    const double x = it->second;
    const double t = sum + x;
    carry += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return (sum + carry) / static_cast<double>(pool.size());
}

double total_loss(std::span<const std::optional<double>> stage_losses) {
  double total = 0.0;
  for (std::size_t k = 0; k < stage_losses.size(); ++k) {
    if (!stage_losses[k]) throw InputError(fmt::format("stage {} has no loss (empty pool)", k + 1));
    total += *stage_losses[k];
  }
  return total;
}

void CurriculumSchedule::attach_losses(const LossTable& losses) {
  stage_losses.clear();
  for (const auto& pool : stages) stage_losses.push_back(stage_loss(pool, losses));
  const bool complete = std::all_of(stage_losses.begin(), stage_losses.end(), [](const auto& l) { return l.has_value(); });
  total_loss = complete ? std::optional<double>(curriculum::total_loss(stage_losses)) : std::nullopt;
}

CurriculumSchedule make_schedule(std::span<const ScoredItem> items, const BucketSpec& spec, std::size_t epochs_per_stage,
                                 bool reverse) {
  if (epochs_per_stage == 0) throw InputError("epoch budget per stage must be at least 1");
  CurriculumSchedule s;
  s.buckets = partition(items, spec);
  s.stages = baby_steps(s.buckets, reverse);
  s.epoch_budget.assign(s.stages.size(), epochs_per_stage);
  s.reversed = reverse;
  return s;
}

corpus::Json plan_to_json(const CurriculumSchedule& s) {
  corpus::Json stages = corpus::Json::array();
  for (std::size_t k = 0; k < s.stages.size(); ++k) {
    corpus::Json st;
    st["k"] = k + 1;
    st["epoch_budget"] = s.epoch_budget.at(k);
    st["instance_ids"] = s.stages[k];
    stages.push_back(std::move(st));
  }
  corpus::Json j;
  j["stages"] = std::move(stages);
  j["buckets"] = s.buckets;
  j["reversed"] = s.reversed;
  return j;
}

CurriculumSchedule plan_from_json(const corpus::Json& j) {
  CurriculumSchedule s;
  try {
    for (const auto& st : j.at("stages")) {
      if (st.at("k").get<std::size_t>() != s.stages.size() + 1) throw InputError("plan stages must be numbered 1..K in order");
      s.epoch_budget.push_back(st.at("epoch_budget").get<std::size_t>());
      s.stages.push_back(st.at("instance_ids").get<Bucket>());
    }
    s.reversed = j.value("reversed", false);
    if (j.contains("buckets")) {
      s.buckets = j.at("buckets").get<std::vector<Bucket>>();
    } else {
      // Recover buckets as the difference between consecutive stages.
      std::size_t prev = 0;
      for (const auto& pool : s.stages) {
        s.buckets.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(prev), pool.end());
        prev = pool.size();
      }
      if (s.reversed) std::reverse(s.buckets.begin(), s.buckets.end());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed training plan: {}", e.what()));
  }
  return s;
}

void emit_training_plan(const CurriculumSchedule& schedule, const std::filesystem::path& path) {
  corpus::write_text(path, plan_to_json(schedule).dump(2) + "\n");
}

CurriculumSchedule load_training_plan(const std::filesystem::path& path) {
  try {
    return plan_from_json(corpus::Json::parse(corpus::read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

corpus::Json loss_report_json(const CurriculumSchedule& s) {
  corpus::Json losses = corpus::Json::array();
  for (const auto& l : s.stage_losses) losses.push_back(l ? corpus::Json(*l) : corpus::Json(nullptr));
  corpus::Json j;
  j["stage_losses"] = std::move(losses);
  j["total_loss"] = s.total_loss ? corpus::Json(*s.total_loss) : corpus::Json(nullptr);
  return j;
}

void save_loss_report(const CurriculumSchedule& schedule, const std::filesystem::path& path) {
  corpus::write_text(path, loss_report_json(schedule).dump(2) + "\n");
}

}  // namespace eacl::curriculum
