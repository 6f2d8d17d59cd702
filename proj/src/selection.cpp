#include "eacl/selection.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "eacl/error.hpp"

namespace eacl::selection {

void SelectionConfig::validate() const {
  if (tau && (std::isnan(*tau) || *tau < 0.0)) throw InputError(fmt::format("tau must be >= 0, got {}", *tau));
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw InputError(fmt::format("epsilon must lie in (0, 0.5), got {}", epsilon));
}

double instance_loss(std::span<const double> y, std::span<const double> yhat, double epsilon) {
  if (y.size() != yhat.size()) {
    throw InputError(fmt::format("instance_loss: {} targets vs {} scores", y.size(), yhat.size()));
  }
  double loss = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    const double p = std::clamp(yhat[r], epsilon, 1.0 - epsilon);
    loss -= y[r] * std::log(p) + (1.0 - y[r]) * std::log1p(-p);
  }
  // Clamped logs keep each term >= 0 up to rounding; never report -0 or tiny negatives.
  return loss > 0.0 ? loss : 0.0;
}

double default_tau(std::span<const double> losses) {
  if (losses.empty()) return 0.0;
  double mean = 0.0;
  for (double l : losses) mean += l;
  mean /= static_cast<double>(losses.size());
  double var = 0.0;
  for (double l : losses) var += (l - mean) * (l - mean);
  var /= static_cast<double>(losses.size());
  return mean + std::sqrt(var);
}

PartitionResult partition(std::span<const corpus::RelationInstance> instances,
                          std::span<const corpus::Prediction> predictions,
                          const corpus::LabelSpace& labels,
                          const SelectionConfig& config) {
  config.validate();
  std::unordered_map<std::string, const corpus::Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.instance_id, &p).second) {
      throw InputError(fmt::format("duplicate prediction for instance '{}'", p.instance_id));
    }
  }

  PartitionResult result;
  result.records.reserve(instances.size());
  std::vector<double> losses;
  losses.reserve(instances.size());
  for (const auto& inst : instances) {
    auto it = by_id.find(inst.id);
    if (it == by_id.end()) throw InputError(fmt::format("missing prediction for instance '{}'", inst.id));
    const corpus::Prediction& pred = *it->second;
    const std::vector<double> y = labels.indicator(inst.reference_relations);
    const double loss = instance_loss(y, pred.scores, config.epsilon);
    result.records.push_back({inst.id, loss, pred.predicted_relations == inst.reference_relations});
    losses.push_back(loss);
  }

  result.tau = config.tau ? *config.tau : default_tau(losses);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    (losses[i] > result.tau ? result.error : result.correct).push_back(instances[i]);
  }
  return result;
}

corpus::Json to_json(const LossRecord& r) {
  corpus::Json j;
  j["instance_id"] = r.instance_id;
  j["loss"] = r.loss;
  j["correct"] = r.correct;
  return j;
}

LossRecord loss_record_from_json(const corpus::Json& j) {
  try {
    return {j.at("instance_id").get<std::string>(), j.at("loss").get<double>(), j.at("correct").get<bool>()};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed loss record: {}", e.what()));
  }
}

void save_loss_report(std::span<const LossRecord> records, const std::filesystem::path& path) {
  std::vector<corpus::Json> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(to_json(r));
  corpus::write_jsonl(path, out);
}

std::vector<LossRecord> load_loss_report(const std::filesystem::path& path) {
  std::vector<LossRecord> out;
  for (const auto& j : corpus::read_jsonl(path)) out.push_back(loss_record_from_json(j));
  return out;
}

}  // namespace eacl::selection
