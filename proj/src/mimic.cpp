#include "eacl/mimic.hpp"

#include <algorithm>
#include <map>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "eacl/error.hpp"
#include "eacl/parallel.hpp"
#include "eacl/prompts.hpp"
#include "eacl/text.hpp"

namespace eacl::mimic {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

std::string_view to_string(Provenance p) {
  return p == Provenance::remediated ? "remediated" : "correct_passthrough";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "remediated") return Provenance::remediated;
  if (s == "correct_passthrough") return Provenance::correct_passthrough;
  throw InputError(fmt::format("unknown provenance '{}'", s));
}

corpus::Json MimicTarget::to_json() const {
  corpus::Json j;
  j["error_types"] = taxonomy::to_strings(error_types);
  j["difficulty"] = difficulty;
  j["tags"] = taxonomy::to_strings(tags);
  j["rewritten_sentence"] = rewritten_sentence ? corpus::Json(*rewritten_sentence) : corpus::Json(nullptr);
  j["solution_guidance"] = solution_guidance;
  j["kg_needed"] = kg_needed;
  j["remediation"] = remediation;
  return j;
}

MimicTarget MimicTarget::from_json(const corpus::Json& j) {
  MimicTarget t;
  try {
    for (const auto& s : j.at("error_types").get<std::vector<std::string>>()) {
      auto e = taxonomy::error_type_from_string(s);
      if (!e) throw InputError(fmt::format("unknown error type '{}'", s));
      t.error_types.insert(*e);
    }
    t.difficulty = j.at("difficulty").get<int>();
    for (const auto& s : j.at("tags").get<std::vector<std::string>>()) {
      auto tag = taxonomy::tag_from_token(s);
      if (!tag) throw InputError(fmt::format("unknown tag '{}'", s));
      t.tags.push_back(*tag);
    }
    if (j.contains("rewritten_sentence") && !j.at("rewritten_sentence").is_null()) {
      t.rewritten_sentence = j.at("rewritten_sentence").get<std::string>();
    }
    t.solution_guidance = j.value("solution_guidance", std::vector<std::string>{});
    t.kg_needed = j.value("kg_needed", false);
    t.remediation = j.value("remediation", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed mimic target: {}", e.what()));
  }
  return t;
}

MimicTarget MimicTarget::from_record(const remediation::RemediationRecord& r) {
  MimicTarget t;
  t.error_types = r.error_types;
  t.difficulty = taxonomy::score_difficulty(r.error_types);
  t.tags = r.tags;
  t.rewritten_sentence = r.rewritten_sentence;
  t.solution_guidance = r.solution_guidance;
  t.kg_needed = r.requires_kg();
  t.remediation = r.remediation;
  return t;
}

std::vector<corpus::RelationInstance> stratified_sample(std::span<const corpus::RelationInstance> pool,
                                                        const corpus::LabelSpace& labels, std::size_t sample_size,
                                                        std::uint64_t seed) {
  if (sample_size > pool.size()) {
    throw InputError(fmt::format("sample size {} exceeds the {} available instances", sample_size, pool.size()));
  }
  // One queue per label (instances carrying it) plus one for empty sets, each
  // in a seeded order, drained round-robin.
  const auto order = shuffled_indices(pool.size(), seed);
  std::vector<std::vector<std::size_t>> queues(labels.size() + 1);
  for (std::size_t i : order) {
    const auto& refs = pool[i].reference_relations;
    if (refs.empty()) {
      queues.back().push_back(i);
      continue;
    }
    for (const auto& label : refs) queues[labels.index_of(label)].push_back(i);
  }
  std::vector<bool> taken(pool.size(), false);
  std::vector<std::size_t> cursor(queues.size(), 0);
  std::size_t picked = 0;
  while (picked < sample_size) {
    bool progress = false;
    for (std::size_t q = 0; q < queues.size() && picked < sample_size; ++q) {
      auto& c = cursor[q];
      while (c < queues[q].size() && taken[queues[q][c]]) ++c;
      if (c == queues[q].size()) continue;
      taken[queues[q][c++]] = true;
      ++picked;
      progress = true;
    }
    if (!progress) break;
  }
  std::vector<corpus::RelationInstance> out;
  out.reserve(sample_size);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (taken[i]) out.push_back(pool[i]);
  }
  return out;
}

std::vector<MimicExample> build_d_mimic(std::span<const remediation::RemediatedInstance> d_rem,
                                        std::span<const remediation::RemediationRecord> audit,
                                        std::span<const corpus::RelationInstance> d_correct,
                                        const corpus::LabelSpace& labels, std::size_t sample_size, std::uint64_t seed) {
  if (sample_size > d_correct.size()) {
    throw InputError(fmt::format("mimic sample size {} exceeds |D_correct| = {}", sample_size, d_correct.size()));
  }
  std::map<std::string, const remediation::RemediationRecord*, std::less<>> by_id;
  for (const auto& r : audit) by_id[r.instance_id] = &r;

  std::vector<MimicExample> out;
  out.reserve(d_rem.size() + sample_size);
  for (const auto& r : d_rem) {
    auto it = by_id.find(r.instance.id);
    if (it == by_id.end() || it->second->status != remediation::RecordStatus::kept) {
      throw InputError(fmt::format("instance '{}' is in D_rem but has no kept audit record", r.instance.id));
    }
    out.push_back({r.instance, r.enriched_sentence, Provenance::remediated, MimicTarget::from_record(*it->second)});
  }
  for (auto& inst : stratified_sample(d_correct, labels, sample_size, seed)) {
    if (std::any_of(d_rem.begin(), d_rem.end(), [&](const auto& r) { return r.instance.id == inst.id; })) {
      throw InputError(fmt::format("instance '{}' is in both D_rem and D_correct", inst.id));
    }
    std::string sentence = inst.sentence;
    out.push_back({std::move(inst), std::move(sentence), Provenance::correct_passthrough, MimicTarget{}});
  }
  return out;
}

std::vector<std::size_t> select_fewshot(std::span<const MimicExample> exemplars, std::size_t k) {
  std::map<int, std::vector<std::size_t>> tiers;
  for (std::size_t i = 0; i < exemplars.size(); ++i) tiers[exemplars[i].target.difficulty].push_back(i);
  std::vector<std::size_t> chosen;
  k = std::min(k, exemplars.size());
  for (std::size_t round = 0; chosen.size() < k; ++round) {
    for (const auto& [tier, members] : tiers) {
      if (chosen.size() == k) break;
      if (round < members.size()) chosen.push_back(members[round]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::string render_fewshot_block(std::span<const MimicExample> exemplars, std::size_t k) {
  if (k == 0) return {};
  if (k > exemplars.size()) {
    throw InputError(fmt::format("asked for {} few-shot exemplars but only {} are available", k, exemplars.size()));
  }
  std::string out = "Worked examples:";
  std::size_t n = 0;
  for (std::size_t i : select_fewshot(exemplars, k)) {
    const auto& ex = exemplars[i];
    corpus::Json answer;
    answer["error_types"] = taxonomy::to_strings(ex.target.error_types);
    answer["difficulty"] = ex.target.difficulty;
    answer["tags"] = taxonomy::to_strings(ex.target.tags);
    answer["kg_needed"] = ex.target.kg_needed;
    answer["discard"] = false;
    out += fmt::format("\n\nExample {}\nSentence: {}\nEntity 1: {}\nEntity 2: {}\nAnswer: {}", ++n,
                       ex.instance.sentence, ex.instance.entity1.surface,
                       ex.instance.entity2.surface, answer.dump());
  }
  out += "\n";
  return out;
}

std::vector<corpus::Json> instruction_records(std::span<const MimicExample> examples, const corpus::LabelSpace& labels) {
  const std::string instruction =
      prompts::render(prompts::builtin_template(prompts::PromptRole::mimic_exemplar),
                      {{"rules", prompts::asset("rules_taxonomy")}, {"label_space", text::join(labels.labels(), ", ")}});
  std::vector<corpus::Json> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    corpus::Json j;
    j["instruction"] = instruction;
    j["input"] = fmt::format("Sentence: {}\nEntity 1: {}\nEntity 2: {}", ex.instance.sentence,
                             ex.instance.entity1.surface, ex.instance.entity2.surface);
    j["output"] = ex.target.to_json().dump();
    out.push_back(std::move(j));
  }
  return out;
}

void save_d_mimic(std::span<const MimicExample> examples, const corpus::LabelSpace& labels,
                  const std::filesystem::path& path) {
  std::vector<corpus::Json> records;
  records.reserve(examples.size());
  for (const auto& ex : examples) {
    corpus::Json j = corpus::to_json(ex.instance, labels);
    j["enriched_sentence"] = ex.enriched_sentence;
    j["provenance"] = std::string(to_string(ex.provenance));
    j["target"] = ex.target.to_json();
    records.push_back(std::move(j));
  }
  corpus::write_dataset_file(path, labels, records);
}

std::vector<MimicExample> load_d_mimic(const std::filesystem::path& path, corpus::LabelSpace* labels_out) {
  auto file = corpus::read_dataset_file(path);
  std::vector<MimicExample> out;
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    const auto& rec = file.records[i];
    try {
      MimicExample ex;
      ex.instance = corpus::instance_from_json(rec);
      corpus::validate(ex.instance, file.labels);
      ex.enriched_sentence = rec.at("enriched_sentence").get<std::string>();
      ex.provenance = provenance_from_string(rec.at("provenance").get<std::string>());
      ex.target = MimicTarget::from_json(rec.at("target"));
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), file.line_numbers[i], e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), file.line_numbers[i], e.what()));
    }
  }
  if (labels_out) *labels_out = file.labels;
  return out;
}

AnnotateOutcome annotate_corpus(std::span<const corpus::RelationInstance> instances, gateway::TeacherGateway& student,
                                const remediation::RemediationContext& ctx, std::string_view fewshot) {
  using remediation::RecordStatus;
  const auto analyses = remediation::analyze(instances, student, fewshot);

  struct Work {
    AugmentedInstance aug;
    remediation::RemediationRecord record;
    bool failed = false;
    bool transport = false;
  };
  auto work = bounded_map<Work>(instances.size(), student.config().max_concurrent, [&](std::size_t i) -> Work {
    const auto& inst = instances[i];
    const auto& analysis = analyses[i];
    Work w;
    w.aug.instance = inst;
    w.aug.enriched_sentence = inst.sentence;
    auto fail = [&](std::string why, bool transport) {
      spdlog::warn("annotate {}: {}, passing through unannotated", inst.id, why);
      w.aug.difficulty = 0;
      w.record.instance_id = inst.id;
      w.record.original_sentence = inst.sentence;
      w.record.status = RecordStatus::dropped_backend_failure;
      w.record.reason = std::move(why);
      w.failed = true;
      w.transport = transport;
      return std::move(w);
    };
    if (!analysis.annotation) return fail("classification failed: " + analysis.failure, analysis.transport_failure);

    const auto& ann = *analysis.annotation;
    gateway::TeacherResponse response;
    response.error_types = ann.error_types;
    response.tags = ann.tags;
    response.discard = ann.ambiguous_discard;
    w.aug.difficulty = ann.difficulty;
    if (ann.ambiguous_discard || ann.error_types.empty()) {
      w.record = remediation::assemble(inst, response, {}, ctx.flags);
      return w;
    }
    std::vector<kg::KgTriple> facts;
    if (ann.requires_kg && ctx.flags.enable_kg && ctx.graph) {
      facts = kg::facts_for({inst.entity1.surface, inst.entity2.surface}, ctx.kg_k, ctx.graph->store, ctx.graph->index);
    }
    auto out = student.remediate(inst, ann, facts);
    if (!out.ok()) return fail("remediation failed: " + out.failure, out.transport_failure);
    auto record = remediation::assemble(inst, *out.value, facts, ctx.flags);
    if (ctx.flags.enable_remediation) record = remediation::decompose_check(std::move(record), inst, ctx.delta, ctx.lexicon);
    if (record.status != RecordStatus::kept) {
      spdlog::warn("annotate {}: {}, passing through unannotated", inst.id, record.reason);
      w.aug.difficulty = 0;
      w.record = std::move(record);
      w.failed = true;
      return w;
    }
    w.aug.enriched_sentence = *record.enriched_sentence;
    w.aug.provenance = Provenance::remediated;
    w.aug.remediation_id = inst.id;
    w.record = std::move(record);
    return w;
  });

  AnnotateOutcome outcome;
  outcome.d_aug.reserve(work.size());
  outcome.records.reserve(work.size());
  for (auto& w : work) {
    if (w.failed) ++outcome.failures;
    if (w.transport) ++outcome.transport_failures;
    outcome.d_aug.push_back(std::move(w.aug));
    outcome.records.push_back(std::move(w.record));
  }
  return outcome;
}

void save_d_aug(std::span<const AugmentedInstance> d_aug, const corpus::LabelSpace& labels,
                const std::filesystem::path& path) {
  std::vector<corpus::Json> records;
  records.reserve(d_aug.size());
  for (const auto& a : d_aug) {
    corpus::Json j = corpus::to_json(a.instance, labels);
    j["enriched_sentence"] = a.enriched_sentence;
    j["difficulty"] = a.difficulty;
    j["provenance"] = std::string(to_string(a.provenance));
    j["remediation_id"] = a.remediation_id ? corpus::Json(*a.remediation_id) : corpus::Json(nullptr);
    records.push_back(std::move(j));
  }
  corpus::write_dataset_file(path, labels, records);
}

std::vector<AugmentedInstance> load_d_aug(const std::filesystem::path& path, corpus::LabelSpace* labels_out) {
  auto file = corpus::read_dataset_file(path);
  std::vector<AugmentedInstance> out;
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    const auto& rec = file.records[i];
    try {
      AugmentedInstance a;
      a.instance = corpus::instance_from_json(rec);
      corpus::validate(a.instance, file.labels);
      a.enriched_sentence = rec.at("enriched_sentence").get<std::string>();
      a.difficulty = rec.at("difficulty").get<int>();
      if (a.difficulty < 0 || a.difficulty > 5) throw InputError(fmt::format("difficulty {} outside 0..5", a.difficulty));
      a.provenance = provenance_from_string(rec.at("provenance").get<std::string>());
      if (rec.contains("remediation_id") && !rec.at("remediation_id").is_null()) {
        a.remediation_id = rec.at("remediation_id").get<std::string>();
      }
      if (a.provenance == Provenance::remediated && !a.remediation_id) {
        throw InputError("remediated instance without a remediation_id");
      }
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), file.line_numbers[i], e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), file.line_numbers[i], e.what()));
    }
  }
  if (labels_out) *labels_out = file.labels;
  return out;
}

}  // namespace eacl::mimic
