#include "eacl/remediation.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "eacl/error.hpp"
#include "eacl/parallel.hpp"
#include "eacl/text.hpp"

namespace eacl::remediation {

namespace {

using taxonomy::ErrorTag;

bool has_tag(const std::vector<ErrorTag>& tags, ErrorTag t) { return std::find(tags.begin(), tags.end(), t) != tags.end(); }

RemediationRecord failed_record(const corpus::RelationInstance& instance, std::string reason) {
  RemediationRecord r;
  r.instance_id = instance.id;
  r.original_sentence = instance.sentence;
  r.status = RecordStatus::dropped_backend_failure;
  r.reason = std::move(reason);
  return r;
}

std::optional<std::string> optional_string(const corpus::Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::kept: return "kept";
    case RecordStatus::discarded_ambiguous: return "discarded_ambiguous";
    case RecordStatus::dropped_unverified: return "dropped_unverified";
    case RecordStatus::dropped_backend_failure: return "dropped_backend_failure";
  }
  return "kept";
}

RecordStatus status_from_string(std::string_view s) {
  for (auto st : {RecordStatus::kept, RecordStatus::discarded_ambiguous, RecordStatus::dropped_unverified,
                  RecordStatus::dropped_backend_failure}) {
    if (to_string(st) == s) return st;
  }
  throw InputError(fmt::format("unknown remediation status '{}'", s));
}

bool RemediationRecord::requires_kg() const { return std::any_of(tags.begin(), tags.end(), taxonomy::is_kg_tag); }

corpus::Json to_json(const RemediationRecord& r) {
  corpus::Json j;
  j["instance_id"] = r.instance_id;
  j["status"] = std::string(to_string(r.status));
  j["error_types"] = taxonomy::to_strings(r.error_types);
  j["difficulty"] = r.difficulty;
  j["tags"] = taxonomy::to_strings(r.tags);
  j["original_sentence"] = r.original_sentence;
  j["rewritten_sentence"] = r.rewritten_sentence ? corpus::Json(*r.rewritten_sentence) : corpus::Json(nullptr);
  j["solution_guidance"] = r.solution_guidance;
  corpus::Json facts = corpus::Json::array();
  for (const auto& f : r.kg_facts) facts.push_back(kg::to_json(f));
  j["kg_facts"] = std::move(facts);
  j["enriched_sentence"] = r.enriched_sentence ? corpus::Json(*r.enriched_sentence) : corpus::Json(nullptr);
  j["remediation"] = r.remediation;
  j["reason"] = r.reason;
  return j;
}

RemediationRecord record_from_json(const corpus::Json& j) {
  RemediationRecord r;
  try {
    r.instance_id = j.at("instance_id").get<std::string>();
    r.status = status_from_string(j.at("status").get<std::string>());
    for (const auto& s : j.at("error_types").get<std::vector<std::string>>()) {
      auto t = taxonomy::error_type_from_string(s);
      if (!t) throw InputError(fmt::format("record '{}': unknown error type '{}'", r.instance_id, s));
      r.error_types.insert(*t);
    }
    r.difficulty = j.at("difficulty").get<int>();
    for (const auto& s : j.at("tags").get<std::vector<std::string>>()) {
      auto t = taxonomy::tag_from_token(s);
      if (!t) throw InputError(fmt::format("record '{}': unknown tag '{}'", r.instance_id, s));
      r.tags.push_back(*t);
    }
    r.original_sentence = j.at("original_sentence").get<std::string>();
    r.rewritten_sentence = optional_string(j, "rewritten_sentence");
    r.solution_guidance = j.value("solution_guidance", std::vector<std::string>{});
    for (const auto& f : j.value("kg_facts", corpus::Json::array())) r.kg_facts.push_back(kg::triple_from_json(f));
    r.enriched_sentence = optional_string(j, "enriched_sentence");
    r.remediation = j.value("remediation", std::vector<std::string>{});
    r.reason = j.value("reason", "");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed remediation record: {}", e.what()));
  }
  return r;
}

corpus::Json AblationFlags::to_json() const {
  corpus::Json j;
  j["enable_guidance"] = enable_guidance;
  j["enable_remediation"] = enable_remediation;
  j["enable_kg"] = enable_kg;
  return j;
}

AblationFlags AblationFlags::from_json(const corpus::Json& j) {
  AblationFlags f;
  f.enable_guidance = j.value("enable_guidance", true);
  f.enable_remediation = j.value("enable_remediation", true);
  f.enable_kg = j.value("enable_kg", true);
  return f;
}

std::string render_guidance(std::span<const std::string> steps) {
  if (steps.empty()) return {};
  std::string out = "Guidance:";
  for (std::size_t i = 0; i < steps.size(); ++i) out += fmt::format("\n{}. {}", i + 1, text::collapse_whitespace(steps[i]));
  return out;
}

std::string compose_enriched(std::string_view base, std::span<const std::string> guidance,
                             std::span<const kg::KgTriple> facts) {
  std::string out(base);
  if (!guidance.empty()) out += "\n\n" + render_guidance(guidance);
  if (!facts.empty()) out += "\n\nFacts:\n" + kg::render_facts(facts);
  return out;
}

RemediationRecord assemble(const corpus::RelationInstance& instance, const gateway::TeacherResponse& response,
                           std::span<const kg::KgTriple> facts, const AblationFlags& flags) {
  RemediationRecord r;
  r.instance_id = instance.id;
  r.original_sentence = instance.sentence;
  r.error_types = response.error_types;
  r.difficulty = taxonomy::score_difficulty(response.error_types);
  r.tags = response.tags;
  r.remediation = response.remediation;
  if (response.discard) {
    r.status = RecordStatus::discarded_ambiguous;
    r.reason = "marked as ambiguous by the model";
    return r;
  }
  r.rewritten_sentence = response.rewritten_sentence;
  r.solution_guidance = response.solution_guidance;
  if (flags.enable_kg && !facts.empty()) {
    if (r.requires_kg()) {
      r.kg_facts.assign(facts.begin(), facts.end());
    } else {
      spdlog::warn("instance {}: {} KG facts supplied without a lookup tag, dropping them", instance.id, facts.size());
    }
  }

  const bool use_rewrite = flags.enable_remediation && r.rewritten_sentence.has_value();
  std::string base = use_rewrite ? *r.rewritten_sentence : instance.sentence;
  if (flags.enable_remediation) base = taxonomy::render_tags(base, r.tags);
  const std::span<const std::string> steps =
      flags.enable_guidance ? std::span<const std::string>(r.solution_guidance) : std::span<const std::string>{};
  r.enriched_sentence = compose_enriched(base, steps, r.kg_facts);
  r.status = RecordStatus::kept;
  return r;
}

RemediationRecord decompose_check(RemediationRecord record, const corpus::RelationInstance& instance, std::size_t delta,
                                  std::span<const std::string> lexicon) {
  const bool multi = has_tag(record.tags, ErrorTag::NewMulti);
  const bool dist = has_tag(record.tags, ErrorTag::NewDist);
  if (record.status != RecordStatus::kept || (!multi && !dist)) return record;

  auto fail = [&](std::string why) {
    spdlog::warn("instance {}: rewrite rejected: {}", record.instance_id, why);
    record.status = RecordStatus::dropped_backend_failure;
    record.reason = "rewrite rejected: " + why;
    return record;
  };
  if (!record.rewritten_sentence) return fail("no rewritten sentence");
  const std::string& rewrite = *record.rewritten_sentence;
  const std::string& s1 = instance.entity1.surface;
  const std::string& s2 = instance.entity2.surface;

  const std::size_t p1 = rewrite.find(s1);
  if (p1 == std::string::npos) return fail(fmt::format("entity '{}' missing", s1));
  std::size_t p2 = rewrite.find(s2);
  // Same or nested surfaces: look for a second, non-overlapping mention.
  while (p2 != std::string::npos && p2 < p1 + s1.size() && p2 + s2.size() > p1) p2 = rewrite.find(s2, p2 + 1);
  if (p2 == std::string::npos) return fail(fmt::format("entity '{}' missing", s2));

  if (dist) {
    corpus::RelationInstance probe;
    probe.sentence = rewrite;
    probe.entity1 = {s1, text::codepoint_index(rewrite, p1), text::codepoint_index(rewrite, p1 + s1.size())};
    probe.entity2 = {s2, text::codepoint_index(rewrite, p2), text::codepoint_index(rewrite, p2 + s2.size())};
    const std::size_t d = taxonomy::entity_token_distance(probe);
    if (d >= delta) return fail(fmt::format("entities still {} tokens apart (limit {})", d, delta));
  }
  if (multi) {
    for (const auto& name : lexicon) {
      if (text::iequals_ascii(name, s1) || text::iequals_ascii(name, s2)) continue;
      if (text::find_word(s1, name) != std::string::npos || text::find_word(s2, name) != std::string::npos) continue;
      if (text::find_word(rewrite, name) != std::string::npos) {
        return fail(fmt::format("rewrite still mentions other entity '{}'", name));
      }
    }
  }
  return record;
}

corpus::Json to_json(const AnalysisRecord& a) {
  corpus::Json j;
  j["instance_id"] = a.instance_id;
  j["annotation"] = a.annotation ? taxonomy::to_json(*a.annotation) : corpus::Json(nullptr);
  j["failure"] = a.failure;
  j["transport_failure"] = a.transport_failure;
  return j;
}

AnalysisRecord analysis_from_json(const corpus::Json& j) {
  AnalysisRecord a;
  try {
    a.instance_id = j.at("instance_id").get<std::string>();
    if (j.contains("annotation") && !j.at("annotation").is_null()) a.annotation = taxonomy::annotation_from_json(j.at("annotation"));
    a.failure = j.value("failure", "");
    a.transport_failure = j.value("transport_failure", false);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed analysis record: {}", e.what()));
  }
  return a;
}

std::vector<AnalysisRecord> analyze(std::span<const corpus::RelationInstance> instances, gateway::TeacherGateway& gw,
                                    std::string_view fewshot) {
  return bounded_map<AnalysisRecord>(instances.size(), gw.config().max_concurrent, [&](std::size_t i) {
    const auto& inst = instances[i];
    AnalysisRecord a;
    a.instance_id = inst.id;
    auto out = gw.classify_errors(inst, fewshot);
    if (out.ok()) {
      a.annotation = gateway::annotation_from_response(inst.id, *out.value);
    } else {
      a.failure = out.failure;
      a.transport_failure = out.transport_failure;
    }
    return a;
  });
}

std::size_t RemediationOutcome::count(RecordStatus status) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const RemediationRecord& r) { return r.status == status; }));
}

RemediationOutcome remediate_all(std::span<const corpus::RelationInstance> instances,
                                 std::span<const AnalysisRecord> analyses, gateway::TeacherGateway& gw,
                                 const RemediationContext& ctx) {
  if (instances.size() != analyses.size()) {
    throw InputError(fmt::format("{} instances but {} analyses", instances.size(), analyses.size()));
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].id != analyses[i].instance_id) {
      throw InputError(fmt::format("analysis {} is for '{}', expected '{}'", i, analyses[i].instance_id, instances[i].id));
    }
  }

  struct Work {
    RemediationRecord record;
    bool transport = false;
  };
  auto work = bounded_map<Work>(instances.size(), gw.config().max_concurrent, [&](std::size_t i) -> Work {
    const auto& inst = instances[i];
    const auto& analysis = analyses[i];
    if (!analysis.annotation) {
      return {failed_record(inst, "classification failed: " + analysis.failure), analysis.transport_failure};
    }
    const auto& ann = *analysis.annotation;
    gateway::TeacherResponse response;
    response.error_types = ann.error_types;
    response.difficulty = ann.difficulty;
    response.tags = ann.tags;
    response.discard = ann.ambiguous_discard;
    if (ann.ambiguous_discard || ann.error_types.empty()) return {assemble(inst, response, {}, ctx.flags)};

    std::vector<kg::KgTriple> facts;
    if (ann.requires_kg && ctx.flags.enable_kg && ctx.graph) {
      facts = kg::facts_for({inst.entity1.surface, inst.entity2.surface}, ctx.kg_k, ctx.graph->store, ctx.graph->index);
    }
    auto out = gw.remediate(inst, ann, facts);
    if (!out.ok()) return {failed_record(inst, "remediation failed: " + out.failure), out.transport_failure};
    RemediationRecord record = assemble(inst, *out.value, facts, ctx.flags);
    if (ctx.flags.enable_remediation) record = decompose_check(std::move(record), inst, ctx.delta, ctx.lexicon);
    return {std::move(record)};
  });

  RemediationOutcome outcome;
  std::vector<gateway::CleanCandidate> candidates;
  std::vector<std::size_t> candidate_of;
  outcome.records.reserve(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (work[i].transport) ++outcome.transport_failures;
    if (work[i].record.status == RecordStatus::kept) {
      candidates.push_back({instances[i], *work[i].record.enriched_sentence});
      candidate_of.push_back(i);
    }
    outcome.records.push_back(std::move(work[i].record));
  }

  const auto cleaned = gw.clean(candidates);
  for (const auto& drop : cleaned.dropped) {
    auto& rec = outcome.records[candidate_of[drop.index]];
    rec.status = drop.backend_failure ? RecordStatus::dropped_backend_failure : RecordStatus::dropped_unverified;
    rec.reason = drop.backend_failure ? "verification failed: " + drop.reason : drop.reason;
    if (drop.transport) ++outcome.transport_failures;
  }
  for (std::size_t k : cleaned.kept) {
    const std::size_t i = candidate_of[k];
    const auto& rec = outcome.records[i];
    outcome.d_rem.push_back({instances[i], *rec.enriched_sentence, rec.difficulty});
  }
  spdlog::info("remediation: {} kept, {} ambiguous, {} unverified, {} backend failures",
               outcome.count(RecordStatus::kept), outcome.count(RecordStatus::discarded_ambiguous),
               outcome.count(RecordStatus::dropped_unverified), outcome.count(RecordStatus::dropped_backend_failure));
  return outcome;
}

RemediationOutcome build_d_rem(std::span<const corpus::RelationInstance> d_error, gateway::TeacherGateway& gw,
                               const RemediationContext& ctx) {
  const auto analyses = analyze(d_error, gw);
  return remediate_all(d_error, analyses, gw, ctx);
}

void save_d_rem(std::span<const RemediatedInstance> d_rem, const corpus::LabelSpace& labels,
                const std::filesystem::path& path) {
  std::vector<corpus::Json> records;
  records.reserve(d_rem.size());
  for (const auto& r : d_rem) {
    corpus::Json j = corpus::to_json(r.instance, labels);
    j["enriched_sentence"] = r.enriched_sentence;
    j["difficulty"] = r.difficulty;
    records.push_back(std::move(j));
  }
  corpus::write_dataset_file(path, labels, records);
}

std::vector<RemediatedInstance> load_d_rem(const std::filesystem::path& path, corpus::LabelSpace* labels_out) {
  corpus::DatasetFile file = corpus::read_dataset_file(path);
  std::vector<RemediatedInstance> out;
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    const auto& rec = file.records[i];
    try {
      RemediatedInstance r;
      r.instance = corpus::instance_from_json(rec);
      corpus::validate(r.instance, file.labels);
      r.enriched_sentence = rec.at("enriched_sentence").get<std::string>();
      r.difficulty = rec.value("difficulty", 0);
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), file.line_numbers[i], e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), file.line_numbers[i], e.what()));
    }
  }
  if (labels_out) *labels_out = file.labels;
  return out;
}

void save_audit_log(std::span<const RemediationRecord> records, const std::filesystem::path& path) {
  std::vector<corpus::Json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(to_json(r));
  corpus::write_jsonl(path, lines);
}

std::vector<RemediationRecord> load_audit_log(const std::filesystem::path& path) {
  std::vector<RemediationRecord> out;
  for (const auto& j : corpus::read_jsonl(path)) out.push_back(record_from_json(j));
  return out;
}

}  // namespace eacl::remediation
