#include "eacl/teacher_gateway.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "eacl/parallel.hpp"
#include "eacl/text.hpp"

namespace eacl::gateway {

namespace {

using taxonomy::ErrorSet;
using taxonomy::ErrorTag;
using taxonomy::ErrorType;
using nlohmann::json;

std::string_view strip_fence(std::string_view text) {
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return std::string_view{};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  };
  text = trim(text);
  if (!text.starts_with("```")) return text;
  const auto first_nl = text.find('\n');
  if (first_nl == std::string_view::npos || !text.ends_with("```") || text.size() < first_nl + 4) return text;
  return trim(text.substr(first_nl + 1, text.size() - 3 - (first_nl + 1)));
}

template <typename T>
T typed(const json& j, const char* key, const char* type_name) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ResponseFormatError(fmt::format("field '{}' must be {}", key, type_name));
  }
}

std::vector<std::string> string_list(const json& j, const char* key) {
  return typed<std::vector<std::string>>(j, key, "an array of strings");
}

void require(const json& j, const char* key) {
  if (!j.contains(key)) throw ResponseFormatError(fmt::format("missing field '{}'", key));
}

std::string describe(const ErrorSet& types) { return text::join(taxonomy::to_strings(types), ", "); }

}  // namespace

TeacherResponse parse_response(std::string_view text, ResponseKind kind, const corpus::LabelSpace& labels) {
  json j;
  try {
    j = json::parse(strip_fence(text));
  } catch (const json::parse_error&) {
    throw ResponseFormatError("reply is not a JSON document");
  }
  if (!j.is_object()) throw ResponseFormatError("reply must be a JSON object");

  TeacherResponse r;
  switch (kind) {
    case ResponseKind::classification: require(j, "error_types"); break;
    case ResponseKind::remediation:
      require(j, "solution_guidance");
      require(j, "tags");
      break;
    case ResponseKind::verification: require(j, "predicted_relations"); break;
  }

  if (j.contains("error_types")) {
    for (const auto& name : string_list(j, "error_types")) {
      auto t = taxonomy::error_type_from_string(name);
      if (!t) throw ResponseFormatError(fmt::format("unknown error type '{}'", name));
      r.error_types.insert(*t);
    }
  }
  if (j.contains("difficulty") && !j.at("difficulty").is_null() && !j.at("difficulty").is_number()) {
    throw ResponseFormatError("field 'difficulty' must be a number");
  }
  r.difficulty = taxonomy::score_difficulty(r.error_types);

  if (j.contains("tags")) {
    for (const auto& tok : string_list(j, "tags")) {
      auto t = taxonomy::tag_from_token(tok);
      if (!t) throw ResponseFormatError(fmt::format("unknown tag '{}'", tok));
      if (std::find(r.tags.begin(), r.tags.end(), *t) == r.tags.end()) r.tags.push_back(*t);
    }
  }
  if (j.contains("rewritten_sentence") && !j.at("rewritten_sentence").is_null()) {
    auto s = typed<std::string>(j, "rewritten_sentence", "a string or null");
    if (!text::collapse_whitespace(s).empty()) r.rewritten_sentence = std::move(s);
  }
  if (j.contains("solution_guidance")) r.solution_guidance = string_list(j, "solution_guidance");
  if (j.contains("kg_needed")) r.kg_needed = typed<bool>(j, "kg_needed", "a boolean");
  if (j.contains("discard")) r.discard = typed<bool>(j, "discard", "a boolean");
  if (j.contains("remediation")) r.remediation = string_list(j, "remediation");
  if (j.contains("predicted_relations")) {
    corpus::LabelSet set;
    for (const auto& label : string_list(j, "predicted_relations")) {
      if (!labels.contains(label)) throw ResponseFormatError(fmt::format("label '{}' is not in the label space", label));
      set.insert(label);
    }
    r.predicted_relations = std::move(set);
  }
  return r;
}

corpus::Json to_json(const TeacherResponse& r, const corpus::LabelSpace& labels) {
  corpus::Json j;
  j["error_types"] = taxonomy::to_strings(r.error_types);
  j["difficulty"] = r.difficulty;
  j["tags"] = taxonomy::to_strings(r.tags);
  j["rewritten_sentence"] = r.rewritten_sentence ? corpus::Json(*r.rewritten_sentence) : corpus::Json(nullptr);
  j["solution_guidance"] = r.solution_guidance;
  j["kg_needed"] = r.kg_needed;
  j["discard"] = r.discard;
  j["remediation"] = r.remediation;
  if (r.predicted_relations) j["predicted_relations"] = labels.ordered(*r.predicted_relations);
  return j;
}

std::vector<ErrorTag> default_tags(const ErrorSet& types) {
  std::vector<ErrorTag> tags;
  for (ErrorType t : types) {
    switch (t) {
      case ErrorType::Negation: tags.push_back(ErrorTag::NewNeg); break;
      case ErrorType::Contrast:
        tags.push_back(types.count(ErrorType::LackOfDomainKnowledge) ? ErrorTag::ConKgLookup : ErrorTag::Con);
        break;
      case ErrorType::AmplificationModality: tags.push_back(ErrorTag::Amp); break;
      case ErrorType::LackOfDomainKnowledge: tags.push_back(ErrorTag::KgLookup); break;
      case ErrorType::MultipleEntities: tags.push_back(ErrorTag::NewMulti); break;
      case ErrorType::DistantEntities: tags.push_back(ErrorTag::NewDist); break;
    }
  }
  return tags;
}

namespace {

/// Empty when the tags match the types class for class.
std::string tag_type_mismatch(const std::vector<ErrorTag>& tags, const ErrorSet& types) {
  ErrorSet covered;
  for (ErrorTag tag : tags) {
    const ErrorType cls = taxonomy::rule_class(tag);
    if (!types.count(cls)) {
      return fmt::format("tag {} belongs to {}, which is not among the annotated types ({})", taxonomy::token(tag),
                         taxonomy::to_string(cls), describe(types));
    }
    covered.insert(cls);
  }
  for (ErrorType t : types) {
    if (!covered.count(t)) return fmt::format("no tag for annotated type {}", taxonomy::to_string(t));
  }
  return {};
}

}  // namespace

void check_remediation_consistency(const TeacherResponse& r, const ErrorSet& annotated) {
  if (auto why = tag_type_mismatch(r.tags, annotated); !why.empty()) throw ResponseFormatError(why);
  const bool wants_rewrite = std::any_of(r.tags.begin(), r.tags.end(), taxonomy::is_rewrite_tag);
  if (wants_rewrite && !r.rewritten_sentence) throw ResponseFormatError("rewrite tag present but no rewritten sentence");
  if (!wants_rewrite && r.rewritten_sentence) throw ResponseFormatError("rewritten sentence given for a rule that does not rewrite");
  if (r.solution_guidance.empty()) throw ResponseFormatError("solution guidance is empty");
}

taxonomy::ErrorAnnotation annotation_from_response(const std::string& instance_id, const TeacherResponse& r) {
  taxonomy::ErrorAnnotation a;
  a.instance_id = instance_id;
  a.error_types = r.error_types;
  a.tags = r.tags;
  if (a.tags.empty() || !tag_type_mismatch(a.tags, a.error_types).empty()) {
    if (!a.tags.empty()) spdlog::warn("instance {}: classification tags disagree with error types, using defaults", instance_id);
    a.tags = default_tags(a.error_types);
  }
  a.ambiguous_discard = r.discard;
  a.normalize();
  return a;
}

TeacherGateway::TeacherGateway(std::shared_ptr<backend::ModelBackend> backend, corpus::LabelSpace labels,
                               GatewayConfig config)
    : backend_(std::move(backend)), labels_(std::move(labels)), config_(config) {
  if (!backend_) throw InputError("teacher gateway needs a backend");
}

corpus::Json TeacherGateway::base_payload(prompts::PromptRole role, const corpus::RelationInstance& instance) const {
  corpus::Json instance_json = corpus::to_json(instance, labels_);
  // The teacher never sees the reference labels.
  instance_json["reference_relations"] = corpus::Json::array();
  corpus::Json p;
  p["role"] = std::string(prompts::to_string(role));
  p["instance"] = std::move(instance_json);
  p["label_space"] = labels_.labels();
  return p;
}

std::string TeacherGateway::render_classify_prompt(const corpus::RelationInstance& instance, std::string_view fewshot) const {
  std::string shots;
  if (!fewshot.empty()) {
    shots = std::string(fewshot);
    if (!shots.ends_with('\n')) shots += '\n';
    shots += '\n';
  }
  return prompts::render(prompts::builtin_template(prompts::PromptRole::error_classify),
                         {{"rules", prompts::asset("rules_taxonomy")},
                          {"label_space", text::join(labels_.labels(), ", ")},
                          {"fewshot", shots},
                          {"sentence", instance.sentence},
                          {"entity1", instance.entity1.surface},
                          {"entity2", instance.entity2.surface},
                          {"payload", base_payload(prompts::PromptRole::error_classify, instance).dump()}});
}

std::string TeacherGateway::render_remediate_prompt(const corpus::RelationInstance& instance, const ErrorSet& types,
                                                    std::span<const kg::KgTriple> facts) const {
  corpus::Json payload = base_payload(prompts::PromptRole::remediate, instance);
  payload["error_types"] = taxonomy::to_strings(types);
  corpus::Json facts_json = corpus::Json::array();
  for (const auto& f : facts) facts_json.push_back(kg::to_json(f));
  payload["kg_facts"] = std::move(facts_json);
  const std::string rendered_facts = kg::render_facts(facts);
  return prompts::render(
      prompts::builtin_template(prompts::PromptRole::remediate),
      {{"error_types", describe(types)},
       {"rules", prompts::render_text(prompts::asset("rules_remediation"), {{"delta", std::to_string(config_.delta)}})},
       {"label_space", text::join(labels_.labels(), ", ")},
       {"sentence", instance.sentence},
       {"entity1", instance.entity1.surface},
       {"entity2", instance.entity2.surface},
       {"kg_facts", rendered_facts.empty() ? std::string("(none)") : rendered_facts},
       {"payload", payload.dump()}});
}

std::string TeacherGateway::render_verify_prompt(std::string_view enriched_sentence,
                                                 const corpus::RelationInstance& instance) const {
  corpus::Json payload = base_payload(prompts::PromptRole::verify_relation, instance);
  payload["text"] = std::string(enriched_sentence);
  return prompts::render(prompts::builtin_template(prompts::PromptRole::verify_relation),
                         {{"label_space", text::join(labels_.labels(), ", ")},
                          {"sentence", std::string(enriched_sentence)},
                          {"entity1", instance.entity1.surface},
                          {"entity2", instance.entity2.surface},
                          {"payload", payload.dump()}});
}

Outcome<TeacherResponse> TeacherGateway::request(const std::string& prompt, const corpus::Json& payload, ResponseKind kind) {
  Outcome<TeacherResponse> out;
  std::string reply;
  try {
    reply = backend_->complete(prompt, config_.decoding);
  } catch (const BackendError& e) {
    out.failure = e.what();
    out.transport_failure = true;
    return out;
  }
  try {
    out.value = parse_response(reply, kind, labels_);
    return out;
  } catch (const ResponseFormatError& first) {
    corpus::Json repair_payload = payload;
    repair_payload["original_role"] = payload.at("role");
    repair_payload["role"] = std::string(prompts::to_string(prompts::PromptRole::repair));
    const std::string repair_prompt =
        prompts::render(prompts::builtin_template(prompts::PromptRole::repair),
                        {{"error", first.what()}, {"original_prompt", prompt}, {"payload", repair_payload.dump()}});
    try {
      reply = backend_->complete(repair_prompt, config_.decoding);
    } catch (const BackendError& e) {
      out.failure = e.what();
      out.transport_failure = true;
      return out;
    }
    try {
      out.value = parse_response(reply, kind, labels_);
    } catch (const ResponseFormatError& second) {
      out.failure = fmt::format("unusable reply after repair: {} (first attempt: {})", second.what(), first.what());
    }
  }
  return out;
}

Outcome<TeacherResponse> TeacherGateway::classify_errors(const corpus::RelationInstance& instance, std::string_view fewshot) {
  const auto payload = base_payload(prompts::PromptRole::error_classify, instance);
  auto out = request(render_classify_prompt(instance, fewshot), payload, ResponseKind::classification);
  if (!out.ok()) spdlog::warn("classify {}: {}", instance.id, out.failure);
  return out;
}

Outcome<TeacherResponse> TeacherGateway::remediate(const corpus::RelationInstance& instance,
                                                   const taxonomy::ErrorAnnotation& annotation,
                                                   std::span<const kg::KgTriple> facts) {
  if (annotation.error_types.empty()) throw InputError(fmt::format("remediate {}: no error types to remediate", instance.id));
  corpus::Json payload = base_payload(prompts::PromptRole::remediate, instance);
  payload["error_types"] = taxonomy::to_strings(annotation.error_types);
  corpus::Json facts_json = corpus::Json::array();
  for (const auto& f : facts) facts_json.push_back(kg::to_json(f));
  payload["kg_facts"] = std::move(facts_json);
  auto out = request(render_remediate_prompt(instance, annotation.error_types, facts), payload, ResponseKind::remediation);
  if (out.ok()) {
    out.value->error_types = annotation.error_types;
    out.value->difficulty = taxonomy::score_difficulty(annotation.error_types);
    try {
      check_remediation_consistency(*out.value, annotation.error_types);
    } catch (const ResponseFormatError& e) {
      out.failure = fmt::format("inconsistent remediation: {}", e.what());
      out.value.reset();
    }
  }
  if (!out.ok()) spdlog::warn("remediate {}: {}", instance.id, out.failure);
  return out;
}

Outcome<corpus::LabelSet> TeacherGateway::verify_relation(std::string_view enriched_sentence,
                                                          const corpus::RelationInstance& instance) {
  if (labels_.empty()) throw InputError("relation verification needs a non-empty label space");
  corpus::Json payload = base_payload(prompts::PromptRole::verify_relation, instance);
  payload["text"] = std::string(enriched_sentence);
  auto r = request(render_verify_prompt(enriched_sentence, instance), payload, ResponseKind::verification);
  Outcome<corpus::LabelSet> out;
  out.failure = r.failure;
  out.transport_failure = r.transport_failure;
  if (r.ok()) out.value = r.value->predicted_relations.value_or(corpus::LabelSet{});
  if (!out.ok()) spdlog::warn("verify {}: {}", instance.id, out.failure);
  return out;
}

CleanResult TeacherGateway::clean(std::span<const CleanCandidate> candidates) {
  if (labels_.empty() && !candidates.empty()) throw InputError("relation verification needs a non-empty label space");
  auto verdicts = bounded_map<Outcome<corpus::LabelSet>>(candidates.size(), config_.max_concurrent, [&](std::size_t i) {
    return verify_relation(candidates[i].enriched_sentence, candidates[i].instance);
  });
  CleanResult result;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& v = verdicts[i];
    const auto& ref = candidates[i].instance.reference_relations;
    if (!v.ok()) {
      result.dropped.push_back({i, true, v.transport_failure, v.failure});
    } else if (*v.value != ref) {
      result.dropped.push_back({i, false, false,
                                fmt::format("teacher predicted [{}], reference is [{}]",
                                            text::join(labels_.ordered(*v.value), ", "),
                                            text::join(labels_.ordered(ref), ", "))});
    } else {
      result.kept.push_back(i);
    }
  }
  return result;
}

}  // namespace eacl::gateway
