#include "eacl/mock_backend.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string_view>

#include <fmt/format.h>

#include "eacl/hashing.hpp"
#include "eacl/prompts.hpp"
#include "eacl/text.hpp"

namespace eacl::backend {

namespace {

using taxonomy::ErrorSet;
using taxonomy::ErrorTag;
using taxonomy::ErrorType;

constexpr std::array<std::string_view, 7> kNegationCues = {"not", "no", "never", "neither", "nor", "without", "cannot"};
constexpr std::array<std::string_view, 8> kContrastCues = {"but",    "however", "whereas", "although",
                                                           "though", "despite", "unlike",  "nevertheless"};
constexpr std::array<std::string_view, 12> kModalityCues = {"may",      "might",    "could",    "strongly",
                                                            "markedly", "significantly", "potently", "possibly",
                                                            "likely",   "probably", "highly",   "weakly"};
constexpr std::array<std::string_view, 4> kAmbiguityCues = {"unclear", "ambiguous", "inconclusive", "conflicting"};

template <std::size_t N>
bool has_cue(std::string_view sentence, const std::array<std::string_view, N>& cues) {
  return std::any_of(cues.begin(), cues.end(),
                     [&](std::string_view cue) { return text::find_word(sentence, cue) != std::string_view::npos; });
}

bool is_negation_token(std::string_view token) {
  const std::string bare = text::to_lower_ascii(text::strip_punct(token));
  return std::find(kNegationCues.begin(), kNegationCues.end(), bare) != kNegationCues.end();
}

bool contains_ci(const std::vector<std::string>& names, std::string_view name) {
  return std::any_of(names.begin(), names.end(), [&](const std::string& n) { return text::iequals_ascii(n, name); });
}

corpus::RelationInstance instance_of(const corpus::Json& payload) {
  return corpus::instance_from_json(payload.at("instance"));
}

std::string prose_reply(std::string_view id) {
  return fmt::format("Looking at instance {}, I believe the sentence is fairly tricky, but I am not sure how to "
                     "summarise it in the requested format.", id);
}

}  // namespace

corpus::Json MockConfig::to_json() const {
  corpus::Json j;
  j["knowledge_entities"] = knowledge_entities;
  j["entity_lexicon"] = entity_lexicon;
  j["mislabel_ids"] = std::vector<std::string>(mislabel_ids.begin(), mislabel_ids.end());
  j["prose_ids"] = std::vector<std::string>(prose_ids.begin(), prose_ids.end());
  j["flaky_ids"] = std::vector<std::string>(flaky_ids.begin(), flaky_ids.end());
  j["delta"] = delta;
  return j;
}

MockConfig MockConfig::from_json(const corpus::Json& j) {
  MockConfig c;
  c.knowledge_entities = j.value("knowledge_entities", std::vector<std::string>{});
  c.entity_lexicon = j.value("entity_lexicon", std::vector<std::string>{});
  const auto ids = [&](const char* key) {
    const auto v = j.value(key, std::vector<std::string>{});
    return std::set<std::string>(v.begin(), v.end());
  };
  c.mislabel_ids = ids("mislabel_ids");
  c.prose_ids = ids("prose_ids");
  c.flaky_ids = ids("flaky_ids");
  c.delta = j.value("delta", taxonomy::kDefaultDistanceThreshold);
  return c;
}

ErrorSet mock_error_types(const corpus::RelationInstance& inst, const MockConfig& config) {
  ErrorSet types;
  const std::string& s = inst.sentence;
  if (has_cue(s, kNegationCues)) types.insert(ErrorType::Negation);
  if (has_cue(s, kContrastCues)) types.insert(ErrorType::Contrast);
  if (has_cue(s, kModalityCues)) types.insert(ErrorType::AmplificationModality);
  if (contains_ci(config.knowledge_entities, inst.entity1.surface) ||
      contains_ci(config.knowledge_entities, inst.entity2.surface)) {
    types.insert(ErrorType::LackOfDomainKnowledge);
  }
  std::vector<std::string> mentioned = {text::to_lower_ascii(inst.entity1.surface), text::to_lower_ascii(inst.entity2.surface)};
  for (const auto& name : config.entity_lexicon) {
    const std::string lower = text::to_lower_ascii(name);
    if (std::find(mentioned.begin(), mentioned.end(), lower) != mentioned.end()) continue;
    if (text::find_word(s, name) != std::string_view::npos) mentioned.push_back(lower);
  }
  std::sort(mentioned.begin(), mentioned.end());
  mentioned.erase(std::unique(mentioned.begin(), mentioned.end()), mentioned.end());
  if (mentioned.size() >= 3) types.insert(ErrorType::MultipleEntities);
  if (taxonomy::distant_entities(inst, config.delta)) types.insert(ErrorType::DistantEntities);
  return types;
}

bool mock_is_ambiguous(const corpus::RelationInstance& inst) { return has_cue(inst.sentence, kAmbiguityCues); }

std::string mock_rewrite(const corpus::RelationInstance& inst, const ErrorSet& types, const MockConfig& config) {
  const corpus::EntitySpan* first = &inst.entity1;
  const corpus::EntitySpan* second = &inst.entity2;
  if (second->char_start < first->char_start) std::swap(first, second);
  std::string middle;
  if (first->char_end <= second->char_start) middle = text::substr_cp(inst.sentence, first->char_end, second->char_start);

  // Drop other entity mentions so the rewrite talks about the target pair only.
  for (const auto& name : config.entity_lexicon) {
    if (text::iequals_ascii(name, inst.entity1.surface) || text::iequals_ascii(name, inst.entity2.surface)) continue;
    for (std::size_t pos = text::find_word(middle, name); pos != std::string::npos; pos = text::find_word(middle, name)) {
      middle.erase(pos, name.size());
    }
  }
  std::vector<std::string> tokens;
  for (const auto& tok : text::split_whitespace(middle)) {
    if (!text::strip_punct(tok).empty()) tokens.push_back(tok);
  }
  constexpr std::size_t kMaxMiddle = 8;
  if (tokens.size() > kMaxMiddle) {
    // Keep every negation cue plus the tokens nearest the second entity.
    std::vector<bool> keep(tokens.size(), false);
    std::size_t budget = kMaxMiddle;
    for (std::size_t i = 0; i < tokens.size() && budget; ++i) {
      if (is_negation_token(tokens[i])) {
        keep[i] = true;
        --budget;
      }
    }
    for (std::size_t i = tokens.size(); i-- > 0 && budget;) {
      if (!keep[i]) {
        keep[i] = true;
        --budget;
      }
    }
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (keep[i]) kept.push_back(tokens[i]);
    }
    tokens = std::move(kept);
  }
  const bool negated = types.count(ErrorType::Negation) != 0;
  bool cue_kept = false;
  for (auto& tok : tokens) {
    tok = text::strip_punct(tok);
    if (negated && is_negation_token(tok)) {
      for (char& c : tok) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      cue_kept = true;
    }
  }
  std::string out = first->surface;
  if (negated && !cue_kept) out += " does NOT";
  for (const auto& tok : tokens) out += " " + tok;
  out += " " + second->surface + ".";
  return out;
}

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)) {
  name_ = "mock-" + sha256_hex(config_.to_json().dump()).substr(0, 12);
}

void MockBackend::plant_gold(const std::string& instance_id, corpus::LabelSet labels) {
  std::lock_guard lock(gold_mutex_);
  gold_[instance_id] = std::move(labels);
}

std::string MockBackend::complete(const std::string& prompt, const DecodingParams& /*params*/) {
  ++calls_;
  const auto payload = prompts::extract_payload(prompt);
  if (!payload || !payload->contains("role")) return "I could not find a structured request in your message.";
  std::string role = payload->at("role").get<std::string>();
  const bool repair = role == "repair";
  if (repair) role = payload->value("original_role", "");
  const std::string id = payload->contains("instance") ? payload->at("instance").value("id", "") : "";
  if (config_.prose_ids.count(id) || (!repair && config_.flaky_ids.count(id))) return prose_reply(id);

  if (role == "error_classify") return classify(*payload);
  if (role == "remediate") return remediate(*payload);
  if (role == "verify_relation") return verify(*payload);
  return "Unsupported request.";
}

std::string MockBackend::classify(const corpus::Json& payload) const {
  const auto inst = instance_of(payload);
  const ErrorSet types = mock_error_types(inst, config_);
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
  corpus::Json out;
  out["error_types"] = taxonomy::to_strings(types);
  out["difficulty"] = taxonomy::score_difficulty(types);
  out["tags"] = taxonomy::to_strings(tags);
  out["kg_needed"] = std::any_of(tags.begin(), tags.end(), taxonomy::is_kg_tag);
  out["discard"] = mock_is_ambiguous(inst);
  return out.dump();
}

std::string MockBackend::remediate(const corpus::Json& payload) const {
  const auto inst = instance_of(payload);
  ErrorSet types;
  for (const auto& name : payload.value("error_types", std::vector<std::string>{})) {
    if (auto t = taxonomy::error_type_from_string(name)) types.insert(*t);
  }
  const std::string& e1 = inst.entity1.surface;
  const std::string& e2 = inst.entity2.surface;
  std::vector<ErrorTag> tags;
  std::vector<std::string> rules;
  std::vector<std::string> steps = {fmt::format("Locate the two target entities, {} and {}, in the sentence.", e1, e2)};
  bool rewrite = false;
  for (ErrorType t : types) {
    switch (t) {
      case ErrorType::Negation:
        tags.push_back(ErrorTag::NewNeg);
        rules.push_back("simplify and highlight negation");
        steps.push_back(fmt::format("Find the negation cue and decide whether it scopes over the interaction between {} and {}.", e1, e2));
        rewrite = true;
        break;
      case ErrorType::Contrast:
        tags.push_back(types.count(ErrorType::LackOfDomainKnowledge) ? ErrorTag::ConKgLookup : ErrorTag::Con);
        rules.push_back("signal ambiguity");
        steps.push_back("Separate the clauses joined by the contrastive connective and find the clause that mentions both entities.");
        break;
      case ErrorType::AmplificationModality:
        tags.push_back(ErrorTag::Amp);
        rules.push_back("highlight modality");
        steps.push_back("Note any modal or intensity modifiers on the interaction and whether they change its certainty.");
        break;
      case ErrorType::LackOfDomainKnowledge:
        tags.push_back(ErrorTag::KgLookup);
        rules.push_back("knowledge lookup");
        steps.push_back(fmt::format("Recall what is known about {} and {} before judging the relation.", e1, e2));
        break;
      case ErrorType::MultipleEntities:
        tags.push_back(ErrorTag::NewMulti);
        rules.push_back("decompose to the target pair");
        steps.push_back(fmt::format("Ignore the other entities and focus only on the pair {} and {}.", e1, e2));
        rewrite = true;
        break;
      case ErrorType::DistantEntities:
        tags.push_back(ErrorTag::NewDist);
        rules.push_back("restructure distant mentions");
        steps.push_back(fmt::format("Trace the phrase that links {} to {} across the intervening clauses.", e1, e2));
        rewrite = true;
        break;
    }
  }
  steps.push_back("Choose the relation label that the evidence about this specific pair supports.");

  corpus::Json out;
  out["rewritten_sentence"] = rewrite ? corpus::Json(mock_rewrite(inst, types, config_)) : corpus::Json(nullptr);
  out["solution_guidance"] = steps;
  out["tags"] = taxonomy::to_strings(tags);
  out["kg_needed"] = std::any_of(tags.begin(), tags.end(), taxonomy::is_kg_tag);
  out["remediation"] = rules;
  return out.dump();
}

std::string MockBackend::verify(const corpus::Json& payload) const {
  const auto inst = instance_of(payload);
  const auto label_space = payload.value("label_space", std::vector<std::string>{});
  corpus::LabelSet gold;
  {
    std::lock_guard lock(gold_mutex_);
    if (auto it = gold_.find(inst.id); it != gold_.end()) gold = it->second;
  }
  corpus::LabelSet answer = gold;
  if (config_.mislabel_ids.count(inst.id)) {
    answer.clear();
    for (const auto& label : label_space) {
      if (!gold.count(label)) {
        answer.insert(label);
        break;
      }
    }
  }
  std::vector<std::string> ordered;
  for (const auto& label : label_space) {
    if (answer.count(label)) ordered.push_back(label);
  }
  corpus::Json out;
  out["predicted_relations"] = ordered;
  return out.dump();
}

}  // namespace eacl::backend
