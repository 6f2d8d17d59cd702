#include "eacl/taxonomy.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "eacl/error.hpp"
#include "eacl/text.hpp"

namespace eacl::taxonomy {

std::string_view to_string(ErrorType type) {
  switch (type) {
    case ErrorType::Negation: return "Negation";
    case ErrorType::Contrast: return "Contrast";
    case ErrorType::AmplificationModality: return "AmplificationModality";
    case ErrorType::LackOfDomainKnowledge: return "LackOfDomainKnowledge";
    case ErrorType::MultipleEntities: return "MultipleEntities";
    case ErrorType::DistantEntities: return "DistantEntities";
  }
  return "";
}

std::optional<ErrorType> error_type_from_string(std::string_view s) {
  for (ErrorType t : kAllErrorTypes) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

ErrorCategory category_of(ErrorType type) {
  switch (type) {
    case ErrorType::Negation:
    case ErrorType::Contrast:
    case ErrorType::AmplificationModality: return ErrorCategory::LinguisticSemantic;
    case ErrorType::LackOfDomainKnowledge: return ErrorCategory::KnowledgeBased;
    case ErrorType::MultipleEntities:
    case ErrorType::DistantEntities: return ErrorCategory::Structural;
  }
  return ErrorCategory::Structural;
}

std::string_view token(ErrorTag tag) {
  switch (tag) {
    case ErrorTag::NewNeg: return "[###NEW_NEG]";
    case ErrorTag::Con: return "[###CON]";
    case ErrorTag::ConKgLookup: return "[###CON_KGLOOKUP]";
    case ErrorTag::Amp: return "[###AMP]";
    case ErrorTag::KgLookup: return "[###KGLOOKUP]";
    case ErrorTag::NewMulti: return "[###NEW_MULTI]";
    case ErrorTag::NewDist: return "[###NEW_DIST]";
  }
  return "";
}

std::optional<ErrorTag> tag_from_token(std::string_view tok) {
  for (ErrorTag t : kAllTags) {
    if (token(t) == tok) return t;
  }
  return std::nullopt;
}

ErrorType rule_class(ErrorTag tag) {
  switch (tag) {
    case ErrorTag::NewNeg: return ErrorType::Negation;
    case ErrorTag::Con:
    case ErrorTag::ConKgLookup: return ErrorType::Contrast;
    case ErrorTag::Amp: return ErrorType::AmplificationModality;
    case ErrorTag::KgLookup: return ErrorType::LackOfDomainKnowledge;
    case ErrorTag::NewMulti: return ErrorType::MultipleEntities;
    case ErrorTag::NewDist: return ErrorType::DistantEntities;
  }
  return ErrorType::Negation;
}

bool is_kg_tag(ErrorTag tag) { return tag == ErrorTag::KgLookup || tag == ErrorTag::ConKgLookup; }

bool is_rewrite_tag(ErrorTag tag) {
  return tag == ErrorTag::NewNeg || tag == ErrorTag::NewMulti || tag == ErrorTag::NewDist;
}

bool produces_rewrite(ErrorType type) {
  return type == ErrorType::Negation || type == ErrorType::MultipleEntities || type == ErrorType::DistantEntities;
}

int score_difficulty(const ErrorSet& types) {
  switch (types.size()) {
    case 0: return 0;
    case 1: return *types.begin() == ErrorType::LackOfDomainKnowledge ? 2 : 1;
    case 2: return 3;
    case 3: return 4;
    default: return 5;
  }
}

namespace {

// Known tokens ordered longest first so "[###CON_KGLOOKUP]" never matches as "[###CON]".
const std::vector<ErrorTag>& tags_longest_first() {
  static const std::vector<ErrorTag> order = [] {
    std::vector<ErrorTag> v(kAllTags.begin(), kAllTags.end());
    std::stable_sort(v.begin(), v.end(), [](ErrorTag a, ErrorTag b) { return token(a).size() > token(b).size(); });
    return v;
  }();
  return order;
}

std::string tidy_lines(std::string_view s) {
  std::string out;
  std::size_t start = 0;
  bool first = true;
  while (start <= s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) nl = s.size();
    std::string_view line = s.substr(start, nl - start);
    std::string tidy;
    bool pending_space = false;
    for (char c : line) {
      if (c == ' ' || c == '\t') {
        pending_space = !tidy.empty();
      } else {
        if (pending_space) tidy.push_back(' ');
        pending_space = false;
        tidy.push_back(c);
      }
    }
    if (!first) out.push_back('\n');
    out += tidy;
    first = false;
    start = nl + 1;
  }
  return out;
}

}  // namespace

ParsedTags parse_tags(std::string_view input) {
  static constexpr std::string_view kPrefix = "[###";
  ParsedTags result;
  std::string remaining;
  remaining.reserve(input.size());
  std::size_t i = 0;
  while (i < input.size()) {
    const std::size_t pos = input.find(kPrefix, i);
    if (pos == std::string_view::npos) {
      remaining.append(input.substr(i));
      break;
    }
    remaining.append(input.substr(i, pos - i));
    bool matched = false;
    for (ErrorTag tag : tags_longest_first()) {
      const std::string_view tok = token(tag);
      if (input.substr(pos, tok.size()) == tok) {
        result.tags.push_back(tag);
        remaining.push_back(' ');
        i = pos + tok.size();
        matched = true;
        break;
      }
    }
    if (!matched) {
      remaining.append(kPrefix);
      i = pos + kPrefix.size();
    }
  }
  result.clean_text = result.tags.empty() ? std::string(input) : tidy_lines(remaining);
  return result;
}

std::string render_tags(std::string_view clean_text, const std::vector<ErrorTag>& tags) {
  std::string out(clean_text);
  for (ErrorTag tag : tags) {
    if (!out.empty()) out.push_back(' ');
    out.append(token(tag));
  }
  return out;
}

std::size_t entity_token_distance(const corpus::RelationInstance& inst) {
  const corpus::EntitySpan* a = &inst.entity1;
  const corpus::EntitySpan* b = &inst.entity2;
  if (b->char_start < a->char_start) std::swap(a, b);
  if (a->char_end > b->char_start) return 0;
  return text::split_whitespace(text::substr_cp(inst.sentence, a->char_end, b->char_start)).size();
}

bool distant_entities(const corpus::RelationInstance& inst, std::size_t delta) {
  return entity_token_distance(inst) > delta;
}

void ErrorAnnotation::normalize() {
  difficulty = score_difficulty(error_types);
  requires_kg = std::any_of(tags.begin(), tags.end(), is_kg_tag);
}

std::vector<std::string> to_strings(const ErrorSet& types) {
  std::vector<std::string> out;
  for (ErrorType t : types) out.emplace_back(to_string(t));
  return out;
}

std::vector<std::string> to_strings(const std::vector<ErrorTag>& tags) {
  std::vector<std::string> out;
  for (ErrorTag t : tags) out.emplace_back(token(t));
  return out;
}

corpus::Json to_json(const ErrorAnnotation& a) {
  corpus::Json j;
  j["instance_id"] = a.instance_id;
  j["error_types"] = to_strings(a.error_types);
  j["difficulty"] = a.difficulty;
  j["tags"] = to_strings(a.tags);
  j["requires_kg"] = a.requires_kg;
  j["ambiguous_discard"] = a.ambiguous_discard;
  return j;
}

ErrorAnnotation annotation_from_json(const corpus::Json& j) {
  ErrorAnnotation a;
  try {
    a.instance_id = j.at("instance_id").get<std::string>();
    for (const auto& s : j.at("error_types").get<std::vector<std::string>>()) {
      auto t = error_type_from_string(s);
      if (!t) throw InputError(fmt::format("annotation '{}': unknown error type '{}'", a.instance_id, s));
      a.error_types.insert(*t);
    }
    for (const auto& s : j.at("tags").get<std::vector<std::string>>()) {
      auto t = tag_from_token(s);
      if (!t) throw InputError(fmt::format("annotation '{}': unknown tag '{}'", a.instance_id, s));
      a.tags.push_back(*t);
    }
    a.ambiguous_discard = j.value("ambiguous_discard", false);
    a.difficulty = j.at("difficulty").get<int>();
    a.requires_kg = j.value("requires_kg", false);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed error annotation: {}", e.what()));
  }
  if (a.difficulty != score_difficulty(a.error_types)) {
    throw ValidationError(fmt::format("annotation '{}': difficulty {} inconsistent with {} error types", a.instance_id,
                                      a.difficulty, a.error_types.size()));
  }
  const bool kg = std::any_of(a.tags.begin(), a.tags.end(), is_kg_tag);
  if (kg != a.requires_kg) throw ValidationError(fmt::format("annotation '{}': requires_kg inconsistent with tags", a.instance_id));
  return a;
}

}  // namespace eacl::taxonomy
