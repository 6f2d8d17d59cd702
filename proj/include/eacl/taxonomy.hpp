#pragma once

// Error taxonomy, remediation tag tokens, and difficulty scoring.

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eacl/corpus.hpp"

namespace eacl::taxonomy {

enum class ErrorType {
  Negation,
  Contrast,
  AmplificationModality,
  LackOfDomainKnowledge,
  MultipleEntities,
  DistantEntities,
};

inline constexpr std::array<ErrorType, 6> kAllErrorTypes = {
    ErrorType::Negation,         ErrorType::Contrast,        ErrorType::AmplificationModality,
    ErrorType::LackOfDomainKnowledge, ErrorType::MultipleEntities, ErrorType::DistantEntities,
};

enum class ErrorCategory { LinguisticSemantic, KnowledgeBased, Structural };

std::string_view to_string(ErrorType type);
std::optional<ErrorType> error_type_from_string(std::string_view s);
ErrorCategory category_of(ErrorType type);

using ErrorSet = std::set<ErrorType>;

enum class ErrorTag { NewNeg, Con, ConKgLookup, Amp, KgLookup, NewMulti, NewDist };

inline constexpr std::array<ErrorTag, 7> kAllTags = {
    ErrorTag::NewNeg, ErrorTag::Con,      ErrorTag::ConKgLookup, ErrorTag::Amp,
    ErrorTag::KgLookup, ErrorTag::NewMulti, ErrorTag::NewDist,
};

/// Exact token spelling, e.g. "[###CON_KGLOOKUP]".
std::string_view token(ErrorTag tag);
std::optional<ErrorTag> tag_from_token(std::string_view token);

/// Error type whose remediation rule emits this tag. Contrast owns the
/// ambiguity tags.
ErrorType rule_class(ErrorTag tag);
bool is_kg_tag(ErrorTag tag);
/// Tags whose rule produces a rewritten sentence.
bool is_rewrite_tag(ErrorTag tag);
/// Error types whose remediation rule produces a rewritten sentence.
bool produces_rewrite(ErrorType type);

/// 0 types -> 0; one type -> 1, or 2 for LackOfDomainKnowledge; two -> 3;
/// three -> 4; four or more -> 5.
int score_difficulty(const ErrorSet& types);

struct ParsedTags {
  std::string clean_text;
  std::vector<ErrorTag> tags;

  friend bool operator==(const ParsedTags&, const ParsedTags&) = default;
};

/// Extracts every known tag token (longest match first) and collapses the
/// whitespace left behind. Unknown "[###...]" sequences stay in the text.
ParsedTags parse_tags(std::string_view text);

/// Appends tokens space-separated after the text.
std::string render_tags(std::string_view clean_text, const std::vector<ErrorTag>& tags);

inline constexpr std::size_t kDefaultDistanceThreshold = 20;

/// Whitespace tokens strictly between the two entity spans; 0 when they overlap.
std::size_t entity_token_distance(const corpus::RelationInstance& instance);
bool distant_entities(const corpus::RelationInstance& instance, std::size_t delta = kDefaultDistanceThreshold);

struct ErrorAnnotation {
  std::string instance_id;
  ErrorSet error_types;
  int difficulty = 0;
  std::vector<ErrorTag> tags;
  bool requires_kg = false;
  bool ambiguous_discard = false;

  /// Recomputes difficulty and requires_kg from the other fields.
  void normalize();
};

corpus::Json to_json(const ErrorAnnotation& annotation);
ErrorAnnotation annotation_from_json(const corpus::Json& j);

std::vector<std::string> to_strings(const ErrorSet& types);
std::vector<std::string> to_strings(const std::vector<ErrorTag>& tags);

}  // namespace eacl::taxonomy
