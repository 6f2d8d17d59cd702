#pragma once

// Teacher requests: prompt construction, strict response parsing with one
// repair round, and the relation-verification filter.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eacl/backend.hpp"
#include "eacl/corpus.hpp"
#include "eacl/error.hpp"
#include "eacl/kg.hpp"
#include "eacl/prompts.hpp"
#include "eacl/taxonomy.hpp"

namespace eacl::gateway {

/// The reply did not match the response schema.
class ResponseFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TeacherResponse {
  taxonomy::ErrorSet error_types;
  int difficulty = 0;  // always recomputed from error_types
  std::optional<std::string> rewritten_sentence;
  std::vector<std::string> solution_guidance;
  std::vector<taxonomy::ErrorTag> tags;
  bool kg_needed = false;
  bool discard = false;
  std::optional<corpus::LabelSet> predicted_relations;
  std::vector<std::string> remediation;
};

enum class ResponseKind { classification, remediation, verification };

/// Strict parse of one JSON object (optionally inside a ``` fence).
/// Unknown keys are ignored; known keys must have the documented types.
TeacherResponse parse_response(std::string_view text, ResponseKind kind, const corpus::LabelSpace& labels);

corpus::Json to_json(const TeacherResponse& response, const corpus::LabelSpace& labels);

/// Default tags for a set of error types when the backend gave none.
std::vector<taxonomy::ErrorTag> default_tags(const taxonomy::ErrorSet& types);

/// Throws ResponseFormatError when the remediation reply contradicts the
/// annotated error types (tag classes, rewrite presence, guidance).
void check_remediation_consistency(const TeacherResponse& response, const taxonomy::ErrorSet& annotated);

/// Result of one logical request. `transport_failure` marks BackendError.
template <typename T>
struct Outcome {
  std::optional<T> value;
  std::string failure;
  bool transport_failure = false;

  bool ok() const { return value.has_value(); }
};

struct GatewayConfig {
  backend::DecodingParams decoding;
  std::size_t max_concurrent = 4;
  std::size_t delta = taxonomy::kDefaultDistanceThreshold;
};

struct CleanCandidate {
  corpus::RelationInstance instance;
  std::string enriched_sentence;
};

struct CleanResult {
  std::vector<std::size_t> kept;  // candidate indices, input order
  struct Drop {
    std::size_t index;
    bool backend_failure;  // unusable reply rather than a label mismatch
    bool transport = false;
    std::string reason;
  };
  std::vector<Drop> dropped;
};

class TeacherGateway {
 public:
  TeacherGateway(std::shared_ptr<backend::ModelBackend> backend, corpus::LabelSpace labels, GatewayConfig config = {});

  std::string render_classify_prompt(const corpus::RelationInstance& instance, std::string_view fewshot = {}) const;
  std::string render_remediate_prompt(const corpus::RelationInstance& instance, const taxonomy::ErrorSet& types,
                                      std::span<const kg::KgTriple> facts) const;
  std::string render_verify_prompt(std::string_view enriched_sentence, const corpus::RelationInstance& instance) const;

  Outcome<TeacherResponse> classify_errors(const corpus::RelationInstance& instance, std::string_view fewshot = {});
  Outcome<TeacherResponse> remediate(const corpus::RelationInstance& instance, const taxonomy::ErrorAnnotation& annotation,
                                     std::span<const kg::KgTriple> facts);
  /// Throws InputError for an empty label space.
  Outcome<corpus::LabelSet> verify_relation(std::string_view enriched_sentence, const corpus::RelationInstance& instance);

  /// Keeps exactly the candidates whose verified relation set equals the
  /// reference set, in input order. Requests run concurrently.
  CleanResult clean(std::span<const CleanCandidate> candidates);

  const corpus::LabelSpace& labels() const { return labels_; }
  const GatewayConfig& config() const { return config_; }
  backend::ModelBackend& backend() { return *backend_; }

 private:
  corpus::Json base_payload(prompts::PromptRole role, const corpus::RelationInstance& instance) const;
  Outcome<TeacherResponse> request(const std::string& prompt, const corpus::Json& payload, ResponseKind kind);

  std::shared_ptr<backend::ModelBackend> backend_;
  corpus::LabelSpace labels_;
  GatewayConfig config_;
};

/// Annotation from a classification reply: local difficulty, default tags when
/// none were given, requires_kg from the tags.
taxonomy::ErrorAnnotation annotation_from_response(const std::string& instance_id, const TeacherResponse& response);

}  // namespace eacl::gateway
