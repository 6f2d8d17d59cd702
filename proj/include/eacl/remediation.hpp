#pragma once

// Turns teacher analyses of error-prone instances into enriched training
// sentences, then keeps only those the teacher re-verifies.
//
// Enriched sentence layout (sections omitted when empty):
//
//   <sentence or rewrite> <tag tokens>
//
//   Guidance:
//   1. <step>
//   2. <step>
//
//   Facts:
//   <head> \u2014 <relation> \u2014 <tail>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eacl/corpus.hpp"
#include "eacl/kg.hpp"
#include "eacl/taxonomy.hpp"
#include "eacl/teacher_gateway.hpp"

namespace eacl::remediation {

enum class RecordStatus { kept, discarded_ambiguous, dropped_unverified, dropped_backend_failure };

std::string_view to_string(RecordStatus status);
RecordStatus status_from_string(std::string_view s);

struct RemediationRecord {
  std::string instance_id;
  RecordStatus status = RecordStatus::kept;
  taxonomy::ErrorSet error_types;
  int difficulty = 0;
  std::vector<taxonomy::ErrorTag> tags;
  std::string original_sentence;
  std::optional<std::string> rewritten_sentence;
  std::vector<std::string> solution_guidance;
  std::vector<kg::KgTriple> kg_facts;
  std::optional<std::string> enriched_sentence;
  std::vector<std::string> remediation;
  std::string reason;  // why the record was dropped, if it was

  bool requires_kg() const;
};

corpus::Json to_json(const RemediationRecord& record);
RemediationRecord record_from_json(const corpus::Json& j);

/// Switches for the ablation configurations. Guidance off drops the steps,
/// remediation off ignores rewrites and tag tokens, KG off fetches no facts.
struct AblationFlags {
  bool enable_guidance = true;
  bool enable_remediation = true;
  bool enable_kg = true;

  corpus::Json to_json() const;
  static AblationFlags from_json(const corpus::Json& j);
};

std::string render_guidance(std::span<const std::string> steps);
std::string compose_enriched(std::string_view base, std::span<const std::string> guidance,
                             std::span<const kg::KgTriple> facts);

/// Builds the record for one instance from a validated teacher response.
/// Facts are dropped with a warning when no knowledge-lookup tag is present.
RemediationRecord assemble(const corpus::RelationInstance& instance, const gateway::TeacherResponse& response,
                           std::span<const kg::KgTriple> facts, const AblationFlags& flags = {});

/// Guards for decomposition rewrites: both entity surfaces survive; a
/// distance rewrite brings the pair under `delta` tokens; a multi-entity
/// rewrite mentions no other entity from `lexicon`. Violations downgrade the
/// record to dropped_backend_failure.
RemediationRecord decompose_check(RemediationRecord record, const corpus::RelationInstance& instance,
                                  std::size_t delta, std::span<const std::string> lexicon);

/// Classification outcome for one instance.
struct AnalysisRecord {
  std::string instance_id;
  std::optional<taxonomy::ErrorAnnotation> annotation;
  std::string failure;
  bool transport_failure = false;
};

corpus::Json to_json(const AnalysisRecord& record);
AnalysisRecord analysis_from_json(const corpus::Json& j);

std::vector<AnalysisRecord> analyze(std::span<const corpus::RelationInstance> instances, gateway::TeacherGateway& gateway,
                                    std::string_view fewshot = {});

struct RemediationContext {
  const kg::KnowledgeGraph* graph = nullptr;
  std::size_t kg_k = kg::kDefaultNeighbors;
  std::size_t delta = taxonomy::kDefaultDistanceThreshold;
  std::vector<std::string> lexicon;  // entity names used by the multi-entity guard
  AblationFlags flags;
};

struct RemediatedInstance {
  corpus::RelationInstance instance;
  std::string enriched_sentence;
  int difficulty = 0;
};

struct RemediationOutcome {
  std::vector<RemediatedInstance> d_rem;     // kept and verified, input order
  std::vector<RemediationRecord> records;    // one per input instance, input order
  std::size_t transport_failures = 0;

  std::size_t count(RecordStatus status) const;
};

/// Remediates, assembles and verifies every analysed instance. Per-instance
/// failures become records; nothing aborts the batch.
RemediationOutcome remediate_all(std::span<const corpus::RelationInstance> instances,
                                 std::span<const AnalysisRecord> analyses, gateway::TeacherGateway& gateway,
                                 const RemediationContext& context);

RemediationOutcome build_d_rem(std::span<const corpus::RelationInstance> d_error, gateway::TeacherGateway& gateway,
                               const RemediationContext& context);

/// D_rem in dataset format with "enriched_sentence" and "difficulty" added.
void save_d_rem(std::span<const RemediatedInstance> d_rem, const corpus::LabelSpace& labels,
                const std::filesystem::path& path);
std::vector<RemediatedInstance> load_d_rem(const std::filesystem::path& path, corpus::LabelSpace* labels_out = nullptr);

void save_audit_log(std::span<const RemediationRecord> records, const std::filesystem::path& path);
std::vector<RemediationRecord> load_audit_log(const std::filesystem::path& path);

}  // namespace eacl::remediation
