#pragma once

// Stage-one student data: the mimic set (remediated instances plus a
// label-stratified sample of correctly handled ones), few-shot exemplar
// blocks, the instruction-tuning file, and the annotated corpus with
// difficulty scores.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eacl/corpus.hpp"
#include "eacl/remediation.hpp"
#include "eacl/taxonomy.hpp"
#include "eacl/teacher_gateway.hpp"

namespace eacl::mimic {

/// Deterministic Fisher-Yates permutation of [0, n) from a 64-bit Mersenne
/// Twister. Stable across platforms and standard libraries.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

enum class Provenance { remediated, correct_passthrough };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// What the student should produce for an instance.
struct MimicTarget {
  taxonomy::ErrorSet error_types;
  int difficulty = 0;
  std::vector<taxonomy::ErrorTag> tags;
  std::optional<std::string> rewritten_sentence;
  std::vector<std::string> solution_guidance;
  bool kg_needed = false;
  std::vector<std::string> remediation;

  corpus::Json to_json() const;
  static MimicTarget from_json(const corpus::Json& j);
  static MimicTarget from_record(const remediation::RemediationRecord& record);
};

struct MimicExample {
  corpus::RelationInstance instance;
  std::string enriched_sentence;  // original sentence for correct samples
  Provenance provenance = Provenance::correct_passthrough;
  MimicTarget target;
};

/// Every label present in `pool` is represented once sample_size reaches the
/// number of such labels. Result keeps the pool's order.
std::vector<corpus::RelationInstance> stratified_sample(std::span<const corpus::RelationInstance> pool,
                                                        const corpus::LabelSpace& labels, std::size_t sample_size,
                                                        std::uint64_t seed);

/// D_rem (targets from the audit log, joined by id) followed by the sample of
/// D_correct. Throws InputError when sample_size exceeds |D_correct| or a
/// D_rem instance has no kept audit record.
std::vector<MimicExample> build_d_mimic(std::span<const remediation::RemediatedInstance> d_rem,
                                        std::span<const remediation::RemediationRecord> audit,
                                        std::span<const corpus::RelationInstance> d_correct,
                                        const corpus::LabelSpace& labels, std::size_t sample_size, std::uint64_t seed);

/// Up to k exemplars, one difficulty tier at a time (ascending) until k are
/// chosen, rendered with a fixed template. k = 0 gives "".
std::string render_fewshot_block(std::span<const MimicExample> exemplars, std::size_t k);
std::vector<std::size_t> select_fewshot(std::span<const MimicExample> exemplars, std::size_t k);

/// {"instruction", "input", "output"} records for instruction tuning.
std::vector<corpus::Json> instruction_records(std::span<const MimicExample> examples, const corpus::LabelSpace& labels);

void save_d_mimic(std::span<const MimicExample> examples, const corpus::LabelSpace& labels,
                  const std::filesystem::path& path);
std::vector<MimicExample> load_d_mimic(const std::filesystem::path& path, corpus::LabelSpace* labels_out = nullptr);

struct AugmentedInstance {
  corpus::RelationInstance instance;
  std::string enriched_sentence;
  int difficulty = 0;
  Provenance provenance = Provenance::correct_passthrough;
  std::optional<std::string> remediation_id;
};

struct AnnotateOutcome {
  std::vector<AugmentedInstance> d_aug;               // input order, one per input
  std::vector<remediation::RemediationRecord> records;  // assembly log, one per input
  std::size_t failures = 0;
  std::size_t transport_failures = 0;
};

/// Annotates every instance with the student backend through the same
/// assembly path as remediation. A failed instance passes through with its
/// original sentence at difficulty 0.
AnnotateOutcome annotate_corpus(std::span<const corpus::RelationInstance> instances, gateway::TeacherGateway& student,
                                const remediation::RemediationContext& context, std::string_view fewshot = {});

void save_d_aug(std::span<const AugmentedInstance> d_aug, const corpus::LabelSpace& labels,
                const std::filesystem::path& path);
std::vector<AugmentedInstance> load_d_aug(const std::filesystem::path& path, corpus::LabelSpace* labels_out = nullptr);

}  // namespace eacl::mimic
