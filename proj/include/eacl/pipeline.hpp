#pragma once

// End-to-end orchestration. Each phase reads its inputs from disk, writes its
// artifacts plus a manifest.json into <output_dir>/<phase>/, and can be run
// on its own once the upstream phases have produced their files.
//
//   select      -> select/{loss_report.jsonl, d_error.jsonl, d_correct.jsonl}
//   analyze     -> analyze/annotations.jsonl
//   remediate   -> remediate/{d_rem.jsonl, audit.jsonl}
//   mimic       -> mimic/{d_mimic.jsonl, instruction_tuning.jsonl, fewshot.txt}
//   annotate    -> annotate/{d_aug.jsonl, audit.jsonl}
//   curriculum  -> curriculum/{training_plan.json, loss_report.json[, lisa_plan.json]}

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eacl/backend.hpp"
#include "eacl/corpus.hpp"
#include "eacl/curriculum.hpp"
#include "eacl/kg.hpp"
#include "eacl/mock_backend.hpp"
#include "eacl/remediation.hpp"
#include "eacl/remote_backend.hpp"

namespace eacl::pipeline {

struct BackendSettings {
  std::string kind = "mock";  // mock | remote
  backend::MockConfig mock;
  backend::RemoteConfig remote;
  backend::DecodingParams decoding;
  std::size_t max_concurrent = 4;

  corpus::Json to_json() const;
  static BackendSettings from_json(const corpus::Json& j);
};

struct LisaSettings {
  std::filesystem::path importance;  // TSV layer_index<TAB>score
  std::size_t k = 8;
  double lambda = 0.01;
};

struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path predictions;
  std::optional<std::filesystem::path> kg_triples;
  std::optional<std::filesystem::path> embeddings;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> cache_dir;  // default <output_dir>/cache

  std::optional<double> tau;
  double epsilon = 1e-12;
  std::size_t delta = 20;
  std::size_t kg_k = 5;
  std::optional<std::size_t> sample_size;  // default |D_rem|
  std::size_t fewshot_k = 2;
  curriculum::BucketSpec bucket_spec;
  std::size_t epochs_per_stage = 1;
  bool reverse_curriculum = false;
  std::uint64_t seed = 13;

  BackendSettings teacher;
  std::optional<BackendSettings> student;  // defaults to the teacher settings
  remediation::AblationFlags ablation;
  std::optional<LisaSettings> lisa;

  /// Relative paths are resolved against `base_dir`.
  static PipelineConfig from_json(const corpus::Json& j, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
  corpus::Json to_json() const;

  std::filesystem::path cache_directory() const;
  std::filesystem::path phase_dir(std::string_view phase) const;
};

/// Counts and hashes of one phase, mirrored in its manifest.json.
struct PhaseSummary {
  std::string phase;
  corpus::Json counts = corpus::Json::object();
  std::size_t backend_calls = 0;  // requests that reached a backend (cache misses)
  std::size_t cache_hits = 0;
};

/// Builds the raw (uncached) backend for a settings block.
std::shared_ptr<backend::ModelBackend> make_backend(const BackendSettings& settings);

class Pipeline {
 public:
  /// Backends may be injected (tests); otherwise they are built from config.
  explicit Pipeline(PipelineConfig config, std::shared_ptr<backend::ModelBackend> teacher = nullptr,
                    std::shared_ptr<backend::ModelBackend> student = nullptr);

  PhaseSummary select();
  PhaseSummary analyze();
  PhaseSummary remediate();
  PhaseSummary mimic();
  PhaseSummary annotate();
  PhaseSummary curriculum();
  /// Runs every phase in order and writes <output_dir>/run_manifest.json.
  std::vector<PhaseSummary> run_all();

  const PipelineConfig& config() const { return config_; }

 private:
  std::shared_ptr<backend::CachingBackend> teacher();
  std::shared_ptr<backend::CachingBackend> student();
  const kg::KnowledgeGraph* graph();
  remediation::RemediationContext context();
  corpus::LabelSpace labels();
  std::vector<corpus::RelationInstance> train_instances();
  void plant_gold(backend::ModelBackend& raw);
  std::pair<std::size_t, std::size_t> usage() const;  // (backend calls, cache hits) so far
  void finish(PhaseSummary& summary, const corpus::Json& inputs, const corpus::Json& outputs,
              std::pair<std::size_t, std::size_t> usage_before);

  PipelineConfig config_;
  std::shared_ptr<backend::ModelBackend> teacher_raw_;
  std::shared_ptr<backend::ModelBackend> student_raw_;
  std::shared_ptr<backend::ResponseCache> cache_;
  std::shared_ptr<backend::CachingBackend> teacher_;
  std::shared_ptr<backend::CachingBackend> student_;
  std::optional<kg::KnowledgeGraph> graph_;
  bool graph_loaded_ = false;
  std::optional<corpus::LabelSpace> labels_;
  std::optional<std::vector<corpus::RelationInstance>> train_;
};

/// Human-readable summary of an output directory. Read-only.
std::string report(const std::filesystem::path& output_dir);

}  // namespace eacl::pipeline
