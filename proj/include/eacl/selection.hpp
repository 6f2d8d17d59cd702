#pragma once

// Per-instance multi-label BCE loss and the threshold split of a dataset into
// error-prone and correctly handled instances.

#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eacl/corpus.hpp"

namespace eacl::selection {

struct LossRecord {
  std::string instance_id;
  double loss = 0.0;
  bool correct = false;  // thresholded prediction set equals the reference set
};

inline constexpr double kDefaultEpsilon = 1e-12;

struct SelectionConfig {
  /// Loss threshold; unset means "mean + one standard deviation" of the
  /// observed losses.
  std::optional<double> tau;
  double epsilon = kDefaultEpsilon;

  void validate() const;
};

/// -sum_r [ y_r log yhat_r + (1 - y_r) log(1 - yhat_r) ], with yhat clamped to
/// [epsilon, 1 - epsilon]. Throws InputError on length mismatch.
double instance_loss(std::span<const double> y, std::span<const double> yhat, double epsilon = kDefaultEpsilon);

/// Population mean + one standard deviation; 0 for an empty input.
double default_tau(std::span<const double> losses);

struct PartitionResult {
  std::vector<corpus::RelationInstance> error;    // loss > tau
  std::vector<corpus::RelationInstance> correct;  // loss <= tau
  std::vector<LossRecord> records;                // one per input instance, input order
  double tau = 0.0;                               // threshold actually applied
};

/// Stable split by loss. Every instance needs exactly one prediction.
PartitionResult partition(std::span<const corpus::RelationInstance> instances,
                          std::span<const corpus::Prediction> predictions,
                          const corpus::LabelSpace& labels,
                          const SelectionConfig& config);

corpus::Json to_json(const LossRecord& record);
LossRecord loss_record_from_json(const corpus::Json& j);
void save_loss_report(std::span<const LossRecord> records, const std::filesystem::path& path);
std::vector<LossRecord> load_loss_report(const std::filesystem::path& path);

}  // namespace eacl::selection
