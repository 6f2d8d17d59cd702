#pragma once

// Difficulty buckets, the cumulative Baby Steps schedule, and stage losses.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eacl/corpus.hpp"

namespace eacl::curriculum {

inline constexpr int kMaxDifficulty = 5;

/// Difficulty score (0..5) to 1-based bucket index. Buckets are contiguous
/// from 1 and the mapping is monotone; the default uses five buckets.
struct BucketSpec {
  std::array<int, kMaxDifficulty + 1> bucket_of = {1, 2, 2, 3, 4, 5};

  std::size_t bucket_count() const;
  /// Throws InputError when the mapping is not contiguous and monotone.
  void validate() const;

  /// Every score in one bucket.
  static BucketSpec single();

  corpus::Json to_json() const;
  static BucketSpec from_json(const corpus::Json& j);
};

struct ScoredItem {
  std::string id;
  int difficulty = 0;
};

using Bucket = std::vector<std::string>;

/// Disjoint cover; within-bucket order follows the input. Throws InputError
/// for a difficulty outside 0..5.
std::vector<Bucket> partition(std::span<const ScoredItem> items, const BucketSpec& spec);

/// Cumulative pools: stage k holds buckets 1..k. `reverse` walks the buckets
/// hardest first.
std::vector<Bucket> baby_steps(std::span<const Bucket> buckets, bool reverse = false);

using LossTable = std::map<std::string, double, std::less<>>;

/// Mean loss over the pool; nullopt for an empty pool. Throws InputError when
/// a member has no loss.
std::optional<double> stage_loss(std::span<const std::string> pool, const LossTable& losses);

/// Sum of the stage losses. Throws InputError if any is absent.
double total_loss(std::span<const std::optional<double>> stage_losses);

struct CurriculumSchedule {
  std::vector<Bucket> buckets;
  std::vector<Bucket> stages;
  std::vector<std::size_t> epoch_budget;  // per stage
  bool reversed = false;
  std::vector<std::optional<double>> stage_losses;  // empty until losses are attached
  std::optional<double> total_loss;

  /// Fills stage_losses and total_loss (absent if any stage is empty).
  void attach_losses(const LossTable& losses);
};

CurriculumSchedule make_schedule(std::span<const ScoredItem> items, const BucketSpec& spec = {},
                                 std::size_t epochs_per_stage = 1, bool reverse = false);

/// {"stages":[{"k", "epoch_budget", "instance_ids"}], "buckets":[...], "reversed"}
corpus::Json plan_to_json(const CurriculumSchedule& schedule);
CurriculumSchedule plan_from_json(const corpus::Json& j);
void emit_training_plan(const CurriculumSchedule& schedule, const std::filesystem::path& path);
CurriculumSchedule load_training_plan(const std::filesystem::path& path);

/// {"stage_losses":[... or null], "total_loss": x or null}
corpus::Json loss_report_json(const CurriculumSchedule& schedule);
void save_loss_report(const CurriculumSchedule& schedule, const std::filesystem::path& path);

}  // namespace eacl::curriculum
