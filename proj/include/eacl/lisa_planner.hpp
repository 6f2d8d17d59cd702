#pragma once

// Layer-importance planning: pick the k most important layers to fine-tune
// and evaluate the diagonally regularized objective.

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "eacl/corpus.hpp"

namespace eacl::lisa {

enum class ImportanceSource { gradient_norm, fisher_diag, supplied };

std::string_view to_string(ImportanceSource s);

struct LayerImportance {
  std::vector<double> scores;
  ImportanceSource source = ImportanceSource::supplied;
};

inline constexpr double kDefaultRegularization = 0.01;

struct LisaPlan {
  std::set<std::size_t> selected;
  std::size_t k = 1;
  std::vector<double> reg_diag;  // one nonnegative weight per layer

  corpus::Json to_json() const;
  static LisaPlan from_json(const corpus::Json& j);
};

/// Throws InputError on empty input, negative or non-finite scores.
LayerImportance importance_from_gradients(std::span<const double> gradient_norms);
/// Scores from per-layer Fisher diagonal sums.
LayerImportance importance_from_fisher(std::span<const double> fisher_diag_sums);

/// TSV `layer_index<TAB>score`; indices must cover 0..L-1 exactly once.
LayerImportance load_importance(const std::filesystem::path& path);

/// Indices of the k largest scores, ties to the lower index. k >= L selects
/// every layer. Throws InputError for k = 0.
std::set<std::size_t> select_layers(const LayerImportance& importance, std::size_t k);

/// f + 1/2 * sum_l reg_l * w_l^2. Throws InputError on length mismatch or a
/// negative weight.
double regularized_objective(double f_value, std::span<const double> w, std::span<const double> reg_diag);

LisaPlan make_plan(const LayerImportance& importance, std::size_t k, double lambda = kDefaultRegularization);

void save_plan(const LisaPlan& plan, const std::filesystem::path& path);
LisaPlan load_plan(const std::filesystem::path& path);

}  // namespace eacl::lisa
