#include "eacl/lisa_planner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "eacl/error.hpp"

namespace eacl::lisa {

namespace {

LayerImportance checked(std::span<const double> values, ImportanceSource source) {
  if (values.empty()) throw InputError("layer importance needs at least one layer");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw InputError(fmt::format("layer {}: importance {} must be finite and nonnegative", i, values[i]));
    }
  }
  return {std::vector<double>(values.begin(), values.end()), source};
}

}  // namespace

std::string_view to_string(ImportanceSource s) {
  switch (s) {
    case ImportanceSource::gradient_norm: return "gradient_norm";
    case ImportanceSource::fisher_diag: return "fisher_diag";
    case ImportanceSource::supplied: return "supplied";
  }
  return "supplied";
}

LayerImportance importance_from_gradients(std::span<const double> norms) {
  return checked(norms, ImportanceSource::gradient_norm);
}

LayerImportance importance_from_fisher(std::span<const double> sums) { return checked(sums, ImportanceSource::fisher_diag); }

LayerImportance load_importance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::pair<std::size_t, double>> rows;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw InputError(fmt::format("{}:{}: expected layer_index<TAB>score", path.string(), lineno));
    std::size_t layer = 0;
    double score = 0.0;
    const char* b = line.data();
    auto r1 = std::from_chars(b, b + tab, layer);
    auto r2 = std::from_chars(b + tab + 1, b + line.size(), score);
    if (r1.ec != std::errc() || r1.ptr != b + tab || r2.ec != std::errc() || r2.ptr != b + line.size()) {
      throw InputError(fmt::format("{}:{}: malformed row", path.string(), lineno));
    }
    rows.emplace_back(layer, score);
  }
  std::sort(rows.begin(), rows.end());
  std::vector<double> scores;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != i) throw InputError(fmt::format("{}: layer indices must be 0..{} without gaps", path.string(), rows.size() - 1));
    scores.push_back(rows[i].second);
  }
  return checked(scores, ImportanceSource::supplied);
}

std::set<std::size_t> select_layers(const LayerImportance& importance, std::size_t k) {
  if (k == 0) throw InputError("k must be at least 1");
  const auto& s = importance.scores;
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](std::size_t a, std::size_t b) {
    if (s[a] != s[b]) return s[a] > s[b];
    return a < b;
  });
  return {idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k)};
}

double regularized_objective(double f_value, std::span<const double> w, std::span<const double> reg_diag) {
  if (w.size() != reg_diag.size()) {
    throw InputError(fmt::format("parameter vector has {} entries but the regularizer has {}", w.size(), reg_diag.size()));
  }
  double penalty = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (reg_diag[i] < 0.0) throw InputError(fmt::format("regularization weight {} is negative", i));
    penalty += reg_diag[i] * w[i] * w[i];
  }
  return f_value + 0.5 * penalty;
}

LisaPlan make_plan(const LayerImportance& importance, std::size_t k, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("regularization weight must be finite and nonnegative");
  LisaPlan plan;
  plan.selected = select_layers(importance, k);
  plan.k = k;
  plan.reg_diag.assign(importance.scores.size(), lambda);
  return plan;
}

corpus::Json LisaPlan::to_json() const {
  corpus::Json j;
  j["selected"] = std::vector<std::size_t>(selected.begin(), selected.end());
  j["k"] = k;
  j["reg_diag"] = reg_diag;
  return j;
}

LisaPlan LisaPlan::from_json(const corpus::Json& j) {
  LisaPlan p;
  try {
    const auto sel = j.at("selected").get<std::vector<std::size_t>>();
    p.selected = {sel.begin(), sel.end()};
    p.k = j.at("k").get<std::size_t>();
    p.reg_diag = j.at("reg_diag").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed layer plan: {}", e.what()));
  }
  return p;
}

void save_plan(const LisaPlan& plan, const std::filesystem::path& path) {
  corpus::write_text(path, plan.to_json().dump(2) + "\n");
}

LisaPlan load_plan(const std::filesystem::path& path) {
  try {
    return LisaPlan::from_json(corpus::Json::parse(corpus::read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace eacl::lisa
