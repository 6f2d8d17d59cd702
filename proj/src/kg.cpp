#include "eacl/kg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "eacl/error.hpp"
#include "eacl/text.hpp"

namespace eacl::kg {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename Fn>
void for_each_data_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fn(line, lineno);
  }
}

}  // namespace

bool TripleStore::add(KgTriple triple) {
  if (triple.head.empty() || triple.tail.empty()) throw InputError("triple with empty head or tail");
  std::string key = triple.head + '\t' + triple.relation + '\t' + triple.tail;
  if (!keys_.emplace(std::move(key), triples_.size()).second) return false;
  const std::size_t idx = triples_.size();
  by_entity_[text::to_lower_ascii(triple.head)].push_back(idx);
  if (!text::iequals_ascii(triple.head, triple.tail)) by_entity_[text::to_lower_ascii(triple.tail)].push_back(idx);
  triples_.push_back(std::move(triple));
  return true;
}

std::vector<std::size_t> TripleStore::incident(std::string_view entity) const {
  auto it = by_entity_.find(text::to_lower_ascii(entity));
  return it == by_entity_.end() ? std::vector<std::size_t>{} : it->second;
}

bool TripleStore::mentions(std::string_view entity) const { return by_entity_.count(text::to_lower_ascii(entity)) != 0; }

EmbeddingIndex::EmbeddingIndex(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw InputError("embedding dimension must be positive");
}

void EmbeddingIndex::add(std::string entity, std::span<const double> vec) {
  if (dimension_ == 0) throw InputError("embedding index has no dimension");
  if (entity.empty()) throw InputError("embedding with empty entity name");
  if (vec.size() != dimension_) {
    throw InputError(fmt::format("embedding '{}': dimension {} != {}", entity, vec.size(), dimension_));
  }
  if (exact_.count(entity)) throw InputError(fmt::format("duplicate embedding for '{}'", entity));
  for (double v : vec) {
    if (!std::isfinite(v)) throw InputError(fmt::format("embedding '{}': non-finite component", entity));
  }
  const simd::KernelTable& k = kernels_ ? *kernels_ : simd::active();
  const double norm = std::sqrt(k.squared_norm(vec.data(), vec.size()));
  if (!(norm > 0.0)) throw InputError(fmt::format("embedding '{}': zero vector cannot be normalized", entity));
  const std::size_t offset = rows_.size();
  rows_.insert(rows_.end(), vec.begin(), vec.end());
  k.scale(rows_.data() + offset, dimension_, 1.0 / norm);
  const std::size_t row = names_.size();
  exact_.emplace(entity, row);
  folded_.emplace(text::to_lower_ascii(entity), row);  // first spelling wins the fallback
  names_.push_back(std::move(entity));
}

std::optional<std::size_t> EmbeddingIndex::row_of(std::string_view entity) const {
  if (auto it = exact_.find(std::string(entity)); it != exact_.end()) return it->second;
  if (auto it = folded_.find(text::to_lower_ascii(entity)); it != folded_.end()) return it->second;
  return std::nullopt;
}

std::optional<std::string> EmbeddingIndex::resolve(std::string_view entity) const {
  if (auto row = row_of(entity)) return names_[*row];
  return std::nullopt;
}

std::span<const double> EmbeddingIndex::vector(std::string_view entity) const {
  auto row = row_of(entity);
  if (!row) return {};
  return {rows_.data() + *row * dimension_, dimension_};
}

std::vector<Neighbor> EmbeddingIndex::top_k(std::string_view entity, std::size_t k) const {
  if (k == 0) return {};
  const auto query_row = row_of(entity);
  if (!query_row) {
    spdlog::warn("entity '{}' not in embedding index; no neighbors", entity);
    return {};
  }
  const simd::KernelTable& kern = kernels_ ? *kernels_ : simd::active();
  std::vector<double> sims(names_.size());
  kern.dot_rows(rows_.data(), names_.size(), dimension_, rows_.data() + *query_row * dimension_, sims.data());

  std::vector<std::size_t> candidates;
  candidates.reserve(names_.size());
  for (std::size_t r = 0; r < names_.size(); ++r) {
    if (r != *query_row) candidates.push_back(r);
  }
  const auto better = [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return names_[a] < names_[b];
  };
  const std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(), better);

  std::vector<Neighbor> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back({names_[candidates[i]], sims[candidates[i]]});
  return out;
}

TripleStore load_triples(const fs::path& path) {
  TripleStore store;
  for_each_data_line(path, [&](const std::string& line, std::size_t lineno) {
    auto fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 4) {
      throw InputError(fmt::format("{}:{}: expected 3 or 4 tab-separated fields, got {}", path.string(), lineno, fields.size()));
    }
    if (fields[0].empty() || fields[2].empty()) {
      throw InputError(fmt::format("{}:{}: empty head or tail", path.string(), lineno));
    }
    KgTriple t{fields[0], fields[1], fields[2], std::nullopt};
    if (fields.size() == 4 && !fields[3].empty()) t.source = fields[3];
    store.add(std::move(t));
  });
  return store;
}

EmbeddingIndex load_embeddings(const fs::path& path) {
  EmbeddingIndex index;
  bool first = true;
  for_each_data_line(path, [&](const std::string& line, std::size_t lineno) {
    auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw InputError(fmt::format("{}:{}: expected entity<TAB>vector", path.string(), lineno));
    }
    std::vector<double> vec;
    const std::string& csv = fields[1];
    std::size_t start = 0;
    while (start <= csv.size()) {
      std::size_t comma = csv.find(',', start);
      if (comma == std::string::npos) comma = csv.size();
      const std::string item = text::collapse_whitespace(std::string_view(csv).substr(start, comma - start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
        throw InputError(fmt::format("{}:{}: malformed vector component '{}'", path.string(), lineno, item));
      }
      vec.push_back(v);
      start = comma + 1;
    }
    if (first) {
      index = EmbeddingIndex(vec.size());
      first = false;
    } else if (vec.size() != index.dimension()) {
      throw InputError(fmt::format("{}:{}: dimension {} differs from {} declared by the first row", path.string(),
                                   lineno, vec.size(), index.dimension()));
    }
    try {
      index.add(fields[0], vec);
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  });
  return index;
}

KnowledgeGraph load_kg(const fs::path& triples_path, const fs::path& embeddings_path) {
  KnowledgeGraph kg{load_triples(triples_path), load_embeddings(embeddings_path)};
  std::size_t orphans = 0;
  for (const auto& name : kg.index.entities()) {
    if (!kg.store.mentions(name)) ++orphans;
  }
  if (orphans) spdlog::warn("{} embedded entities appear in no triple", orphans);
  return kg;
}

std::vector<Neighbor> top_k_neighbors(std::string_view entity, std::size_t k, const EmbeddingIndex& index) {
  return index.top_k(entity, k);
}

std::vector<Neighbor> top_k_neighbors(std::string_view entity, const EmbeddingIndex& index) {
  return index.top_k(entity, kDefaultNeighbors);
}

std::vector<KgTriple> facts_for(const std::pair<std::string, std::string>& entity_pair, std::size_t k,
                                const TripleStore& store, const EmbeddingIndex& index) {
  std::vector<KgTriple> out;
  std::set<std::size_t> taken;
  for (const std::string* query : {&entity_pair.first, &entity_pair.second}) {
    const auto canonical = index.resolve(*query);
    if (!canonical) continue;
    const auto incident = store.incident(*canonical);
    for (const Neighbor& n : index.top_k(*canonical, k)) {
      for (std::size_t idx : incident) {
        const KgTriple& t = store.triples()[idx];
        const bool links = (text::iequals_ascii(t.head, *canonical) && text::iequals_ascii(t.tail, n.entity)) ||
                           (text::iequals_ascii(t.tail, *canonical) && text::iequals_ascii(t.head, n.entity));
        if (links && taken.insert(idx).second) out.push_back(t);
      }
    }
  }
  return out;
}

std::string render_fact(const KgTriple& t) { return t.head + " — " + t.relation + " — " + t.tail; }

std::string render_facts(std::span<const KgTriple> facts) {
  std::string out;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (i) out.push_back('\n');
    out += render_fact(facts[i]);
  }
  return out;
}

corpus::Json to_json(const KgTriple& t) {
  corpus::Json j;
  j["head"] = t.head;
  j["relation"] = t.relation;
  j["tail"] = t.tail;
  if (t.source) j["source"] = *t.source;
  return j;
}

KgTriple triple_from_json(const corpus::Json& j) {
  try {
    KgTriple t{j.at("head").get<std::string>(), j.at("relation").get<std::string>(), j.at("tail").get<std::string>(),
               std::nullopt};
    if (j.contains("source")) t.source = j.at("source").get<std::string>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed triple: {}", e.what()));
  }
}

std::vector<std::string> vocabulary(const KnowledgeGraph& graph) {
  std::set<std::string> names(graph.index.entities().begin(), graph.index.entities().end());
  for (const auto& t : graph.store.triples()) {
    names.insert(t.head);
    names.insert(t.tail);
  }
  return {names.begin(), names.end()};
}

}  // namespace eacl::kg
