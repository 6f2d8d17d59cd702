#pragma once

// Knowledge-graph triple store and entity embedding index.
//
// Triples file (TSV):    head<TAB>relation<TAB>tail[<TAB>source]
// Embeddings file (TSV): entity<TAB>v1,v2,...,vd
// Blank lines and lines starting with '#' are skipped in both.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eacl/corpus.hpp"
#include "eacl/simd/kernels.hpp"

namespace eacl::kg {

inline constexpr std::size_t kDefaultNeighbors = 5;

struct KgTriple {
  std::string head;
  std::string relation;
  std::string tail;
  std::optional<std::string> source;

  bool same_fact(const KgTriple& o) const { return head == o.head && relation == o.relation && tail == o.tail; }
  friend bool operator==(const KgTriple&, const KgTriple&) = default;
};

/// Insertion-ordered, deduplicated on (head, relation, tail).
class TripleStore {
 public:
  /// Returns false when the fact was already present.
  bool add(KgTriple triple);
  const std::vector<KgTriple>& triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  /// Indices of triples with `entity` as head or tail (ASCII case-insensitive).
  std::vector<std::size_t> incident(std::string_view entity) const;
  bool mentions(std::string_view entity) const;

 private:
  std::vector<KgTriple> triples_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_entity_;  // lowercased name -> triples
  std::unordered_map<std::string, std::size_t> keys_;
};

struct Neighbor {
  std::string entity;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Entity vectors stored unit-normalized in one row-major block.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;
  explicit EmbeddingIndex(std::size_t dimension);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

  /// Normalizes and stores. Throws InputError on dimension mismatch, zero or
  /// non-finite vectors, and duplicate names.
  void add(std::string entity, std::span<const double> vector);

  /// Exact match first, then ASCII case-insensitive.
  std::optional<std::string> resolve(std::string_view entity) const;
  std::span<const double> vector(std::string_view entity) const;
  const std::vector<std::string>& entities() const { return names_; }

  /// Highest-cosine entities excluding the query itself, ties broken by name.
  /// Empty (with a warning) when the query is not in the index.
  std::vector<Neighbor> top_k(std::string_view entity, std::size_t k) const;

  /// Overrides the dispatched kernel table (used by equivalence tests).
  void use_kernels(const simd::KernelTable& kernels) { kernels_ = &kernels; }

 private:
  std::optional<std::size_t> row_of(std::string_view entity) const;

  std::size_t dimension_ = 0;
  std::vector<std::string> names_;
  std::vector<double> rows_;
  std::unordered_map<std::string, std::size_t> exact_;
  std::unordered_map<std::string, std::size_t> folded_;
  const simd::KernelTable* kernels_ = nullptr;
};

struct KnowledgeGraph {
  TripleStore store;
  EmbeddingIndex index;
};

TripleStore load_triples(const std::filesystem::path& path);
EmbeddingIndex load_embeddings(const std::filesystem::path& path);
KnowledgeGraph load_kg(const std::filesystem::path& triples_path, const std::filesystem::path& embeddings_path);

std::vector<Neighbor> top_k_neighbors(std::string_view entity, std::size_t k, const EmbeddingIndex& index);
/// Same with k = kDefaultNeighbors.
std::vector<Neighbor> top_k_neighbors(std::string_view entity, const EmbeddingIndex& index);

/// For each entity (first, then second): its top-k neighbors, then the store
/// triples linking the entity to one of those neighbors, neighbors in
/// similarity order. Duplicates across the two entities are dropped.
std::vector<KgTriple> facts_for(const std::pair<std::string, std::string>& entity_pair, std::size_t k,
                                const TripleStore& store, const EmbeddingIndex& index);

/// One line per triple: head, relation and tail joined by " \u2014 ". Empty input gives "".
std::string render_facts(std::span<const KgTriple> facts);
std::string render_fact(const KgTriple& fact);

corpus::Json to_json(const KgTriple& triple);
KgTriple triple_from_json(const corpus::Json& j);

/// Every entity name the graph knows (index and store), sorted.
std::vector<std::string> vocabulary(const KnowledgeGraph& graph);

}  // namespace eacl::kg
