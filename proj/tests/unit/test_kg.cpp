#include <doctest.h>

#include <cmath>
#include <random>

#include "eacl/error.hpp"
#include "eacl/kg.hpp"
#include "eacl/simd/kernels.hpp"
#include "support.hpp"

using namespace eacl;
using namespace eacl::kg;

namespace {

EmbeddingIndex small_index() {
  EmbeddingIndex idx(2);
  idx.add("query", std::vector<double>{1, 0});
  idx.add("b", std::vector<double>{1, 1});
  idx.add("a", std::vector<double>{2, 2});  // same direction as b: tie broken by name
  idx.add("c", std::vector<double>{0, 1});
  idx.add("d", std::vector<double>{-1, 0});
  return idx;
}

}  // namespace

TEST_SUITE("kg") {
  TEST_CASE("triple store deduplicates and indexes both ends") {
    TripleStore s;
    CHECK(s.add({"A", "inhibits", "B", "x"}));
    CHECK_FALSE(s.add({"A", "inhibits", "B", "y"}));
    CHECK(s.add({"B", "activates", "C", std::nullopt}));
    CHECK(s.size() == 2);
    CHECK(s.incident("b").size() == 2);
    CHECK(s.mentions("c"));
    CHECK_FALSE(s.mentions("D"));
  }

  TEST_CASE("top-k ranks by cosine, breaks ties by name, excludes the query") {
    const auto idx = small_index();
    const auto n = top_k_neighbors("query", 3, idx);
    REQUIRE(n.size() == 3);
    CHECK(n[0].entity == "a");
    CHECK(n[1].entity == "b");
    CHECK(n[0].similarity == doctest::Approx(std::sqrt(0.5)));
    CHECK(n[2].entity == "c");
    CHECK(top_k_neighbors("query", 10, idx).size() == 4);
    CHECK(top_k_neighbors("QUERY", 1, idx)[0].entity == "a");
    CHECK(top_k_neighbors("missing", 3, idx).empty());
    CHECK(top_k_neighbors("query", 0, idx).empty());
    CHECK(top_k_neighbors("query", idx).size() == 4);
  }

  TEST_CASE("embedding validation") {
    EmbeddingIndex idx(3);
    CHECK_THROWS_AS(idx.add("x", std::vector<double>{1, 2}), InputError);
    CHECK_THROWS_AS(idx.add("x", std::vector<double>{0, 0, 0}), InputError);
    CHECK_THROWS_AS(idx.add("x", std::vector<double>{NAN, 1, 1}), InputError);
    idx.add("x", std::vector<double>{3, 0, 4});
    CHECK_THROWS_AS(idx.add("x", std::vector<double>{1, 1, 1}), InputError);
    const auto v = idx.vector("x");
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[2] == doctest::Approx(0.8));
  }

  TEST_CASE("facts link each entity to its neighbours") {
    const auto graph = load_kg(testing::fixture_dir() / "kg_triples.tsv", testing::fixture_dir() / "embeddings.tsv");
    CHECK(graph.store.size() == 35);  // one duplicate line in the file
    const auto facts = facts_for({"CYP3A4", "cyclosporine"}, kDefaultNeighbors, graph.store, graph.index);
    REQUIRE_FALSE(facts.empty());
    for (const auto& f : facts) {
      const bool touches = f.head == "CYP3A4" || f.tail == "CYP3A4" || f.head == "cyclosporine" || f.tail == "cyclosporine";
      CHECK(touches);
    }
    for (std::size_t i = 0; i < facts.size(); ++i) {
      for (std::size_t j = i + 1; j < facts.size(); ++j) CHECK_FALSE(facts[i].same_fact(facts[j]));
    }
    CHECK(facts_for({"unknown-x", "unknown-y"}, 5, graph.store, graph.index).empty());
  }

  TEST_CASE("fact rendering") {
    const std::vector<KgTriple> facts = {{"A", "inhibits", "B", std::nullopt}, {"C", "binds", "D", "src"}};
    CHECK(render_facts(facts) == "A — inhibits — B\nC — binds — D");
    CHECK(render_facts({}) == "");
    CHECK(triple_from_json(to_json(facts[1])) == facts[1]);
  }

  TEST_CASE("loader rejects malformed lines") {
    testing::TempDir dir;
    corpus::write_text(dir / "t.tsv", "# comment\nA\tr\n");
    CHECK_THROWS_AS(load_triples(dir / "t.tsv"), InputError);
    corpus::write_text(dir / "e.tsv", "A\t1,2\nB\t1,2,3\n");
    CHECK_THROWS_AS(load_embeddings(dir / "e.tsv"), InputError);
    corpus::write_text(dir / "e2.tsv", "A\t1,x\n");
    CHECK_THROWS_AS(load_embeddings(dir / "e2.tsv"), InputError);
    corpus::write_text(dir / "e3.tsv", "\n# c\nA\t1,2\n\nB\t2,1\n");
    CHECK(load_embeddings(dir / "e3.tsv").size() == 2);
  }

  TEST_CASE("vocabulary covers index and store") {
    const auto graph = load_kg(testing::fixture_dir() / "kg_triples.tsv", testing::fixture_dir() / "embeddings.tsv");
    const auto vocab = vocabulary(graph);
    CHECK(std::is_sorted(vocab.begin(), vocab.end()));
    CHECK(std::find(vocab.begin(), vocab.end(), "vitamin K") != vocab.end());
    CHECK(std::find(vocab.begin(), vocab.end(), "aspirin") != vocab.end());
  }

  TEST_CASE("every vector kernel table agrees with the scalar reference") {
    const auto& ref = simd::scalar_kernels();
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (const simd::KernelTable* table : simd::available_kernels()) {
      CAPTURE(simd::to_string(table->isa));
      for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 33u, 64u, 257u}) {
        std::vector<double> a(n), b(n);
        for (auto& x : a) x = g(rng);
        for (auto& x : b) x = g(rng);
        const double tol = 1e-12 * (1.0 + static_cast<double>(n));
        CHECK(std::fabs(table->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= tol);
        CHECK(std::fabs(table->squared_norm(a.data(), n) - ref.squared_norm(a.data(), n)) <= tol);
        auto s1 = a, s2 = a;
        table->scale(s1.data(), n, 0.37);
        ref.scale(s2.data(), n, 0.37);
        CHECK(s1 == s2);
        const std::size_t rows = 5;
        std::vector<double> m(rows * n), o1(rows), o2(rows);
        for (auto& x : m) x = g(rng);
        table->dot_rows(m.data(), rows, n, a.data(), o1.data());
        ref.dot_rows(m.data(), rows, n, a.data(), o2.data());
        for (std::size_t r = 0; r < rows; ++r) CHECK(std::fabs(o1[r] - o2[r]) <= tol);
      }
    }
  }

  TEST_CASE("neighbour lists match across kernel tables") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    EmbeddingIndex idx(24);
    for (int i = 0; i < 300; ++i) {
      std::vector<double> v(24);
      for (auto& x : v) x = g(rng);
      idx.add("e" + std::to_string(i), v);
    }
    EmbeddingIndex scalar_idx = idx;
    scalar_idx.use_kernels(simd::scalar_kernels());
    for (const simd::KernelTable* table : simd::available_kernels()) {
      EmbeddingIndex other = idx;
      other.use_kernels(*table);
      for (int q = 0; q < 300; q += 17) {
        const auto a = scalar_idx.top_k("e" + std::to_string(q), 8);
        const auto b = other.top_k("e" + std::to_string(q), 8);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
          CHECK(a[i].entity == b[i].entity);
          CHECK(std::fabs(a[i].similarity - b[i].similarity) < 1e-12);
        }
      }
    }
    CHECK(simd::available_kernels().front()->isa == simd::Isa::scalar);
  }
}
