#include <doctest.h>

#include <fstream>

#include "eacl/corpus.hpp"
#include "eacl/error.hpp"
#include "support.hpp"

using namespace eacl;
using eacl::testing::make_instance;
using eacl::testing::TempDir;

TEST_SUITE("corpus") {
  TEST_CASE("fixture corpus loads and validates") {
    corpus::LabelSpace labels;
    const auto all = corpus::load_dataset(testing::fixture_dir() / "corpus.jsonl", &labels);
    CHECK(all.size() == 51);
    CHECK(labels == testing::fixture_labels());
    for (const auto& inst : all) CHECK_NOTHROW(corpus::validate(inst, labels));
  }

  TEST_CASE("label space indicator and ordering") {
    const auto labels = testing::fixture_labels();
    CHECK(labels.indicator({"int", "advise"}) == std::vector<double>{1, 0, 0, 1});
    CHECK(labels.ordered({"int", "advise"}) == std::vector<std::string>{"advise", "int"});
    CHECK(labels.index_of("mechanism") == 2);
    CHECK_THROWS_AS(corpus::LabelSpace({"a", "a"}), InputError);
  }

  TEST_CASE("validation names the instance and the broken field") {
    const auto labels = testing::fixture_labels();
    auto inst = make_instance("X1", "<<aspirin>> with ((warfarin)) µ", {"effect"});
    CHECK_NOTHROW(corpus::validate(inst, labels));

    auto bad = inst;
    bad.entity2.char_start += 1;
    try {
      corpus::validate(bad, labels);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      CHECK(what.find("X1") != std::string::npos);
      CHECK(what.find("entity2") != std::string::npos);
    }

    bad = inst;
    bad.entity1.char_end = 100;
    CHECK_THROWS_AS(corpus::validate(bad, labels), ValidationError);
    bad = inst;
    bad.entity1.char_end = bad.entity1.char_start;
    CHECK_THROWS_AS(corpus::validate(bad, labels), ValidationError);
    bad = inst;
    bad.reference_relations = {"bogus"};
    CHECK_THROWS_AS(corpus::validate(bad, labels), ValidationError);
  }

  TEST_CASE("dataset round trip preserves every field") {
    TempDir dir;
    const auto labels = testing::fixture_labels();
    std::vector<corpus::RelationInstance> data = {
        make_instance("a", "<<X>> and ((Y)) at 5 µg", {"int"}),
        make_instance("b", "((Y)) then <<Z>>", {}, corpus::Split::dev),
        make_instance("c", "<<β-blocker>> plus ((ω-3))", {"advise", "effect"}, corpus::Split::test),
    };
    corpus::save_dataset(data, labels, dir / "d.jsonl");
    corpus::LabelSpace read_labels;
    CHECK(corpus::load_dataset(dir / "d.jsonl", &read_labels) == data);
    CHECK(read_labels == labels);
    const std::string first_line = testing::slurp(dir / "d.jsonl").substr(0, 60);
    CHECK(first_line.rfind("{\"type\":\"header\"", 0) == 0);
  }

  TEST_CASE("malformed files report the line") {
    TempDir dir;
    {
      std::ofstream out(dir / "bad.jsonl");
      out << "{\"type\":\"header\",\"labels\":[\"a\"]}\n";
      out << "{\"type\":\"instance\",\"id\":\"x\"}\n";
    }
    try {
      corpus::load_dataset(dir / "bad.jsonl");
      FAIL("expected an error");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    {
      std::ofstream out(dir / "noheader.jsonl");
      out << "{\"type\":\"instance\"}\n";
    }
    CHECK_THROWS_AS(corpus::load_dataset(dir / "noheader.jsonl"), InputError);
    CHECK_THROWS_AS(corpus::load_dataset(dir / "missing.jsonl"), InputError);
  }

  TEST_CASE("duplicate instance ids are rejected") {
    TempDir dir;
    const auto labels = testing::fixture_labels();
    std::vector<corpus::RelationInstance> data = {make_instance("a", "<<X>> ((Y))"), make_instance("a", "<<X>> ((Y))")};
    corpus::save_dataset(data, labels, dir / "d.jsonl");
    CHECK_THROWS_AS(corpus::load_dataset(dir / "d.jsonl"), InputError);
  }

  TEST_CASE("predictions threshold at one half and check their length") {
    const auto labels = testing::fixture_labels();
    const auto p = corpus::make_prediction("a", {0.5, 0.49, 0.9, 0.0}, labels);
    CHECK(p.predicted_relations == corpus::LabelSet{"advise", "mechanism"});
    CHECK_THROWS_AS(corpus::make_prediction("a", {0.5}, labels), InputError);
    CHECK_THROWS_AS(corpus::make_prediction("a", {0.5, 0.2, 1.2, 0.0}, labels), InputError);

    TempDir dir;
    corpus::save_predictions(std::vector<corpus::Prediction>{p}, dir / "p.jsonl");
    const auto back = corpus::load_predictions(dir / "p.jsonl", labels);
    REQUIRE(back.size() == 1);
    CHECK(back[0].scores == p.scores);
    CHECK(back[0].predicted_relations == p.predicted_relations);
  }
}
