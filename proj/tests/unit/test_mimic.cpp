#include <doctest.h>

#include <random>

#include <algorithm>
#include <set>

#include "eacl/mimic.hpp"
#include "eacl/mock_backend.hpp"
#include "support.hpp"

using namespace eacl;
using namespace eacl::mimic;
using eacl::remediation::RecordStatus;
using eacl::taxonomy::ErrorTag;
using eacl::taxonomy::ErrorType;
using eacl::testing::make_instance;

namespace {

const corpus::LabelSpace kLabels = testing::fixture_labels();

std::vector<corpus::RelationInstance> correct_pool() {
  std::vector<corpus::RelationInstance> pool;
  const std::vector<corpus::LabelSet> sets = {{"advise"}, {"advise"}, {"advise"}, {"advise"}, {"effect"}, {"effect"},
                                              {"mechanism"}, {"int"}, {}, {"advise", "effect"}};
  for (std::size_t i = 0; i < sets.size(); ++i) pool.push_back(make_instance("c" + std::to_string(i), "<<A>> ((B))", sets[i]));
  return pool;
}

remediation::RemediationRecord kept_record(const std::string& id, taxonomy::ErrorSet types, std::vector<ErrorTag> tags) {
  remediation::RemediationRecord r;
  r.instance_id = id;
  r.status = RecordStatus::kept;
  r.error_types = std::move(types);
  r.difficulty = taxonomy::score_difficulty(r.error_types);
  r.tags = std::move(tags);
  r.solution_guidance = {"step"};
  r.enriched_sentence = "enriched " + id;
  return r;
}

}  // namespace

TEST_SUITE("mimic") {
  TEST_CASE("shuffle is a seeded permutation with a frozen sequence") {
    const auto a = shuffled_indices(10, 13);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(sorted[i] == i);
    CHECK(shuffled_indices(10, 13) == a);
    CHECK(shuffled_indices(10, 14) != a);
    CHECK(shuffled_indices(0, 1).empty());
    // Independent re-derivation of the same Fisher-Yates walk.
    std::mt19937_64 rng(13);
    std::vector<std::size_t> expect(10);
    for (std::size_t i = 0; i < 10; ++i) expect[i] = i;
    for (std::size_t i = 10; i > 1; --i) std::swap(expect[i - 1], expect[rng() % i]);
    CHECK(a == expect);
  }

  TEST_CASE("stratified sample covers every label present") {
    const auto pool = correct_pool();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = stratified_sample(pool, kLabels, 5, seed);
      REQUIRE(s.size() == 5);
      std::set<std::string> labels;
      bool empty_set = false;
      for (const auto& i : s) {
        labels.insert(i.reference_relations.begin(), i.reference_relations.end());
        empty_set = empty_set || i.reference_relations.empty();
      }
      CHECK(labels == std::set<std::string>{"advise", "effect", "mechanism", "int"});
      CHECK(empty_set);
      // Pool order is kept.
      for (std::size_t k = 1; k < s.size(); ++k) CHECK(s[k - 1].id < s[k].id);
    }
    CHECK(stratified_sample(pool, kLabels, pool.size(), 3).size() == pool.size());
    CHECK(stratified_sample(pool, kLabels, 0, 3).empty());
    CHECK_THROWS_AS(stratified_sample(pool, kLabels, pool.size() + 1, 3), InputError);
  }

  TEST_CASE("mimic set is D_rem followed by sampled correct instances") {
    const auto pool = correct_pool();
    std::vector<remediation::RemediatedInstance> d_rem = {
        {make_instance("e1", "<<A>> not ((B))", {"effect"}), "enriched e1", 1},
        {make_instance("e2", "<<A>> ((CYP3A4))", {"mechanism"}), "enriched e2", 2},
    };
    std::vector<remediation::RemediationRecord> audit = {
        kept_record("e2", {ErrorType::LackOfDomainKnowledge}, {ErrorTag::KgLookup}),
        kept_record("e1", {ErrorType::Negation}, {ErrorTag::NewNeg}),
    };
    const auto m = build_d_mimic(d_rem, audit, pool, kLabels, 3, 7);
    REQUIRE(m.size() == 5);
    CHECK(m[0].instance.id == "e1");
    CHECK(m[0].provenance == Provenance::remediated);
    CHECK(m[0].target.tags == std::vector<ErrorTag>{ErrorTag::NewNeg});
    CHECK(m[1].target.kg_needed);
    for (std::size_t i = 2; i < 5; ++i) {
      CHECK(m[i].provenance == Provenance::correct_passthrough);
      CHECK(m[i].target.error_types.empty());
      CHECK(m[i].enriched_sentence == m[i].instance.sentence);
    }
    CHECK(build_d_mimic(d_rem, audit, pool, kLabels, 3, 7).size() == 5);
    CHECK_THROWS_AS(build_d_mimic(d_rem, audit, pool, kLabels, pool.size() + 1, 7), InputError);
    auto missing = audit;
    missing.pop_back();
    CHECK_THROWS_AS(build_d_mimic(d_rem, missing, pool, kLabels, 1, 7), InputError);
    auto dropped = audit;
    dropped[1].status = RecordStatus::dropped_unverified;
    CHECK_THROWS_AS(build_d_mimic(d_rem, dropped, pool, kLabels, 1, 7), InputError);
  }

  TEST_CASE("few-shot selection walks difficulty tiers and renders a fixed block") {
    std::vector<MimicExample> ex(5);
    const int diffs[] = {3, 0, 1, 0, 2};
    for (int i = 0; i < 5; ++i) {
      ex[i].instance = make_instance("f" + std::to_string(i), "<<A" + std::to_string(i) + ">> and ((B))");
      ex[i].target.difficulty = diffs[i];
      ex[i].enriched_sentence = "ignored";
    }
    CHECK(select_fewshot(ex, 3) == std::vector<std::size_t>{1, 2, 4});
    CHECK(select_fewshot(ex, 5) == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(render_fewshot_block(ex, 0).empty());
    CHECK_THROWS_AS(render_fewshot_block(ex, 6), InputError);
    ex[2].target.error_types = {ErrorType::Negation};
    ex[2].target.tags = {ErrorTag::NewNeg};
    CHECK(render_fewshot_block(ex, 2) == testing::golden("fewshot_block.txt", render_fewshot_block(ex, 2)));
  }

  TEST_CASE("instruction records hold the original input and a JSON target") {
    MimicExample e;
    e.instance = make_instance("i1", "<<A>> not ((B))", {"effect"});
    e.enriched_sentence = "A NOT B. [###NEW_NEG]";
    e.target.error_types = {ErrorType::Negation};
    e.target.difficulty = 1;
    e.target.tags = {ErrorTag::NewNeg};
    e.target.rewritten_sentence = "A NOT B.";
    const std::vector<MimicExample> v = {e};
    const auto recs = instruction_records(v, kLabels);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0]["input"] == "Sentence: A not B\nEntity 1: A\nEntity 2: B");
    const auto out = corpus::Json::parse(recs[0]["output"].get<std::string>());
    CHECK(out["tags"] == corpus::Json::array({"[###NEW_NEG]"}));
    CHECK(MimicTarget::from_json(out).to_json() == e.target.to_json());
    CHECK(recs[0]["instruction"].get<std::string>().find("advise, effect, mechanism, int") != std::string::npos);

    testing::TempDir dir;
    save_d_mimic(v, kLabels, dir / "m.jsonl");
    const auto back = load_d_mimic(dir / "m.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0].instance == e.instance);
    CHECK(back[0].enriched_sentence == e.enriched_sentence);
    CHECK(back[0].target.to_json() == e.target.to_json());
  }

  TEST_CASE("annotation covers the whole corpus with difficulty scores") {
    backend::MockConfig mc;
    mc.knowledge_entities = {"CYP3A4"};
    mc.entity_lexicon = {"aspirin", "warfarin", "heparin", "CYP3A4"};
    mc.prose_ids = {"a3"};
    auto mock = std::make_shared<backend::MockBackend>(mc);
    gateway::TeacherGateway student(mock, kLabels);
    std::vector<corpus::RelationInstance> insts = {
        make_instance("a0", "<<aspirin>> raises ((warfarin)).", {"effect"}),
        make_instance("a1", "<<aspirin>> may not raise ((warfarin)).", {}),
        make_instance("a2", "Data on <<aspirin>> and ((warfarin)) are conflicting.", {"int"}),
        make_instance("a3", "<<aspirin>> and ((heparin)).", {"advise"}),
    };
    remediation::RemediationContext ctx;
    ctx.lexicon = mc.entity_lexicon;
    const auto out = annotate_corpus(insts, student, ctx);
    REQUIRE(out.d_aug.size() == 4);
    CHECK(out.d_aug[0].difficulty == 0);
    CHECK(out.d_aug[0].provenance == Provenance::correct_passthrough);
    CHECK(out.d_aug[1].difficulty == 3);
    CHECK(out.d_aug[1].provenance == Provenance::remediated);
    CHECK(out.d_aug[1].remediation_id == "a1");
    CHECK(out.d_aug[1].enriched_sentence.find("[###NEW_NEG] [###AMP]") != std::string::npos);
    CHECK(out.d_aug[2].provenance == Provenance::correct_passthrough);
    CHECK(out.d_aug[2].enriched_sentence == insts[2].sentence);
    CHECK(out.d_aug[3].difficulty == 0);
    CHECK(out.failures == 1);
    CHECK(out.records[3].status == RecordStatus::dropped_backend_failure);

    testing::TempDir dir;
    save_d_aug(out.d_aug, kLabels, dir / "aug.jsonl");
    const auto back = load_d_aug(dir / "aug.jsonl");
    REQUIRE(back.size() == 4);
    CHECK(back[1].remediation_id == "a1");
    CHECK(back[1].enriched_sentence == out.d_aug[1].enriched_sentence);

    auto text = testing::slurp(dir / "aug.jsonl");
    const auto pos = text.find("\"difficulty\":3");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 14, "\"difficulty\":9");
    corpus::write_text(dir / "bad.jsonl", text);
    CHECK_THROWS_AS(load_d_aug(dir / "bad.jsonl"), InputError);
  }
}
