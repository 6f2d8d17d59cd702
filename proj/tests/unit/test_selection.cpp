#include <doctest.h>

#include <cmath>
#include <numeric>

#include "eacl/error.hpp"
#include "eacl/selection.hpp"
#include "support.hpp"

using namespace eacl;
using eacl::testing::make_instance;

TEST_SUITE("selection") {
  TEST_CASE("loss of a perfect prediction is near zero and symmetric cases match") {
    const std::vector<double> y = {1, 0, 1};
    CHECK(selection::instance_loss(y, std::vector<double>{1, 0, 1}) == doctest::Approx(3e-12).epsilon(1e-3));
    CHECK(selection::instance_loss(y, std::vector<double>{0.5, 0.5, 0.5}) == doctest::Approx(3 * std::log(2.0)));
  }

  TEST_CASE("clamping keeps the loss finite") {
    const double worst = selection::instance_loss(std::vector<double>{1}, std::vector<double>{0.0});
    CHECK(std::isfinite(worst));
    CHECK(worst == doctest::Approx(-std::log(1e-12)));
    CHECK(selection::instance_loss(std::vector<double>{0}, std::vector<double>{1.0}, 1e-6) ==
          doctest::Approx(-std::log(1e-6)));
  }

  TEST_CASE("length mismatch and bad epsilon are input errors") {
    CHECK_THROWS_AS(selection::instance_loss(std::vector<double>{1, 0}, std::vector<double>{0.5}), InputError);
    selection::SelectionConfig bad;
    bad.epsilon = 0.6;
    CHECK_THROWS_AS(bad.validate(), InputError);
  }

  TEST_CASE("default tau is mean plus one population standard deviation") {
    const std::vector<double> losses = {0.5, 1.5, 2.0, 4.0};
    const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / 4;
    double var = 0;
    for (double l : losses) var += (l - mean) * (l - mean);
    CHECK(selection::default_tau(losses) == doctest::Approx(mean + std::sqrt(var / 4)));
    CHECK(selection::default_tau(std::vector<double>{}) == 0.0);
  }

  TEST_CASE("partition is stable and uses the strict threshold") {
    const auto labels = testing::fixture_labels();
    std::vector<corpus::RelationInstance> insts = {
        make_instance("a", "<<X>> ((Y))", {"advise"}),
        make_instance("b", "<<X>> ((Y))", {"effect"}),
        make_instance("c", "<<X>> ((Y))", {}),
    };
    std::vector<corpus::Prediction> preds = {
        corpus::make_prediction("c", {0.5, 0.5, 0.5, 0.5}, labels),
        corpus::make_prediction("a", {0.5, 0.5, 0.5, 0.5}, labels),
        corpus::make_prediction("b", {0.9, 0.1, 0.1, 0.1}, labels),
    };
    selection::SelectionConfig cfg;
    const double loss_c = 4 * std::log(2.0);
    cfg.tau = loss_c;  // "a" and "c" sit exactly on the threshold and stay correct
    const auto r = selection::partition(insts, preds, labels, cfg);
    REQUIRE(r.records.size() == 3);
    CHECK(r.records[0].instance_id == "a");
    CHECK(r.records[0].loss == loss_c);
    CHECK(r.records[2].loss == loss_c);
    CHECK_FALSE(r.records[1].correct);
    REQUIRE(r.error.size() == 1);
    CHECK(r.error[0].id == "b");
    CHECK(r.correct.size() == 2);
    CHECK(r.correct[0].id == "a");
    CHECK(r.tau == loss_c);
  }

  TEST_CASE("missing and duplicate predictions are rejected") {
    const auto labels = testing::fixture_labels();
    std::vector<corpus::RelationInstance> insts = {make_instance("a", "<<X>> ((Y))")};
    std::vector<corpus::Prediction> none;
    CHECK_THROWS_AS(selection::partition(insts, none, labels, {}), InputError);
    std::vector<corpus::Prediction> twice = {corpus::make_prediction("a", {0, 0, 0, 0}, labels),
                                             corpus::make_prediction("a", {0, 0, 0, 0}, labels)};
    CHECK_THROWS_AS(selection::partition(insts, twice, labels, {}), InputError);
  }

  TEST_CASE("loss report round trip") {
    testing::TempDir dir;
    std::vector<selection::LossRecord> records = {{"a", 0.25, true}, {"b", 3.5, false}};
    selection::save_loss_report(records, dir / "l.jsonl");
    const auto back = selection::load_loss_report(dir / "l.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[1].instance_id == "b");
    CHECK(back[1].loss == 3.5);
    CHECK_FALSE(back[1].correct);
  }

  TEST_CASE("fixture split matches the planted losses") {
    corpus::LabelSpace labels;
    const auto insts = corpus::load_dataset(testing::fixture_dir() / "corpus.jsonl", &labels);
    const auto preds = corpus::load_predictions(testing::fixture_dir() / "predictions.jsonl", labels);
    selection::SelectionConfig cfg;
    cfg.tau = 1.0;
    const auto r = selection::partition(insts, preds, labels, cfg);
    CHECK(r.error.size() == 25);
    CHECK(r.correct.size() == 26);
    for (const auto& inst : r.error) CHECK(inst.id[0] == 'E');
  }
}
