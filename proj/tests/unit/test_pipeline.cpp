#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "eacl/error.hpp"
#include "eacl/pipeline.hpp"
#include "support.hpp"

using namespace eacl;
using namespace eacl::pipeline;
namespace fs = std::filesystem;
using corpus::Json;

namespace {

// Fixture config with absolute input paths so it can live anywhere.
Json portable_config(const fs::path& output_dir) {
  auto j = Json::parse(testing::slurp(testing::fixture_dir() / "config.json"));
  for (const char* key : {"corpus", "predictions", "kg_triples", "embeddings"}) {
    j[key] = (testing::fixture_dir() / j[key].get<std::string>()).string();
  }
  j["lisa"]["importance"] = (testing::fixture_dir() / "lisa_importance.tsv").string();
  j["output_dir"] = output_dir.string();
  return j;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EACL_CLI_PATH) + " " + args + " --log-level off >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config paths resolve against the config directory") {
    const auto c = PipelineConfig::load(testing::fixture_dir() / "config.json");
    CHECK(c.corpus == testing::fixture_dir() / "corpus.jsonl");
    CHECK(c.kg_triples == testing::fixture_dir() / "kg_triples.tsv");
    CHECK(c.tau == 1.0);
    CHECK(c.teacher.mock.mislabel_ids.count("E18") == 1);
    CHECK(c.cache_directory() == c.output_dir / "cache");
    REQUIRE(c.lisa.has_value());
    CHECK(c.lisa->k == 8);
  }

  TEST_CASE("config validation") {
    testing::TempDir dir;
    auto j = portable_config(dir.path());
    j["unexpected_field"] = 1;
    CHECK_NOTHROW(PipelineConfig::from_json(j, dir.path()));

    auto bad_kind = portable_config(dir.path());
    bad_kind["backend"]["kind"] = "carrier-pigeon";
    CHECK_THROWS_AS(PipelineConfig::from_json(bad_kind, dir.path()), InputError);

    auto no_corpus = portable_config(dir.path());
    no_corpus.erase("corpus");
    CHECK_THROWS_AS(PipelineConfig::from_json(no_corpus, dir.path()), InputError);

    CHECK_THROWS_AS(PipelineConfig::load(dir / "absent.json"), InputError);
  }

  TEST_CASE("phases need their upstream artifacts") {
    testing::TempDir dir;
    Pipeline p(testing::fixture_config(dir.path()));
    try {
      p.analyze();
      FAIL("analyze ran without select output");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("run `eacl select` first") != std::string::npos);
    }
    CHECK_THROWS_AS(p.curriculum(), InputError);
    CHECK_THROWS_AS(p.mimic(), InputError);
  }

  TEST_CASE("separate phase runs match run_all and a warm cache makes no calls") {
    testing::TempDir a, b;
    {
      Pipeline whole(testing::fixture_config(a.path()));
      const auto summaries = whole.run_all();
      CHECK(summaries.size() == 6);
    }
    for (const char* phase : {"select", "analyze", "remediate", "mimic", "annotate", "curriculum"}) {
      Pipeline p(testing::fixture_config(b.path()));
      const std::string name = phase;
      if (name == "select") p.select();
      if (name == "analyze") p.analyze();
      if (name == "remediate") p.remediate();
      if (name == "mimic") p.mimic();
      if (name == "annotate") p.annotate();
      if (name == "curriculum") p.curriculum();
    }
    for (const char* rel : {"select/d_error.jsonl", "remediate/d_rem.jsonl", "mimic/d_mimic.jsonl",
                            "annotate/d_aug.jsonl", "curriculum/training_plan.json"}) {
      CAPTURE(rel);
      CHECK(testing::slurp(a / rel) == testing::slurp(b / rel));
    }

    const auto manifest = Json::parse(testing::slurp(a / "run_manifest.json"));
    CHECK(manifest["backend_calls"].get<std::size_t>() > 0);
    Pipeline again(testing::fixture_config(a.path()));
    again.run_all();
    const auto warm = Json::parse(testing::slurp(a / "run_manifest.json"));
    CHECK(warm["backend_calls"] == 0);
    CHECK(warm["cache_hits"].get<std::size_t>() > 0);

    const auto text = report(a.path());
    for (const char* phase : {"select", "analyze", "remediate", "mimic", "annotate", "curriculum"}) {
      CHECK(text.find(phase) != std::string::npos);
    }
    CHECK_THROWS_AS(report(a / "nowhere"), InputError);
  }

  TEST_CASE("transport failures surface after artifacts are written") {
    testing::TempDir dir;
    auto dead = std::make_shared<testing::ScriptedBackend>(
        [](const Json&, const std::string&) -> std::string { throw BackendError("connection refused"); });
    Pipeline p(testing::fixture_config(dir.path()), dead);
    p.select();
    CHECK_THROWS_AS(p.analyze(), BackendError);
    CHECK(fs::exists(dir / "analyze/annotations.jsonl"));
    CHECK(fs::exists(dir / "analyze/manifest.json"));
    CHECK(dead->calls() > 0);
    // Failed requests are not cached, so the next run retries them.
    Pipeline retry(testing::fixture_config(dir.path()));
    CHECK_NOTHROW(retry.analyze());
  }

  TEST_CASE("cli exit codes") {
    testing::TempDir dir;
    const auto cfg = dir / "config.json";
    corpus::write_text(cfg, portable_config(dir / "out").dump(2));

    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("") == 1);
    CHECK(run_cli("select") == 1);
    CHECK(run_cli("analyze --config " + cfg.string()) == 1);
    CHECK(run_cli("select --config " + (dir / "absent.json").string()) == 1);
    CHECK(run_cli("run-all --ablation kg-only --config " + cfg.string()) == 0);
    CHECK(fs::exists(dir / "out/curriculum/training_plan.json"));
    const auto m = Json::parse(testing::slurp(dir / "out/remediate/manifest.json"));
    CHECK(m["config"]["ablation"]["enable_guidance"] == false);
    CHECK(m["config"]["ablation"]["enable_kg"] == true);
    CHECK(run_cli("report " + (dir / "out").string()) == 0);

    auto remote = portable_config(dir / "remote-out");
    remote["backend"] = {{"kind", "remote"},
                         {"remote", {{"base_url", "http://127.0.0.1:1/v1"}, {"max_retries", 0}, {"backoff_ms", 1},
                                     {"timeout_seconds", 1.0}}}};
    const auto remote_cfg = dir / "remote.json";
    corpus::write_text(remote_cfg, remote.dump(2));
    CHECK(run_cli("run-all --config " + remote_cfg.string()) == 2);
    CHECK(fs::exists(dir / "remote-out/analyze/annotations.jsonl"));

    const auto plan = dir / "lisa.json";
    CHECK(run_cli("lisa -k 4 --importance " + (testing::fixture_dir() / "lisa_importance.tsv").string() + " --out " +
                  plan.string()) == 0);
    CHECK(Json::parse(testing::slurp(plan))["selected"].size() == 4);
    CHECK(run_cli("lisa -k 0 --importance " + (testing::fixture_dir() / "lisa_importance.tsv").string()) == 1);
  }
}
