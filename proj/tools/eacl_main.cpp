// Command-line front end for the error-aware curriculum pipeline.
//
// Exit codes: 0 success, 1 input or configuration error, 2 backend failure.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "eacl/error.hpp"
#include "eacl/lisa_planner.hpp"
#include "eacl/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitBackend = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> output;
  std::optional<std::string> cache_dir;
  std::optional<double> tau;
  std::optional<std::string> ablation;
  bool no_guidance = false;
  bool no_remediation = false;
  bool no_kg = false;
};

eacl::pipeline::PipelineConfig load_config(const Overrides& o) {
  if (o.config.empty()) throw eacl::InputError("--config is required");
  auto c = eacl::pipeline::PipelineConfig::load(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.backend) {
    if (*o.backend != "mock" && *o.backend != "remote") throw eacl::InputError("--backend must be mock or remote");
    c.teacher.kind = *o.backend;
    if (c.student) c.student->kind = *o.backend;
  }
  if (o.output) c.output_dir = std::filesystem::absolute(*o.output);
  if (o.cache_dir) c.cache_dir = std::filesystem::absolute(*o.cache_dir);
  if (o.tau) c.tau = *o.tau;
  if (o.ablation) {
    static const std::map<std::string, eacl::remediation::AblationFlags> presets = {
        {"all", {true, true, true}},
        {"guidance-only", {true, false, false}},
        {"remediation-only", {false, true, false}},
        {"kg-only", {false, false, true}},
    };
    c.ablation = presets.at(*o.ablation);
  }
  if (o.no_guidance) c.ablation.enable_guidance = false;
  if (o.no_remediation) c.ablation.enable_remediation = false;
  if (o.no_kg) c.ablation.enable_kg = false;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eacl: error-aware teacher-student curriculum pipeline for relation classification"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  std::string log_level = "info";
  app.add_option("-c,--config", o.config, "Pipeline configuration (JSON)");
  app.add_option("--seed", o.seed, "Seed for sampling");
  app.add_option("--backend", o.backend, "Override backend kind: mock or remote");
  app.add_option("-o,--output", o.output, "Override the output directory");
  app.add_option("--cache-dir", o.cache_dir, "Override the response cache directory");
  app.add_option("--tau", o.tau, "Loss threshold for selecting error instances");
  app.add_option("--ablation", o.ablation, "Ablation preset")
      ->check(CLI::IsMember({"all", "guidance-only", "remediation-only", "kg-only"}));
  app.add_flag("--no-guidance", o.no_guidance, "Leave solution guidance out of enriched sentences");
  app.add_flag("--no-remediation", o.no_remediation, "Ignore rewrites and tag tokens");
  app.add_flag("--no-kg", o.no_kg, "Do not retrieve knowledge-graph facts");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::map<std::string, CLI::App*> phases;
  for (auto [name, help] : {std::pair{"select", "Compute losses and split D_error / D_correct"},
                            std::pair{"analyze", "Classify the error types of D_error with the teacher"},
                            std::pair{"remediate", "Remediate, enrich and verify D_error into D_rem"},
                            std::pair{"mimic", "Build D_mimic, few-shot exemplars and the instruction-tuning file"},
                            std::pair{"annotate", "Annotate the training corpus with the student into D_aug"},
                            std::pair{"curriculum", "Bucket D_aug and emit the staged training plan"},
                            std::pair{"run-all", "Run every phase in order"}}) {
    phases[name] = app.add_subcommand(name, help);
  }

  auto* report_cmd = app.add_subcommand("report", "Summarize an output directory");
  std::string report_dir;
  report_cmd->add_option("dir", report_dir, "Output directory (defaults to the configured one)");

  auto* lisa_cmd = app.add_subcommand("lisa", "Select layers to fine-tune from per-layer importance scores");
  std::string importance_path, plan_path;
  std::size_t lisa_k = 8;
  double lambda = eacl::lisa::kDefaultRegularization;
  lisa_cmd->add_option("--importance", importance_path, "TSV layer_index<TAB>score")->required()->check(CLI::ExistingFile);
  lisa_cmd->add_option("-k", lisa_k, "Number of layers to select")->check(CLI::PositiveNumber);
  lisa_cmd->add_option("--lambda", lambda, "Uniform diagonal regularization weight")->check(CLI::NonNegativeNumber);
  lisa_cmd->add_option("--out", plan_path, "Write the plan JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (lisa_cmd->parsed()) {
      const auto plan = eacl::lisa::make_plan(eacl::lisa::load_importance(importance_path), lisa_k, lambda);
      if (plan_path.empty()) {
        std::cout << plan.to_json().dump(2) << "\n";
      } else {
        eacl::lisa::save_plan(plan, plan_path);
      }
      return kExitOk;
    }
    if (report_cmd->parsed()) {
      std::filesystem::path dir = report_dir;
      if (dir.empty()) dir = o.output ? std::filesystem::path(*o.output) : load_config(o).output_dir;
      std::cout << eacl::pipeline::report(dir);
      return kExitOk;
    }

    eacl::pipeline::Pipeline pipeline(load_config(o));
    if (phases["select"]->parsed()) pipeline.select();
    if (phases["analyze"]->parsed()) pipeline.analyze();
    if (phases["remediate"]->parsed()) pipeline.remediate();
    if (phases["mimic"]->parsed()) pipeline.mimic();
    if (phases["annotate"]->parsed()) pipeline.annotate();
    if (phases["curriculum"]->parsed()) pipeline.curriculum();
    if (phases["run-all"]->parsed()) pipeline.run_all();
    return kExitOk;
  } catch (const eacl::BackendError& e) {
    spdlog::error("{}", e.what());
    return kExitBackend;
  } catch (const eacl::InputError& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  }
}
