#include "eacl/pipeline.hpp"

#include <array>
#include <ctime>
#include <map>
#include <set>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "eacl/error.hpp"
#include "eacl/hashing.hpp"
#include "eacl/lisa_planner.hpp"
#include "eacl/mimic.hpp"
#include "eacl/selection.hpp"
#include "eacl/teacher_gateway.hpp"

namespace eacl::pipeline {

namespace fs = std::filesystem;
using corpus::Json;

namespace {

constexpr std::array<std::string_view, 6> kPhases = {"select", "analyze", "remediate", "mimic", "annotate", "curriculum"};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(fmt::format("config field '{}' has the wrong type", key));
  }
}

Json file_entry(const fs::path& path) {
  Json j;
  j["path"] = path.string();
  j["sha256"] = sha256_file(path);
  return j;
}

fs::path require(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    throw InputError(fmt::format("missing {}: run `eacl {}` first", path.string(), producer));
  }
  return path;
}

std::string utc_timestamp() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
}

gateway::GatewayConfig gateway_config(const BackendSettings& b, std::size_t delta) {
  gateway::GatewayConfig g;
  g.decoding = b.decoding;
  g.max_concurrent = b.max_concurrent;
  g.delta = delta;
  return g;
}

void fail_on_transport(std::size_t failures, std::string_view phase) {
  if (failures > 0) {
    throw BackendError(fmt::format("{}: {} backend requests failed at the transport level; artifacts were written "
                                   "with those instances dropped",
                                   phase, failures));
  }
}

}  // namespace

Json BackendSettings::to_json() const {
  Json j;
  j["kind"] = kind;
  j["max_concurrent"] = max_concurrent;
  j["temperature"] = decoding.temperature;
  j["max_tokens"] = decoding.max_tokens;
  j["mock"] = mock.to_json();
  Json r;
  r["base_url"] = remote.base_url;
  r["model"] = remote.model;
  r["api_key_env"] = remote.api_key_env;
  r["timeout_seconds"] = remote.timeout_seconds;
  r["max_retries"] = remote.max_retries;
  r["backoff_ms"] = remote.backoff_ms;
  j["remote"] = std::move(r);
  return j;
}

BackendSettings BackendSettings::from_json(const Json& j) {
  BackendSettings b;
  b.kind = get_or<std::string>(j, "kind", b.kind);
  if (b.kind != "mock" && b.kind != "remote") throw InputError(fmt::format("unknown backend kind '{}'", b.kind));
  b.max_concurrent = get_or<std::size_t>(j, "max_concurrent", b.max_concurrent);
  if (b.max_concurrent == 0) throw InputError("max_concurrent must be at least 1");
  b.decoding.temperature = get_or<double>(j, "temperature", b.decoding.temperature);
  b.decoding.max_tokens = get_or<int>(j, "max_tokens", b.decoding.max_tokens);
  if (j.contains("mock")) b.mock = backend::MockConfig::from_json(j.at("mock"));
  if (j.contains("remote")) {
    const Json& r = j.at("remote");
    b.remote.base_url = get_or<std::string>(r, "base_url", b.remote.base_url);
    b.remote.model = get_or<std::string>(r, "model", b.remote.model);
    b.remote.api_key_env = get_or<std::string>(r, "api_key_env", b.remote.api_key_env);
    b.remote.timeout_seconds = get_or<double>(r, "timeout_seconds", b.remote.timeout_seconds);
    b.remote.max_retries = get_or<int>(r, "max_retries", b.remote.max_retries);
    b.remote.backoff_ms = get_or<int>(r, "backoff_ms", b.remote.backoff_ms);
  }
  return b;
}

PipelineConfig PipelineConfig::from_json(const Json& j, const fs::path& base) {
  static const std::set<std::string, std::less<>> known = {
      "corpus",      "predictions", "kg_triples",      "embeddings",         "output_dir", "cache_dir",
      "tau",         "epsilon",     "delta",           "kg_k",               "sample_size", "fewshot_k",
      "bucket_spec", "epochs_per_stage", "reverse_curriculum", "seed", "backend", "student_backend",
      "ablation",    "lisa"};
  if (!j.is_object()) throw InputError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) spdlog::warn("config: ignoring unknown field '{}'", key);
  }
  PipelineConfig c;
  auto path_field = [&](const char* key) -> fs::path {
    if (!j.contains(key)) throw InputError(fmt::format("config is missing '{}'", key));
    return resolve(base, get_or<std::string>(j, key, ""));
  };
  auto optional_path = [&](const char* key) -> std::optional<fs::path> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return resolve(base, get_or<std::string>(j, key, ""));
  };
  c.corpus = path_field("corpus");
  c.predictions = path_field("predictions");
  c.output_dir = path_field("output_dir");
  c.kg_triples = optional_path("kg_triples");
  c.embeddings = optional_path("embeddings");
  if (c.kg_triples.has_value() != c.embeddings.has_value()) {
    throw InputError("config needs both kg_triples and embeddings, or neither");
  }
  c.cache_dir = optional_path("cache_dir");
  if (j.contains("tau") && !j.at("tau").is_null()) c.tau = get_or<double>(j, "tau", 0.0);
  c.epsilon = get_or<double>(j, "epsilon", c.epsilon);
  c.delta = get_or<std::size_t>(j, "delta", c.delta);
  c.kg_k = get_or<std::size_t>(j, "kg_k", c.kg_k);
  if (j.contains("sample_size") && !j.at("sample_size").is_null()) c.sample_size = get_or<std::size_t>(j, "sample_size", 0);
  c.fewshot_k = get_or<std::size_t>(j, "fewshot_k", c.fewshot_k);
  if (j.contains("bucket_spec")) c.bucket_spec = curriculum::BucketSpec::from_json(j.at("bucket_spec"));
  c.epochs_per_stage = get_or<std::size_t>(j, "epochs_per_stage", c.epochs_per_stage);
  c.reverse_curriculum = get_or<bool>(j, "reverse_curriculum", c.reverse_curriculum);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("backend")) c.teacher = BackendSettings::from_json(j.at("backend"));
  if (j.contains("student_backend")) c.student = BackendSettings::from_json(j.at("student_backend"));
  if (j.contains("ablation")) c.ablation = remediation::AblationFlags::from_json(j.at("ablation"));
  if (j.contains("lisa") && !j.at("lisa").is_null()) {
    const Json& l = j.at("lisa");
    LisaSettings s;
    if (!l.contains("importance")) throw InputError("lisa settings need an 'importance' file");
    s.importance = resolve(base, get_or<std::string>(l, "importance", ""));
    s.k = get_or<std::size_t>(l, "k", s.k);
    s.lambda = get_or<double>(l, "lambda", s.lambda);
    c.lisa = s;
  }
  selection::SelectionConfig{c.tau, c.epsilon}.validate();
  if (c.epochs_per_stage == 0) throw InputError("epochs_per_stage must be at least 1");
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(corpus::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(j, fs::absolute(path).parent_path());
}

Json PipelineConfig::to_json() const {
  Json j;
  j["corpus"] = corpus.string();
  j["predictions"] = predictions.string();
  j["kg_triples"] = kg_triples ? Json(kg_triples->string()) : Json(nullptr);
  j["embeddings"] = embeddings ? Json(embeddings->string()) : Json(nullptr);
  j["output_dir"] = output_dir.string();
  j["cache_dir"] = cache_directory().string();
  j["tau"] = tau ? Json(*tau) : Json(nullptr);
  j["epsilon"] = epsilon;
  j["delta"] = delta;
  j["kg_k"] = kg_k;
  j["sample_size"] = sample_size ? Json(*sample_size) : Json(nullptr);
  j["fewshot_k"] = fewshot_k;
  j["bucket_spec"] = bucket_spec.to_json();
  j["epochs_per_stage"] = epochs_per_stage;
  j["reverse_curriculum"] = reverse_curriculum;
  j["seed"] = seed;
  j["backend"] = teacher.to_json();
  j["student_backend"] = student ? student->to_json() : Json(nullptr);
  j["ablation"] = ablation.to_json();
  if (lisa) {
    Json l;
    l["importance"] = lisa->importance.string();
    l["k"] = lisa->k;
    l["lambda"] = lisa->lambda;
    j["lisa"] = std::move(l);
  } else {
    j["lisa"] = nullptr;
  }
  return j;
}

fs::path PipelineConfig::cache_directory() const { return cache_dir ? *cache_dir : output_dir / "cache"; }

fs::path PipelineConfig::phase_dir(std::string_view phase) const { return output_dir / std::string(phase); }

std::shared_ptr<backend::ModelBackend> make_backend(const BackendSettings& s) {
  if (s.kind == "remote") return std::make_shared<backend::RemoteBackend>(s.remote);
  return std::make_shared<backend::MockBackend>(s.mock);
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<backend::ModelBackend> teacher,
                   std::shared_ptr<backend::ModelBackend> student)
    : config_(std::move(config)), teacher_raw_(std::move(teacher)), student_raw_(std::move(student)) {}

corpus::LabelSpace Pipeline::labels() {
  if (!labels_) train_instances();
  return *labels_;
}

std::vector<corpus::RelationInstance> Pipeline::train_instances() {
  if (!train_) {
    corpus::LabelSpace labels;
    auto all = corpus::load_dataset(config_.corpus, &labels);
    std::vector<corpus::RelationInstance> train;
    for (auto& inst : all) {
      if (inst.split == corpus::Split::train) train.push_back(std::move(inst));
    }
    labels_ = std::move(labels);
    train_ = std::move(train);
  }
  return *train_;
}

const kg::KnowledgeGraph* Pipeline::graph() {
  if (!graph_loaded_) {
    if (config_.kg_triples && config_.embeddings) graph_ = kg::load_kg(*config_.kg_triples, *config_.embeddings);
    graph_loaded_ = true;
  }
  return graph_ ? &*graph_ : nullptr;
}

remediation::RemediationContext Pipeline::context() {
  remediation::RemediationContext ctx;
  ctx.graph = graph();
  ctx.kg_k = config_.kg_k;
  ctx.delta = config_.delta;
  if (ctx.graph) ctx.lexicon = kg::vocabulary(*ctx.graph);
  ctx.flags = config_.ablation;
  return ctx;
}

void Pipeline::plant_gold(backend::ModelBackend& raw) {
  auto* mock = dynamic_cast<backend::MockBackend*>(&raw);
  if (!mock) return;
  for (const auto& inst : train_instances()) mock->plant_gold(inst.id, inst.reference_relations);
}

std::shared_ptr<backend::CachingBackend> Pipeline::teacher() {
  if (!teacher_) {
    if (!cache_) cache_ = std::make_shared<backend::ResponseCache>(config_.cache_directory());
    if (!teacher_raw_) {
      BackendSettings settings = config_.teacher;
      if (settings.kind == "mock" && settings.mock.entity_lexicon.empty() && graph()) {
        settings.mock.entity_lexicon = kg::vocabulary(*graph());
      }
      teacher_raw_ = make_backend(settings);
    }
    plant_gold(*teacher_raw_);
    teacher_ = std::make_shared<backend::CachingBackend>(teacher_raw_, cache_);
  }
  return teacher_;
}

std::shared_ptr<backend::CachingBackend> Pipeline::student() {
  if (!student_) {
    if (!student_raw_ && !config_.student) {
      student_ = teacher();
      return student_;
    }
    if (!cache_) cache_ = std::make_shared<backend::ResponseCache>(config_.cache_directory());
    if (!student_raw_) {
      BackendSettings settings = *config_.student;
      if (settings.kind == "mock" && settings.mock.entity_lexicon.empty() && graph()) {
        settings.mock.entity_lexicon = kg::vocabulary(*graph());
      }
      student_raw_ = make_backend(settings);
    }
    plant_gold(*student_raw_);
    student_ = std::make_shared<backend::CachingBackend>(student_raw_, cache_);
  }
  return student_;
}

std::pair<std::size_t, std::size_t> Pipeline::usage() const {
  std::size_t calls = 0;
  std::size_t hits = 0;
  if (teacher_) {
    calls += teacher_->misses();
    hits += teacher_->hits();
  }
  if (student_ && student_ != teacher_) {
    calls += student_->misses();
    hits += student_->hits();
  }
  return {calls, hits};
}

void Pipeline::finish(PhaseSummary& summary, const Json& inputs, const Json& outputs,
                      std::pair<std::size_t, std::size_t> before) {
  const auto now = usage();
  summary.backend_calls = now.first - before.first;
  summary.cache_hits = now.second - before.second;
  Json m;
  m["phase"] = summary.phase;
  m["timestamp"] = utc_timestamp();
  m["seed"] = config_.seed;
  m["config"] = config_.to_json();
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["counts"] = summary.counts;
  Json b;
  b["teacher"] = teacher_ ? Json(teacher_->name()) : Json(nullptr);
  b["student"] = student_ ? Json(student_->name()) : Json(nullptr);
  b["calls"] = summary.backend_calls;
  b["cache_hits"] = summary.cache_hits;
  m["backend"] = std::move(b);
  corpus::write_text(config_.phase_dir(summary.phase) / "manifest.json", m.dump(2) + "\n");
  spdlog::info("{}: {} (backend calls {}, cache hits {})", summary.phase, summary.counts.dump(), summary.backend_calls,
               summary.cache_hits);
}

PhaseSummary Pipeline::select() {
  PhaseSummary s{"select"};
  const auto before = usage();
  const auto labels = this->labels();
  const auto train = train_instances();
  const auto predictions = corpus::load_predictions(config_.predictions, labels);
  const auto result = selection::partition(train, predictions, labels, selection::SelectionConfig{config_.tau, config_.epsilon});

  const fs::path dir = config_.phase_dir("select");
  selection::save_loss_report(result.records, dir / "loss_report.jsonl");
  corpus::save_dataset(result.error, labels, dir / "d_error.jsonl");
  corpus::save_dataset(result.correct, labels, dir / "d_correct.jsonl");

  std::size_t exact = 0;
  for (const auto& r : result.records) exact += r.correct ? 1 : 0;
  s.counts["train"] = train.size();
  s.counts["d_error"] = result.error.size();
  s.counts["d_correct"] = result.correct.size();
  s.counts["exact_match_predictions"] = exact;
  s.counts["tau"] = result.tau;
  finish(s, {{"corpus", file_entry(config_.corpus)}, {"predictions", file_entry(config_.predictions)}},
         {{"loss_report", file_entry(dir / "loss_report.jsonl")},
          {"d_error", file_entry(dir / "d_error.jsonl")},
          {"d_correct", file_entry(dir / "d_correct.jsonl")}},
         before);
  return s;
}

PhaseSummary Pipeline::analyze() {
  PhaseSummary s{"analyze"};
  const fs::path d_error_path = require(config_.phase_dir("select") / "d_error.jsonl", "select");
  const auto labels = this->labels();
  const auto d_error = corpus::load_dataset(d_error_path, labels);
  gateway::TeacherGateway gateway(teacher(), labels, gateway_config(config_.teacher, config_.delta));
  const auto before = usage();
  const auto analyses = remediation::analyze(d_error, gateway);

  std::vector<Json> lines;
  std::size_t failures = 0, transport = 0, with_errors = 0, discarded = 0;
  std::map<std::string, std::size_t> type_freq;
  for (const auto& a : analyses) {
    lines.push_back(remediation::to_json(a));
    if (!a.annotation) {
      ++failures;
      transport += a.transport_failure ? 1 : 0;
      continue;
    }
    if (!a.annotation->error_types.empty()) ++with_errors;
    if (a.annotation->ambiguous_discard) ++discarded;
    for (const auto& t : taxonomy::to_strings(a.annotation->error_types)) ++type_freq[t];
  }
  const fs::path out = config_.phase_dir("analyze") / "annotations.jsonl";
  corpus::write_jsonl(out, lines);
  s.counts["analyzed"] = analyses.size();
  s.counts["failures"] = failures;
  s.counts["with_errors"] = with_errors;
  s.counts["marked_ambiguous"] = discarded;
  s.counts["error_types"] = type_freq;
  finish(s, {{"d_error", file_entry(d_error_path)}}, {{"annotations", file_entry(out)}}, before);
  fail_on_transport(transport, "analyze");
  return s;
}

PhaseSummary Pipeline::remediate() {
  PhaseSummary s{"remediate"};
  const fs::path d_error_path = require(config_.phase_dir("select") / "d_error.jsonl", "select");
  const fs::path analysis_path = require(config_.phase_dir("analyze") / "annotations.jsonl", "analyze");
  const auto labels = this->labels();
  const auto d_error = corpus::load_dataset(d_error_path, labels);
  std::vector<remediation::AnalysisRecord> analyses;
  for (const auto& j : corpus::read_jsonl(analysis_path)) analyses.push_back(remediation::analysis_from_json(j));
  const auto ctx = context();
  gateway::TeacherGateway gateway(teacher(), labels, gateway_config(config_.teacher, config_.delta));
  const auto before = usage();
  const auto outcome = remediation::remediate_all(d_error, analyses, gateway, ctx);

  const fs::path dir = config_.phase_dir("remediate");
  remediation::save_d_rem(outcome.d_rem, labels, dir / "d_rem.jsonl");
  remediation::save_audit_log(outcome.records, dir / "audit.jsonl");
  using remediation::RecordStatus;
  s.counts["d_error"] = d_error.size();
  s.counts["d_rem"] = outcome.d_rem.size();
  s.counts["kept"] = outcome.count(RecordStatus::kept);
  s.counts["discarded_ambiguous"] = outcome.count(RecordStatus::discarded_ambiguous);
  s.counts["dropped_unverified"] = outcome.count(RecordStatus::dropped_unverified);
  s.counts["dropped_backend_failure"] = outcome.count(RecordStatus::dropped_backend_failure);
  Json inputs = {{"d_error", file_entry(d_error_path)}, {"annotations", file_entry(analysis_path)}};
  if (config_.kg_triples) {
    inputs["kg_triples"] = file_entry(*config_.kg_triples);
    inputs["embeddings"] = file_entry(*config_.embeddings);
  }
  finish(s, inputs, {{"d_rem", file_entry(dir / "d_rem.jsonl")}, {"audit", file_entry(dir / "audit.jsonl")}}, before);
  fail_on_transport(outcome.transport_failures, "remediate");
  return s;
}

PhaseSummary Pipeline::mimic() {
  PhaseSummary s{"mimic"};
  const auto before = usage();
  const fs::path d_rem_path = require(config_.phase_dir("remediate") / "d_rem.jsonl", "remediate");
  const fs::path audit_path = require(config_.phase_dir("remediate") / "audit.jsonl", "remediate");
  const fs::path d_correct_path = require(config_.phase_dir("select") / "d_correct.jsonl", "select");
  const auto labels = this->labels();
  const auto d_rem = remediation::load_d_rem(d_rem_path);
  const auto audit = remediation::load_audit_log(audit_path);
  const auto d_correct = corpus::load_dataset(d_correct_path, labels);

  std::size_t sample_size = 0;
  if (config_.sample_size) {
    sample_size = *config_.sample_size;
  } else {
    sample_size = std::min(d_rem.size(), d_correct.size());
    if (sample_size < d_rem.size()) {
      spdlog::warn("mimic: only {} correct instances available for a {}-instance D_rem", d_correct.size(), d_rem.size());
    }
  }
  const auto examples = mimic::build_d_mimic(d_rem, audit, d_correct, labels, sample_size, config_.seed);
  const std::size_t k = std::min(config_.fewshot_k, examples.size());
  const std::string fewshot = mimic::render_fewshot_block(examples, k);

  const fs::path dir = config_.phase_dir("mimic");
  mimic::save_d_mimic(examples, labels, dir / "d_mimic.jsonl");
  const auto records = mimic::instruction_records(examples, labels);
  corpus::write_jsonl(dir / "instruction_tuning.jsonl", records);
  corpus::write_text(dir / "fewshot.txt", fewshot);
  s.counts["d_rem"] = d_rem.size();
  s.counts["sample_size"] = sample_size;
  s.counts["d_mimic"] = examples.size();
  s.counts["fewshot_k"] = k;
  finish(s,
         {{"d_rem", file_entry(d_rem_path)}, {"audit", file_entry(audit_path)}, {"d_correct", file_entry(d_correct_path)}},
         {{"d_mimic", file_entry(dir / "d_mimic.jsonl")},
          {"instruction_tuning", file_entry(dir / "instruction_tuning.jsonl")},
          {"fewshot", file_entry(dir / "fewshot.txt")}},
         before);
  return s;
}

PhaseSummary Pipeline::annotate() {
  PhaseSummary s{"annotate"};
  const fs::path fewshot_path = require(config_.phase_dir("mimic") / "fewshot.txt", "mimic");
  const std::string fewshot = corpus::read_text(fewshot_path);
  const auto labels = this->labels();
  const auto train = train_instances();
  const auto ctx = context();
  const auto& student_settings = config_.student ? *config_.student : config_.teacher;
  gateway::TeacherGateway gateway(student(), labels, gateway_config(student_settings, config_.delta));
  const auto before = usage();
  const auto outcome = mimic::annotate_corpus(train, gateway, ctx, fewshot);

  const fs::path dir = config_.phase_dir("annotate");
  mimic::save_d_aug(outcome.d_aug, labels, dir / "d_aug.jsonl");
  remediation::save_audit_log(outcome.records, dir / "audit.jsonl");
  std::array<std::size_t, 6> histogram{};
  std::size_t remediated = 0, with_facts = 0;
  for (const auto& a : outcome.d_aug) {
    ++histogram[static_cast<std::size_t>(a.difficulty)];
    remediated += a.provenance == mimic::Provenance::remediated ? 1 : 0;
  }
  for (const auto& r : outcome.records) with_facts += r.kg_facts.empty() ? 0 : 1;
  s.counts["d_aug"] = outcome.d_aug.size();
  s.counts["remediated"] = remediated;
  s.counts["passthrough"] = outcome.d_aug.size() - remediated;
  s.counts["with_kg_facts"] = with_facts;
  s.counts["failures"] = outcome.failures;
  s.counts["difficulty_histogram"] = histogram;
  finish(s, {{"corpus", file_entry(config_.corpus)}, {"fewshot", file_entry(fewshot_path)}},
         {{"d_aug", file_entry(dir / "d_aug.jsonl")}, {"audit", file_entry(dir / "audit.jsonl")}}, before);
  fail_on_transport(outcome.transport_failures, "annotate");
  return s;
}

PhaseSummary Pipeline::curriculum() {
  PhaseSummary s{"curriculum"};
  const auto before = usage();
  const fs::path d_aug_path = require(config_.phase_dir("annotate") / "d_aug.jsonl", "annotate");
  const fs::path loss_path = require(config_.phase_dir("select") / "loss_report.jsonl", "select");
  const auto d_aug = mimic::load_d_aug(d_aug_path);
  std::vector<curriculum::ScoredItem> items;
  items.reserve(d_aug.size());
  for (const auto& a : d_aug) items.push_back({a.instance.id, a.difficulty});
  auto schedule = curriculum::make_schedule(items, config_.bucket_spec, config_.epochs_per_stage, config_.reverse_curriculum);
  curriculum::LossTable losses;
  for (const auto& r : selection::load_loss_report(loss_path)) losses[r.instance_id] = r.loss;
  schedule.attach_losses(losses);

  const fs::path dir = config_.phase_dir("curriculum");
  curriculum::emit_training_plan(schedule, dir / "training_plan.json");
  curriculum::save_loss_report(schedule, dir / "loss_report.json");
  Json outputs = {{"training_plan", file_entry(dir / "training_plan.json")}, {"loss_report", file_entry(dir / "loss_report.json")}};
  Json inputs = {{"d_aug", file_entry(d_aug_path)}, {"loss_report", file_entry(loss_path)}};

  std::vector<std::size_t> bucket_sizes, stage_sizes;
  for (const auto& b : schedule.buckets) bucket_sizes.push_back(b.size());
  for (const auto& st : schedule.stages) stage_sizes.push_back(st.size());
  s.counts["d_aug"] = d_aug.size();
  s.counts["bucket_sizes"] = bucket_sizes;
  s.counts["stage_sizes"] = stage_sizes;
  s.counts["total_loss"] = schedule.total_loss ? Json(*schedule.total_loss) : Json(nullptr);

  if (config_.lisa) {
    const auto importance = lisa::load_importance(config_.lisa->importance);
    const auto plan = lisa::make_plan(importance, config_.lisa->k, config_.lisa->lambda);
    lisa::save_plan(plan, dir / "lisa_plan.json");
    inputs["lisa_importance"] = file_entry(config_.lisa->importance);
    outputs["lisa_plan"] = file_entry(dir / "lisa_plan.json");
    s.counts["lisa_selected"] = std::vector<std::size_t>(plan.selected.begin(), plan.selected.end());
  }
  finish(s, inputs, outputs, before);
  return s;
}

std::vector<PhaseSummary> Pipeline::run_all() {
  std::vector<PhaseSummary> phases;
  phases.push_back(select());
  phases.push_back(analyze());
  phases.push_back(remediate());
  phases.push_back(mimic());
  phases.push_back(annotate());
  phases.push_back(curriculum());

  Json run;
  run["timestamp"] = utc_timestamp();
  run["seed"] = config_.seed;
  run["d_error"] = phases[0].counts["d_error"];
  run["d_rem"] = phases[2].counts["d_rem"];
  run["d_mimic"] = phases[3].counts["d_mimic"];
  run["d_aug"] = phases[4].counts["d_aug"];
  run["bucket_sizes"] = phases[5].counts["bucket_sizes"];
  std::size_t calls = 0, hits = 0;
  Json per_phase = Json::object();
  for (const auto& p : phases) {
    calls += p.backend_calls;
    hits += p.cache_hits;
    per_phase[p.phase] = p.counts;
  }
  run["backend_calls"] = calls;
  run["cache_hits"] = hits;
  run["phases"] = std::move(per_phase);
  corpus::write_text(config_.output_dir / "run_manifest.json", run.dump(2) + "\n");
  return phases;
}

std::string report(const fs::path& output_dir) {
  if (!fs::is_directory(output_dir)) throw InputError(fmt::format("{} is not a directory", output_dir.string()));
  std::map<std::string, Json> manifests;
  for (auto phase : kPhases) {
    const fs::path m = output_dir / std::string(phase) / "manifest.json";
    if (!fs::exists(m)) continue;
    try {
      manifests[std::string(phase)] = Json::parse(corpus::read_text(m));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(fmt::format("{}: {}", m.string(), e.what()));
    }
  }
  if (manifests.empty()) {
    throw InputError(fmt::format("no phase manifests under {}: run `eacl run-all` or a phase first", output_dir.string()));
  }

  std::string out = fmt::format("Report for {}\n\nPhase counts\n", output_dir.string());
  for (auto phase : kPhases) {
    auto it = manifests.find(std::string(phase));
    if (it == manifests.end()) {
      out += fmt::format("  {:<11} (not run)\n", phase);
      continue;
    }
    const Json& m = it->second;
    out += fmt::format("  {:<11} {}  [backend calls {}, cache hits {}]\n", phase, m.at("counts").dump(),
                       m.at("backend").value("calls", 0), m.at("backend").value("cache_hits", 0));
  }

  const fs::path d_aug_path = output_dir / "annotate" / "d_aug.jsonl";
  if (fs::exists(d_aug_path)) {
    std::array<std::size_t, 6> histogram{};
    std::size_t total = 0;
    for (const auto& a : mimic::load_d_aug(d_aug_path)) {
      ++histogram[static_cast<std::size_t>(a.difficulty)];
      ++total;
    }
    out += "\nDifficulty histogram (D_aug)\n";
    for (std::size_t h = 0; h < histogram.size(); ++h) out += fmt::format("  {}  {:>5}\n", h, histogram[h]);
    out += fmt::format("  total {:>3}\n", total);
  }

  for (auto [phase, title] : {std::pair{"remediate", "teacher remediation"}, std::pair{"annotate", "student annotation"}}) {
    const fs::path audit_path = output_dir / phase / "audit.jsonl";
    if (!fs::exists(audit_path)) continue;
    const auto records = remediation::load_audit_log(audit_path);
    std::map<std::string, std::size_t> tags;
    std::map<std::string, std::size_t> statuses;
    for (const auto& r : records) {
      for (const auto& t : taxonomy::to_strings(r.tags)) ++tags[t];
      ++statuses[std::string(remediation::to_string(r.status))];
    }
    out += fmt::format("\nTag frequency ({})\n", title);
    if (tags.empty()) out += "  (none)\n";
    for (const auto& [tag, n] : tags) out += fmt::format("  {:<20} {:>5}\n", tag, n);
    out += fmt::format("\nOutcomes ({})\n", title);
    for (const auto& [status, n] : statuses) out += fmt::format("  {:<24} {:>5}\n", status, n);
    bool header = false;
    for (const auto& r : records) {
      if (r.status == remediation::RecordStatus::kept) continue;
      if (!header) {
        out += "  reasons:\n";
        header = true;
      }
      out += fmt::format("    {}: {} ({})\n", r.instance_id, remediation::to_string(r.status), r.reason);
    }
  }
  return out;
}

}  // namespace eacl::pipeline
