#include "eacl/corpus.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "eacl/error.hpp"
#include "eacl/text.hpp"

namespace eacl::corpus {

namespace fs = std::filesystem;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw ValidationError(fmt::format("field 'split': unknown split '{}'", s));
}

LabelSpace::LabelSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw ValidationError("label space: empty label");
    if (!index_.emplace(labels_[i], i).second) {
      throw ValidationError(fmt::format("label space: duplicate label '{}'", labels_[i]));
    }
  }
}

bool LabelSpace::contains(std::string_view label) const { return index_.count(std::string(label)) != 0; }

std::size_t LabelSpace::index_of(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) throw ValidationError(fmt::format("unknown label '{}'", label));
  return it->second;
}

std::vector<double> LabelSpace::indicator(const LabelSet& set) const {
  std::vector<double> y(labels_.size(), 0.0);
  for (const auto& label : set) y[index_of(label)] = 1.0;
  return y;
}

std::vector<std::string> LabelSpace::ordered(const LabelSet& set) const {
  std::vector<std::string> out;
  for (const auto& label : labels_) {
    if (set.count(label)) out.push_back(label);
  }
  // Labels outside the space keep lexicographic order at the end.
  for (const auto& label : set) {
    if (!contains(label)) out.push_back(label);
  }
  return out;
}

void validate(const RelationInstance& inst, const LabelSpace& labels) {
  const auto fail = [&](const std::string& what) {
    throw ValidationError(fmt::format("instance '{}': {}", inst.id, what));
  };
  if (inst.id.empty()) fail("field 'id' is empty");
  const std::size_t len = text::codepoint_length(inst.sentence);
  for (const auto* ent : {&inst.entity1, &inst.entity2}) {
    const char* name = ent == &inst.entity1 ? "entity1" : "entity2";
    if (ent->char_start >= ent->char_end) fail(fmt::format("field '{}': char_start must be < char_end", name));
    if (ent->char_end > len) fail(fmt::format("field '{}': char_end {} exceeds sentence length {}", name, ent->char_end, len));
    const std::string span = text::substr_cp(inst.sentence, ent->char_start, ent->char_end);
    if (span != ent->surface) {
      fail(fmt::format("field '{}': span text '{}' does not match surface '{}'", name, span, ent->surface));
    }
  }
  for (const auto& label : inst.reference_relations) {
    if (!labels.contains(label)) fail(fmt::format("field 'reference_relations': unknown label '{}'", label));
  }
}

namespace {

Json span_to_json(const EntitySpan& e) {
  Json j;
  j["surface"] = e.surface;
  j["char_start"] = e.char_start;
  j["char_end"] = e.char_end;
  return j;
}

template <typename T>
T field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw ValidationError(fmt::format("missing field '{}'", name));
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(fmt::format("field '{}' has the wrong type", name));
  }
}

EntitySpan span_from_json(const Json& j, const char* name) {
  if (!j.contains(name) || !j.at(name).is_object()) throw ValidationError(fmt::format("missing field '{}'", name));
  const Json& e = j.at(name);
  EntitySpan span;
  try {
    span.surface = field<std::string>(e, "surface");
    span.char_start = field<std::size_t>(e, "char_start");
    span.char_end = field<std::size_t>(e, "char_end");
  } catch (const ValidationError& err) {
    throw ValidationError(fmt::format("{}.{}", name, err.what()));
  }
  return span;
}

std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

Json to_json(const RelationInstance& inst, const LabelSpace& labels) {
  Json j;
  j["type"] = "instance";
  j["id"] = inst.id;
  j["sentence"] = inst.sentence;
  j["entity1"] = span_to_json(inst.entity1);
  j["entity2"] = span_to_json(inst.entity2);
  j["reference_relations"] = labels.ordered(inst.reference_relations);
  j["split"] = std::string(to_string(inst.split));
  return j;
}

RelationInstance instance_from_json(const Json& j) {
  RelationInstance inst;
  inst.id = field<std::string>(j, "id");
  inst.sentence = field<std::string>(j, "sentence");
  inst.entity1 = span_from_json(j, "entity1");
  inst.entity2 = span_from_json(j, "entity2");
  for (const auto& label : field<std::vector<std::string>>(j, "reference_relations")) {
    inst.reference_relations.insert(label);
  }
  inst.split = split_from_string(field<std::string>(j, "split"));
  return inst;
}

std::vector<Json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<Json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(fmt::format("{}:{}: malformed JSON: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

void write_jsonl(const fs::path& path, std::span<const Json> records) {
  auto out = open_for_write(path);
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

void write_text(const fs::path& path, std::string_view content) {
  auto out = open_for_write(path);
  out << content;
  if (!out) throw InputError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DatasetFile read_dataset_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  DatasetFile file;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(fmt::format("{}:{}: malformed JSON: {}", path.string(), lineno, e.what()));
    }
    const std::string type = j.is_object() && j.contains("type") && j["type"].is_string() ? j["type"].get<std::string>() : "";
    if (type == "header") {
      if (have_header) throw ValidationError(fmt::format("{}:{}: duplicate header", path.string(), lineno));
      try {
        file.labels = LabelSpace(field<std::vector<std::string>>(j, "labels"));
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}:{}: header: {}", path.string(), lineno, e.what()));
      }
      have_header = true;
    } else if (type == "instance") {
      if (!have_header) throw ValidationError(fmt::format("{}:{}: instance before header", path.string(), lineno));
      file.records.push_back(std::move(j));
      file.line_numbers.push_back(lineno);
    } else {
      throw ValidationError(fmt::format("{}:{}: field 'type' must be \"header\" or \"instance\"", path.string(), lineno));
    }
  }
  return file;
}

void write_dataset_file(const fs::path& path, const LabelSpace& labels, std::span<const Json> records) {
  auto out = open_for_write(path);
  Json header;
  header["type"] = "header";
  header["labels"] = labels.labels();
  out << header.dump() << '\n';
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

namespace {

std::vector<RelationInstance> parse_instances(const fs::path& path, const DatasetFile& file, const LabelSpace& labels) {
  std::vector<RelationInstance> out;
  out.reserve(file.records.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    const Json& rec = file.records[i];
    const std::size_t lineno = file.line_numbers[i];
    try {
      RelationInstance inst = instance_from_json(rec);
      validate(inst, labels);
      if (!seen.insert(inst.id).second) throw ValidationError(fmt::format("instance '{}': duplicate id", inst.id));
      out.push_back(std::move(inst));
    } catch (const InputError& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

}  // namespace

std::vector<RelationInstance> load_dataset(const fs::path& path, const LabelSpace& labels) {
  DatasetFile file = read_dataset_file(path);
  if (!file.records.empty() || !file.labels.empty()) {
    if (!(file.labels == labels)) {
      throw ValidationError(path.string() + ": header label space differs from the expected label space");
    }
  }
  return parse_instances(path, file, labels);
}

std::vector<RelationInstance> load_dataset(const fs::path& path, LabelSpace* labels_out) {
  DatasetFile file = read_dataset_file(path);
  auto out = parse_instances(path, file, file.labels);
  if (labels_out) *labels_out = file.labels;
  return out;
}

void save_dataset(std::span<const RelationInstance> instances, const LabelSpace& labels, const fs::path& path) {
  std::vector<Json> records;
  records.reserve(instances.size());
  for (const auto& inst : instances) records.push_back(to_json(inst, labels));
  write_dataset_file(path, labels, records);
}

Prediction make_prediction(std::string instance_id, std::vector<double> scores, const LabelSpace& labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError(fmt::format("prediction '{}': {} scores for {} labels", instance_id, scores.size(), labels.size()));
  }
  Prediction p{std::move(instance_id), std::move(scores), {}};
  for (std::size_t j = 0; j < p.scores.size(); ++j) {
    const double s = p.scores[j];
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw ValidationError(fmt::format("prediction '{}': score {} outside [0,1]", p.instance_id, s));
    }
    if (s >= kPredictionCutoff) p.predicted_relations.insert(labels.labels()[j]);
  }
  return p;
}

std::vector<Prediction> load_predictions(const fs::path& path, const LabelSpace& labels) {
  std::vector<Prediction> out;
  std::size_t lineno = 0;
  for (const auto& rec : read_jsonl(path)) {
    ++lineno;
    try {
      out.push_back(make_prediction(field<std::string>(rec, "instance_id"), field<std::vector<double>>(rec, "scores"), labels));
    } catch (const InputError& e) {
      throw ValidationError(fmt::format("{}: record {}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

void save_predictions(std::span<const Prediction> predictions, const fs::path& path) {
  std::vector<Json> records;
  for (const auto& p : predictions) {
    Json j;
    j["instance_id"] = p.instance_id;
    j["scores"] = p.scores;
    records.push_back(std::move(j));
  }
  write_jsonl(path, records);
}

}  // namespace eacl::corpus
