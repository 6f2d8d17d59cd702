#pragma once

// Relation-instance data model and the JSONL dataset format shared by every
// artifact the pipeline writes.
//
// A dataset file is UTF-8 with LF line endings. The first line is a header
//   {"type":"header","labels":[...]}
// and every following line is one instance
//   {"type":"instance","id":...,"sentence":...,"entity1":{...},"entity2":{...},
//    "reference_relations":[...],"split":...}
// Derived datasets add fields after "split" (e.g. "enriched_sentence",
// "difficulty"); readers ignore fields they do not know.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace eacl::corpus {

using Json = nlohmann::ordered_json;

enum class Split { train, dev, test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view s);

/// Entity mention as a half-open code point range into the sentence.
struct EntitySpan {
  std::string surface;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

using LabelSet = std::set<std::string>;

struct RelationInstance {
  std::string id;
  std::string sentence;
  EntitySpan entity1;
  EntitySpan entity2;
  LabelSet reference_relations;
  Split split = Split::train;

  friend bool operator==(const RelationInstance&, const RelationInstance&) = default;
};

/// Ordered relation labels; position j is the loss-vector index of label j.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const std::vector<std::string>& labels() const { return labels_; }
  bool contains(std::string_view label) const;
  std::size_t index_of(std::string_view label) const;

  /// Indicator vector y in {0,1}^L for a label set.
  std::vector<double> indicator(const LabelSet& labels) const;
  /// Labels of `set` in label-space order.
  std::vector<std::string> ordered(const LabelSet& set) const;

  friend bool operator==(const LabelSpace& a, const LabelSpace& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Model output for one instance. `predicted_relations` holds every label whose
/// score is at least kPredictionCutoff.
struct Prediction {
  std::string instance_id;
  std::vector<double> scores;
  LabelSet predicted_relations;
};

inline constexpr double kPredictionCutoff = 0.5;

/// Throws ValidationError naming the instance id and the broken invariant.
void validate(const RelationInstance& instance, const LabelSpace& labels);

Json to_json(const RelationInstance& instance, const LabelSpace& labels);
/// Parses the instance fields of a record; unknown fields are ignored.
RelationInstance instance_from_json(const Json& record);

/// Raw dataset file: header labels plus instance records in file order.
struct DatasetFile {
  LabelSpace labels;
  std::vector<Json> records;
  std::vector<std::size_t> line_numbers;  // 1-based, parallel to records
};

DatasetFile read_dataset_file(const std::filesystem::path& path);
void write_dataset_file(const std::filesystem::path& path, const LabelSpace& labels, std::span<const Json> records);

/// Loads and validates every instance. The file header must declare `labels`.
std::vector<RelationInstance> load_dataset(const std::filesystem::path& path, const LabelSpace& labels);
/// Loads using the label space declared in the file header.
std::vector<RelationInstance> load_dataset(const std::filesystem::path& path, LabelSpace* labels_out = nullptr);
void save_dataset(std::span<const RelationInstance> instances, const LabelSpace& labels, const std::filesystem::path& path);

Prediction make_prediction(std::string instance_id, std::vector<double> scores, const LabelSpace& labels);
/// Predictions file: JSONL {"instance_id":..., "scores":[...]}.
std::vector<Prediction> load_predictions(const std::filesystem::path& path, const LabelSpace& labels);
void save_predictions(std::span<const Prediction> predictions, const std::filesystem::path& path);

/// Line-oriented helpers shared by the other modules' JSONL artifacts.
std::vector<Json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, std::span<const Json> records);
void write_text(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

}  // namespace eacl::corpus
