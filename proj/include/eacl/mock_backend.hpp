#pragma once

// Deterministic rule-table backend used as the test oracle and for offline
// runs. It reads the payload block of each prompt and answers by surface cues:
//
//   Negation               negation word anywhere in the sentence
//   Contrast               contrastive connective
//   AmplificationModality  modal verb or intensity adverb
//   LackOfDomainKnowledge  either target entity is in `knowledge_entities`
//   MultipleEntities       three or more distinct known entities mentioned
//   DistantEntities        more than `delta` tokens between the targets
//   discard                an ambiguity word ("unclear", "conflicting", ...)
//
// Relation verification echoes the gold labels planted with plant_gold(),
// except for ids in `mislabel_ids`. Ids in `prose_ids` always get a prose
// reply; ids in `flaky_ids` get prose unless the request is a repair.

#include <atomic>
#include <cstddef>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "eacl/backend.hpp"
#include "eacl/corpus.hpp"
#include "eacl/taxonomy.hpp"

namespace eacl::backend {

struct MockConfig {
  std::vector<std::string> knowledge_entities;
  std::vector<std::string> entity_lexicon;
  std::set<std::string> mislabel_ids;
  std::set<std::string> prose_ids;
  std::set<std::string> flaky_ids;
  std::size_t delta = taxonomy::kDefaultDistanceThreshold;

  corpus::Json to_json() const;
  static MockConfig from_json(const corpus::Json& j);
};

/// Error types the mock rule table assigns to an instance.
taxonomy::ErrorSet mock_error_types(const corpus::RelationInstance& instance, const MockConfig& config);
bool mock_is_ambiguous(const corpus::RelationInstance& instance);
/// Sentence rewrite the mock proposes for rewrite-class error types.
std::string mock_rewrite(const corpus::RelationInstance& instance, const taxonomy::ErrorSet& types, const MockConfig& config);

class MockBackend final : public ModelBackend {
 public:
  explicit MockBackend(MockConfig config = {});

  /// Name includes a digest of the configuration so caches never mix
  /// answers from differently configured mocks.
  std::string name() const override { return name_; }
  std::string complete(const std::string& prompt, const DecodingParams& params) override;

  void plant_gold(const std::string& instance_id, corpus::LabelSet labels);
  std::size_t call_count() const { return calls_.load(); }
  const MockConfig& config() const { return config_; }

 private:
  std::string classify(const corpus::Json& payload) const;
  std::string remediate(const corpus::Json& payload) const;
  std::string verify(const corpus::Json& payload) const;

  MockConfig config_;
  std::string name_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex gold_mutex_;
  std::map<std::string, corpus::LabelSet> gold_;
};

}  // namespace eacl::backend
