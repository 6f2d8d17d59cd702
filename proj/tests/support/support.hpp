#pragma once

// Shared helpers for the unit and acceptance tests.

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "eacl/backend.hpp"
#include "eacl/corpus.hpp"
#include "eacl/pipeline.hpp"

namespace eacl::testing {

std::filesystem::path fixture_dir();
std::filesystem::path golden_dir();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag = "eacl");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Instance from a marked sentence: entity 1 is written <<...>>, entity 2
/// ((...)). Offsets are computed in code points.
corpus::RelationInstance make_instance(std::string id, std::string_view marked, corpus::LabelSet labels = {},
                                       corpus::Split split = corpus::Split::train);

corpus::LabelSpace fixture_labels();

/// The shipped fixture configuration, writing into `output_dir`.
pipeline::PipelineConfig fixture_config(const std::filesystem::path& output_dir);

std::string slurp(const std::filesystem::path& path);

/// Golden text under golden_dir(). With EACL_UPDATE_GOLDEN=1 in the
/// environment the file is first rewritten from `actual`.
std::string golden(std::string_view name, const std::string& actual);

/// Backend answering from a callback that sees the prompt payload.
class ScriptedBackend final : public backend::ModelBackend {
 public:
  using Script = std::function<std::string(const corpus::Json& payload, const std::string& prompt)>;

  explicit ScriptedBackend(Script script, std::string name = "scripted");

  std::string name() const override { return name_; }
  std::string complete(const std::string& prompt, const backend::DecodingParams& params) override;

  std::size_t calls() const { return calls_.load(); }
  std::vector<std::string> prompts() const;

 private:
  Script script_;
  std::string name_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mutex_;
  std::vector<std::string> prompts_;
};

}  // namespace eacl::testing
