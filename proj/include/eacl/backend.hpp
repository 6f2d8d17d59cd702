#pragma once

// Model backend contract and the on-disk response cache.

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "eacl/corpus.hpp"

namespace eacl::backend {

struct DecodingParams {
  double temperature = 0.0;
  int max_tokens = 1024;

  corpus::Json to_json() const;
};

/// A text-completion model. Implementations must tolerate concurrent calls.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::string name() const = 0;
  /// Throws BackendError on transport failure.
  virtual std::string complete(const std::string& prompt, const DecodingParams& params) = 0;
};

/// hash(prompt ‖ backend name ‖ decoding params), hex SHA-256.
std::string cache_key(std::string_view prompt, std::string_view backend_name, const DecodingParams& params);

/// Response store keyed by cache_key. With a directory, each entry is one
/// JSON file <dir>/<key>.json; without one, entries live in memory only.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path directory);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, std::string_view backend_name, std::string_view response);
  const std::optional<std::filesystem::path>& directory() const { return directory_; }

 private:
  std::optional<std::filesystem::path> directory_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> memory_;
};

/// Decorator that answers repeated requests from the cache. Only successful
/// responses are stored.
class CachingBackend final : public ModelBackend {
 public:
  CachingBackend(std::shared_ptr<ModelBackend> inner, std::shared_ptr<ResponseCache> cache);

  std::string name() const override { return inner_->name(); }
  std::string complete(const std::string& prompt, const DecodingParams& params) override;

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::shared_ptr<ModelBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace eacl::backend
