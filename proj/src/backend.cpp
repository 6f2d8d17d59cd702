#include "eacl/backend.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "eacl/error.hpp"
#include "eacl/hashing.hpp"

namespace eacl::backend {

namespace fs = std::filesystem;

corpus::Json DecodingParams::to_json() const {
  corpus::Json j;
  j["temperature"] = temperature;
  j["max_tokens"] = max_tokens;
  return j;
}

std::string cache_key(std::string_view prompt, std::string_view backend_name, const DecodingParams& params) {
  std::string material(prompt);
  material.push_back('\x1f');
  material.append(backend_name);
  material.push_back('\x1f');
  material.append(params.to_json().dump());
  return sha256_hex(material);
}

ResponseCache::ResponseCache(fs::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(*directory_, ec);
  if (ec) throw InputError("cannot create cache directory " + directory_->string() + ": " + ec.message());
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (!directory_) return std::nullopt;
  std::ifstream in(*directory_ / (key + ".json"), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    const auto j = corpus::Json::parse(ss.str());
    if (j.value("key", "") != key) return std::nullopt;
    return j.at("response").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    spdlog::warn("ignoring corrupt cache entry {}: {}", key, e.what());
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, std::string_view backend_name, std::string_view response) {
  std::lock_guard lock(mutex_);
  memory_[key] = std::string(response);
  if (!directory_) return;
  corpus::Json j;
  j["key"] = key;
  j["backend"] = backend_name;
  j["response"] = response;
  const fs::path final_path = *directory_ / (key + ".json");
  const fs::path tmp_path = *directory_ / (key + ".json.tmp");
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write cache entry " + tmp_path.string());
    out << j.dump() << '\n';
  }
  fs::rename(tmp_path, final_path);
}

CachingBackend::CachingBackend(std::shared_ptr<ModelBackend> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachingBackend::complete(const std::string& prompt, const DecodingParams& params) {
  const std::string key = cache_key(prompt, inner_->name(), params);
  if (auto hit = cache_->get(key)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  std::string response = inner_->complete(prompt, params);
  cache_->put(key, inner_->name(), response);
  return response;
}

}  // namespace eacl::backend
