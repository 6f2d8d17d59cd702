#include "eacl/remote_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "eacl/error.hpp"

namespace eacl::backend {

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  const std::string& url = config_.base_url;
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InputError("remote base_url must include a scheme: " + url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (config_.max_retries < 0) throw InputError("max_retries must be >= 0");
}

std::string RemoteBackend::complete(const std::string& prompt, const DecodingParams& params) {
  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_tokens;
  const std::string payload = body.dump();
  const std::string path = path_prefix_ + "/chat/completions";

  std::string last_error;
  int delay_ms = config_.backoff_ms;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms *= 2;
    }
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      spdlog::warn("{} attempt {}: {}", name(), attempt + 1, last_error);
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = fmt::format("HTTP {}", res->status);
      spdlog::warn("{} attempt {}: {}", name(), attempt + 1, last_error);
      continue;
    }
    if (res->status != 200) throw BackendError(fmt::format("{}: HTTP {}: {}", name(), res->status, res->body));
    try {
      const auto reply = nlohmann::json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(fmt::format("{}: unexpected reply shape: {}", name(), e.what()));
    }
  }
  throw BackendError(fmt::format("{}: giving up after {} attempts ({})", name(), config_.max_retries + 1, last_error));
}

}  // namespace eacl::backend
