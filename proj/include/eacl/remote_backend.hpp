#pragma once

// HTTP backend for chat-completion style endpoints.
//
// POST {base_url}/chat/completions
//   {"model": ..., "messages": [{"role": "user", "content": <prompt>}],
//    "temperature": ..., "max_tokens": ...}
// and reads choices[0].message.content from the reply. The API key is taken
// from the environment variable named by `api_key_env` (never from config).

#include <chrono>
#include <string>

#include "eacl/backend.hpp"

namespace eacl::backend {

struct RemoteConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int backoff_ms = 500;  // doubled after each failed attempt
};

class RemoteBackend final : public ModelBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  std::string name() const override { return "remote:" + config_.model; }
  std::string complete(const std::string& prompt, const DecodingParams& params) override;

  const RemoteConfig& config() const { return config_; }

 private:
  RemoteConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace eacl::backend
