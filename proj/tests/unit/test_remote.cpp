#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "eacl/error.hpp"
#include "eacl/remote_backend.hpp"

using namespace eacl;
using namespace eacl::backend;

namespace {

/// Local chat-completions endpoint whose handler is supplied per test.
class FakeServer {
 public:
  explicit FakeServer(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

RemoteConfig config_for(const FakeServer& server) {
  RemoteConfig c;
  c.base_url = server.base_url();
  c.model = "test-model";
  c.api_key_env = "EACL_TEST_API_KEY";
  c.timeout_seconds = 5;
  c.max_retries = 3;
  c.backoff_ms = 1;
  return c;
}

}  // namespace

TEST_SUITE("remote") {
  TEST_CASE("posts a chat request with the key from the environment") {
    ::setenv("EACL_TEST_API_KEY", "sekret", 1);
    nlohmann::json seen;
    std::string auth;
    FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
      seen = nlohmann::json::parse(req.body);
      auth = req.get_header_value("Authorization");
      res.set_content(reply("hello"), "application/json");
    });
    RemoteBackend remote(config_for(server));
    DecodingParams p;
    p.temperature = 0.25;
    p.max_tokens = 77;
    CHECK(remote.complete("the prompt", p) == "hello");
    CHECK(auth == "Bearer sekret");
    CHECK(seen["model"] == "test-model");
    CHECK(seen["messages"][0]["content"] == "the prompt");
    CHECK(seen["temperature"] == 0.25);
    CHECK(seen["max_tokens"] == 77);
    CHECK(remote.name() == "remote:test-model");
    ::unsetenv("EACL_TEST_API_KEY");
  }

  TEST_CASE("rate limits and server errors are retried") {
    std::atomic<int> hits{0};
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
      const int n = ++hits;
      if (n == 1) {
        res.status = 429;
      } else if (n == 2) {
        res.status = 503;
      } else {
        res.set_content(reply("finally"), "application/json");
      }
    });
    RemoteBackend remote(config_for(server));
    CHECK(remote.complete("p", {}) == "finally");
    CHECK(hits == 3);
  }

  TEST_CASE("retries are bounded") {
    std::atomic<int> hits{0};
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.status = 429;
    });
    auto c = config_for(server);
    c.max_retries = 2;
    RemoteBackend remote(c);
    CHECK_THROWS_AS(remote.complete("p", {}), BackendError);
    CHECK(hits == 3);
  }

  TEST_CASE("client errors and malformed replies fail without retry") {
    std::atomic<int> hits{0};
    FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      if (req.body.find("bad-request") != std::string::npos) {
        res.status = 400;
        res.set_content("{\"error\":\"nope\"}", "application/json");
      } else {
        res.set_content("{\"unexpected\":1}", "application/json");
      }
    });
    RemoteBackend remote(config_for(server));
    CHECK_THROWS_AS(remote.complete("bad-request", {}), BackendError);
    CHECK(hits == 1);
    CHECK_THROWS_AS(remote.complete("other", {}), BackendError);
    CHECK(hits == 2);
  }

  TEST_CASE("unreachable host is a backend error") {
    int port = 0;
    {
      httplib::Server probe;
      port = probe.bind_to_any_port("127.0.0.1");
    }
    RemoteConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port);
    c.max_retries = 1;
    c.backoff_ms = 1;
    c.timeout_seconds = 2;
    RemoteBackend remote(c);
    CHECK_THROWS_AS(remote.complete("p", {}), BackendError);
  }

  TEST_CASE("base url must carry a scheme") {
    RemoteConfig c;
    c.base_url = "localhost:8080";
    CHECK_THROWS_AS(RemoteBackend{c}, InputError);
  }
}
