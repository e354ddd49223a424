#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "ideagraph/live_backend.hpp"
#include "support.hpp"

using namespace ideagraph;
using namespace testing_support;

namespace {

constexpr const char* kTokenVar = "IDEAGRAPH_TEST_TOKEN";

// Local stand-in for a chat-completions service.
class FakeService {
 public:
  FakeService() {
    srv_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth = req.get_header_value("Authorization");
      last_body = json::parse(req.body);
      if (fail_status) {
        res.status = fail_status;
        return;
      }
      json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", R"({"label": "optics"})"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    srv_.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
      auto in = json::parse(req.body)["input"];
      json data = json::array();
      // Reverse order on the wire; the client must sort by index.
      for (std::size_t i = in.size(); i-- > 0;)
        data.push_back({{"index", i}, {"embedding", {1.0, static_cast<double>(i)}}});
      res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    port_ = srv_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
  }
  ~FakeService() {
    srv_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::string last_auth;
  json last_body;
  int fail_status = 0;

 private:
  httplib::Server srv_;
  int port_ = 0;
  std::thread thread_;
};

BackendConfig live_config(const FakeService& s) {
  BackendConfig c;
  c.kind = BackendKind::live;
  c.base_url = s.base_url();
  c.model = "test-model";
  c.auth_token_env = kTokenVar;
  c.max_retries = 0;
  return c;
}

}  // namespace

TEST(LiveBackend, MissingTokenIsPrecondition) {
  FakeService s;
  ::unsetenv(kTokenVar);
  EXPECT_THROW(LiveBackend{live_config(s)}, PreconditionError);
}

TEST(LiveBackend, ChatSendsBearerTokenFromEnvironment) {
  FakeService s;
  ::setenv(kTokenVar, "sekrit", 1);
  Gateway gw(std::make_shared<LiveBackend>(live_config(s)), live_config(s));
  auto out = gw.complete(prompts::make_request(PromptKind::domain_label, {{"paper_id", "x"}}));
  EXPECT_EQ(out.value["label"], "optics");
  EXPECT_EQ(s.last_auth, "Bearer sekrit");
  EXPECT_EQ(s.last_body["model"], "test-model");
  EXPECT_EQ(s.last_body["messages"][0]["role"], "user");
  ::unsetenv(kTokenVar);
}

TEST(LiveBackend, EmbeddingsOrderedByIndex) {
  FakeService s;
  ::setenv(kTokenVar, "t", 1);
  LiveBackend b(live_config(s));
  std::vector<std::string> texts{"a", "b", "c"};
  auto v = b.embed(texts);
  ASSERT_EQ(v.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(v[i][1], static_cast<double>(i));
  ::unsetenv(kTokenVar);
}

TEST(LiveBackend, HttpErrorIsBackendError) {
  FakeService s;
  s.fail_status = 503;
  ::setenv(kTokenVar, "t", 1);
  LiveBackend b(live_config(s));
  ChatRequest req = prompts::make_request(PromptKind::domain_label, {{"paper_id", "x"}});
  try {
    b.chat(req);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
  }
  ::unsetenv(kTokenVar);
}

TEST(LiveBackend, UnreachableHostIsBackendError) {
  ::setenv(kTokenVar, "t", 1);
  BackendConfig c;
  c.kind = BackendKind::live;
  c.base_url = "http://127.0.0.1:1/v1";
  c.auth_token_env = kTokenVar;
  LiveBackend b(c);
  std::vector<std::string> texts{"a"};
  EXPECT_THROW(b.embed(texts), BackendError);
  ::unsetenv(kTokenVar);
}

TEST(LiveBackend, SplitUrl) {
  std::string o, p;
  LiveBackend::split_url("https://api.example.com/v1/", o, p);
  EXPECT_EQ(o, "https://api.example.com");
  EXPECT_EQ(p, "/v1");
  LiveBackend::split_url("http://h:8080", o, p);
  EXPECT_EQ(o, "http://h:8080");
  EXPECT_EQ(p, "");
}
