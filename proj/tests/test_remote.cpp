#include <gtest/gtest.h>

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "fixtures.hpp"
#include "safelens/error.hpp"
#include "safelens/remote.hpp"
#include "safelens/tensor_io.hpp"

using namespace safelens;
using fixtures::desc;

namespace {

class FakeEndpoint {
 public:
  FakeEndpoint() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteSettings settings(const std::string& url, double timeout = 2.0) {
  return {url, "secret", timeout};
}

}  // namespace

TEST(RemoteClient, PostsRequestShapeWithBearerToken) {
  FakeEndpoint ep;
  nlohmann::json seen;
  std::string auth;
  ep.server().Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"text":"GUARDRAIL: {}"})", "application/json");
  });
  auto client = std::make_shared<RemoteClient>(settings(ep.url()));
  RemoteReasoner r(desc(BackendKind::reasoner, "big-model"), client);
  FrameSet fs;
  fs.frames = {"a", "b"};
  EXPECT_EQ(r.complete("the prompt", fs), "GUARDRAIL: {}");
  EXPECT_EQ(seen["model"], "big-model");
  EXPECT_EQ(seen["prompt"], "the prompt");
  EXPECT_EQ(seen["frames"], nlohmann::json::array({"a", "b"}));
  EXPECT_EQ(auth, "Bearer secret");
}

TEST(RemoteClient, EndpointPathPrefixIsKept) {
  FakeEndpoint ep;
  ep.server().Post("/api/v1/caption", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"text":"a frame"})", "application/json");
  });
  RemoteCaptioner c(desc(BackendKind::captioner, "cap"),
                    std::make_shared<RemoteClient>(settings(ep.url() + "/api/")));
  EXPECT_EQ(c.caption("v#frame=1"), "a frame");
}

TEST(RemoteClient, EmbedderLoadsTensorRef) {
  fixtures::TempDir dir;
  write_tensor({{2, 3}, {1, 2, 3, 4, 5, 6}}, dir / "h.slvf");
  write_tensor({{6}, {1, 2, 3, 4, 5, 6}}, dir / "flat.slvf");
  FakeEndpoint ep;
  std::string ref = "file://" + (dir / "h.slvf").string();
  ep.server().Post("/v1/embed", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"tensor_ref", ref}}.dump(), "application/json");
  });
  RemoteEmbedder e(desc(BackendKind::embedder, "emb"),
                   std::make_shared<RemoteClient>(settings(ep.url())));
  const auto h = e.embed({}, "p");
  EXPECT_EQ(h.n, 2u);
  EXPECT_EQ(h.d, 3u);
  ref = (dir / "flat.slvf").string();
  EXPECT_THROW(e.embed({}, "p"), ProtocolError);
  ref = (dir / "missing.slvf").string();
  EXPECT_THROW(e.embed({}, "p"), ProtocolError);
}

TEST(RemoteClient, ProtocolFailures) {
  FakeEndpoint ep;
  ep.server().Post("/v1/complete", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const std::string mode = body["prompt"];
    if (mode == "status") {
      res.status = 500;
      res.set_content("{}", "application/json");
    } else if (mode == "notjson") {
      res.set_content("<html>", "text/html");
    } else if (mode == "nofield") {
      res.set_content(R"({"txt":"x"})", "application/json");
    } else {
      res.set_content(R"({"text":7})", "application/json");
    }
  });
  RemoteReasoner r(desc(BackendKind::reasoner, "m"),
                   std::make_shared<RemoteClient>(settings(ep.url())));
  for (const char* mode : {"status", "notjson", "nofield", "wrongtype"}) {
    EXPECT_THROW(r.complete(mode, std::nullopt), ProtocolError) << mode;
  }
}

TEST(RemoteClient, ConnectionRefusedIsTransport) {
  // Nothing listens on port 1 of the loopback interface.
  RemoteReasoner r(desc(BackendKind::reasoner, "m"),
                   std::make_shared<RemoteClient>(settings("http://127.0.0.1:1", 1.0)));
  EXPECT_THROW(r.complete("p", std::nullopt), TransportError);
}

TEST(RemoteClient, SlowServerIsTimeout) {
  FakeEndpoint ep;
  ep.server().Post("/v1/complete", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    res.set_content(R"({"text":"late"})", "application/json");
  });
  RemoteReasoner r(desc(BackendKind::reasoner, "m"),
                   std::make_shared<RemoteClient>(settings(ep.url(), 0.3)));
  try {
    r.complete("p", std::nullopt);
    FAIL() << "expected TimeoutError";
  } catch (const TimeoutError& e) {
    EXPECT_DOUBLE_EQ(e.budget_seconds(), 0.3);
  }
}

TEST(RemoteClient, SettingsValidation) {
  EXPECT_THROW(RemoteClient(RemoteSettings{"", "", 1.0}), ConfigError);
  EXPECT_THROW(RemoteClient(RemoteSettings{"http://x", "", 0.0}), ConfigError);
  ::setenv("SAFELENS_ENDPOINT", "http://env-host:9", 1);
  ::setenv("SAFELENS_API_TOKEN", "tok", 1);
  const auto s = RemoteSettings::from_environment();
  EXPECT_EQ(s.endpoint, "http://env-host:9");
  EXPECT_EQ(s.token, "tok");
  ::unsetenv("SAFELENS_ENDPOINT");
  ::unsetenv("SAFELENS_API_TOKEN");
}
