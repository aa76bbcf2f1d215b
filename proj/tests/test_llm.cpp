#include "edusim/error.hpp"
#include "edusim/http.hpp"
#include "edusim/llm.hpp"
#include "edusim/prompts.hpp"
#include "edusim/vecstore.hpp"

#include "support.hpp"

#include <httplib.h>
#include <doctest.h>

#include <atomic>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

using namespace edusim;
using nlohmann::json;

namespace {

ChatRequest user(std::string text, std::string system = "sys") {
  ChatRequest r;
  r.messages = {{Role::System, std::move(system)}, {Role::User, std::move(text)}};
  return r;
}

// Local HTTP server on an ephemeral port for the lifetime of the object.
class LocalServer {
 public:
  explicit LocalServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", handler);
    server_.Post("/embed", handler);
    server_.Post("/classify", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string completion(const std::string& text) {
  return json{{"choices", json::array({json{{"message", json{{"role", "assistant"}, {"content", text}}}}})},
              {"usage", json{{"prompt_tokens", 11}, {"completion_tokens", 3}}}}
      .dump();
}

}  // namespace

TEST_CASE("request validation") {
  CHECK_THROWS_AS(validate_request(ChatRequest{}), ValidationError);
  auto r = user("hi");
  r.temperature = -0.1;
  CHECK_THROWS_AS(validate_request(r), ValidationError);
  r.temperature = 0.5;
  r.max_new_tokens = 0;
  CHECK_THROWS_AS(validate_request(r), ValidationError);
  r.max_new_tokens = 500;
  CHECK_NOTHROW(validate_request(r));
  CHECK(ChatRequest{}.temperature == 0.5);
  CHECK(ChatRequest{}.max_new_tokens == 500);
}

TEST_CASE("seeded mock is a pure function of seed and transcript") {
  SeededMockBackend a(42), b(42), c(43);
  const auto req = user("Learning round 1 of 10. Now choose an action for this round.");
  const auto ra = a.complete(req), rb = b.complete(req);
  CHECK(ra.text == rb.text);
  CHECK(ra.backend_id == "mock:seeded:42");
  CHECK(a.complete(req).text == ra.text);
  bool differs = false;
  for (int i = 0; i < 20 && !differs; ++i) {
    const auto r = user("round " + std::to_string(i) + " choose an action");
    differs = a.complete(r).text != c.complete(r).text;
  }
  CHECK(differs);
}

TEST_CASE("seeded mock follows the reply grammars") {
  SeededMockBackend m(42);
  for (int i = 0; i < 30; ++i) {
    const auto act = m.complete(user("Learning round " + std::to_string(i) + ". Now choose an action")).text;
    CHECK((act.rfind("SELF_STUDY:", 0) == 0 || act.rfind("ASK_TEACHER:", 0) == 0 || act == "REST"));
    const auto q = m.complete(user("Exam problem:\nFind x " + std::to_string(i) + "\n\nBefore answering, write a memory query")).text;
    CHECK(q.rfind("QUERY:", 0) == 0);
    const auto ans = m.complete(user("Exam problem:\nFind x " + std::to_string(i) + "\n\nNow solve the problem")).text;
    CHECK((ans.empty() || ans.find("\nANSWER: ") != std::string::npos));
  }
}

TEST_CASE("scripted mock serves matching entries in order and repeats the last") {
  auto backend = testing::scripted(json::array({
      json{{"match", "choose an action"}, {"responses", json::array({"ASK_TEACHER: algebra", "REST"})}},
      json{{"match", json::array({"alpha", "beta"})}, {"response", "both"}},
      json{{"match", "boom"}, {"error", "transport"}},
  }));
  CHECK(backend->complete(user("now choose an action")).text == "ASK_TEACHER: algebra");
  CHECK(backend->complete(user("now choose an action")).text == "REST");
  CHECK(backend->complete(user("now choose an action")).text == "REST");
  CHECK(backend->complete(user("alpha", "beta")).text == "both");
  CHECK_THROWS_AS(backend->complete(user("alpha only")), UnscriptedError);
  CHECK_THROWS_AS(backend->complete(user("boom")), TransportError);
  CHECK(backend->id() == "mock:scripted");
}

TEST_CASE("scripted mock rejects malformed scripts") {
  CHECK_THROWS(ScriptedMockBackend::parse_script(json::object()));
  CHECK_THROWS(ScriptedMockBackend::parse_script(json::array({json{{"response", "x"}}})));
  CHECK_THROWS(ScriptedMockBackend::parse_script(json::array({json{{"match", "x"}}})));
}

TEST_CASE("remote backend sends the wire format and parses the reply") {
  std::atomic<int> calls{0};
  json seen;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    seen = json::parse(req.body);
    CHECK(req.get_header_value("Authorization") == "Bearer t0k");
    res.set_content(completion("ASK_TEACHER: geometry"), "application/json");
  });
  HttpEndpoint ep;
  ep.base_url = server.url();
  ep.headers = {{"Authorization", "Bearer t0k"}};
  RemoteChatBackend backend(make_http_transport(ep), "/v1/chat/completions", "test-model");
  auto req = user("hello");
  req.temperature = 0.3;
  const auto r = backend.complete(req);
  CHECK(r.text == "ASK_TEACHER: geometry");
  REQUIRE(r.usage);
  CHECK(r.usage->prompt_tokens == 11);
  CHECK(r.backend_id == "remote:test-model");
  CHECK(calls == 1);
  CHECK(seen.at("model") == "test-model");
  CHECK(seen.at("temperature") == 0.3);
  CHECK(seen.at("max_tokens") == 500);
  CHECK(seen.at("messages").size() == 2);
  CHECK(seen.at("messages")[0].at("role") == "system");
}

TEST_CASE("remote backend retries 5xx and 429 with exponential backoff") {
  std::atomic<int> calls{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    const int n = ++calls;
    if (n == 1) {
      res.status = 503;
    } else if (n == 2) {
      res.status = 429;
    } else {
      res.set_content(completion("ok"), "application/json");
    }
  });
  std::vector<long long> sleeps;
  RemoteChatBackend backend(make_http_transport(HttpEndpoint{server.url(), {}}), "/v1/chat/completions", "m",
                            RetryPolicy{3, std::chrono::milliseconds(100), 2.0},
                            [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  CHECK(backend.complete(user("x")).text == "ok");
  CHECK(calls == 3);
  CHECK(sleeps == std::vector<long long>{100, 200});
}

TEST_CASE("remote backend does not retry other 4xx") {
  std::atomic<int> calls{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 401;
  });
  RemoteChatBackend backend(make_http_transport(HttpEndpoint{server.url(), {}}), "/v1/chat/completions", "m",
                            RetryPolicy{3, std::chrono::milliseconds(1), 2.0}, [](auto) {});
  CHECK_THROWS_AS(backend.complete(user("x")), TransportError);
  CHECK(calls == 1);
}

TEST_CASE("unreachable remote backend fails with a transport error after the configured retries") {
  // A port that was bound and released without listening refuses connections.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  ::close(fd);
  HttpEndpoint ep;
  ep.base_url = "http://127.0.0.1:" + std::to_string(port);
  ep.connect_timeout = std::chrono::milliseconds(200);
  ep.read_timeout = std::chrono::milliseconds(500);
  int sleeps = 0;
  RemoteChatBackend backend(make_http_transport(ep), "/v1/chat/completions", "m",
                            RetryPolicy{2, std::chrono::milliseconds(1), 2.0}, [&](auto) { ++sleeps; });
  try {
    backend.complete(user("x"));
    FAIL("expected transport error");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
  }
  CHECK(sleeps == 2);
}

TEST_CASE("remote embedding provider and classifier clients") {
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    if (req.path == "/embed") {
      CHECK(body.at("input") == "hello");
      res.set_content(json{{"data", json::array({json{{"embedding", {3.0, 4.0}}}})}}.dump(), "application/json");
    } else {
      CHECK(body.at("statement") == "find the area");
      res.set_content(json{{"label", "Geometry"}, {"confidence", 0.98}}.dump(), "application/json");
    }
  });
  auto transport = make_http_transport(HttpEndpoint{server.url(), {}});
  RemoteEmbeddingProvider emb(transport, "/embed", "e", 2);
  const auto v = embed("hello", emb);
  CHECK(v.values()[0] == doctest::Approx(0.6));
  CHECK(v.values()[1] == doctest::Approx(0.8));
  RemoteEmbeddingProvider wrong_dim(transport, "/embed", "e", 3);
  CHECK_THROWS_AS(embed("hello", wrong_dim), DimensionError);
  RemoteClassifier cls(transport, "/classify");
  const auto c = cls.classify("find the area");
  CHECK(c.topic == Topic::Geometry);
  CHECK(c.confidence == doctest::Approx(0.98));
}
