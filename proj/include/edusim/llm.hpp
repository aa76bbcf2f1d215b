#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace edusim {

class HttpTransport;

enum class Role { System, User, Assistant };
std::string_view role_name(Role r);

struct Message {
  Role role = Role::User;
  std::string text;
};

struct ChatRequest {
  std::vector<Message> messages;
  double temperature = 0.5;
  int max_new_tokens = 500;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;  // may be empty
  std::optional<Usage> usage;
  std::string backend_id;
};

struct RequestBounds {
  double max_temperature = 2.0;
  int max_new_tokens_limit = 8192;
};

// Throws ValidationError for an empty message list or out-of-bounds sampling settings.
void validate_request(const ChatRequest& req, const RequestBounds& bounds = {});

// Role-tagged rendering of all messages; the input to mock matching and hashing.
std::string transcript_text(const ChatRequest& req);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
  virtual std::string id() const = 0;
};

// Deterministic generative stand-in: the reply is a pure function of
// (seed, full transcript). It recognizes the simulation's task prompts and
// answers in their reply grammar; anything else gets a hash-tagged echo.
class SeededMockBackend final : public ChatBackend {
 public:
  explicit SeededMockBackend(std::uint64_t seed = 42) : seed_(seed) {}
  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override { return "mock:seeded:" + std::to_string(seed_); }

 private:
  std::uint64_t seed_;
};

// One scenario rule. All `match` substrings must occur in the transcript.
// Responses are served in order and the last one repeats.
struct ScriptEntry {
  std::vector<std::string> match;
  std::vector<std::string> responses;
  bool transport_error = false;
};

// Scenario-table mock: first entry (in file order) whose substrings all
// match wins. No match is an UnscriptedError.
class ScriptedMockBackend final : public ChatBackend {
 public:
  explicit ScriptedMockBackend(std::vector<ScriptEntry> entries);
  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override { return "mock:scripted"; }

  // JSON array of {"match": str|[str], "response": str | "responses": [str] | "error": "transport"}.
  static std::vector<ScriptEntry> parse_script(const nlohmann::json& j);
  static std::vector<ScriptEntry> load_script(const std::filesystem::path& path);

 private:
  std::vector<ScriptEntry> entries_;
  std::vector<std::size_t> served_;
  std::mutex mutex_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{500};
  double backoff = 2.0;
};

// OpenAI-compatible chat-completions client with bounded exponential-backoff retries.
class RemoteChatBackend final : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  RemoteChatBackend(std::shared_ptr<HttpTransport> transport, std::string path, std::string model,
                    RetryPolicy retry = {}, Sleeper sleeper = {});
  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override { return "remote:" + model_; }

  // Request body for the wire format.
  nlohmann::json request_body(const ChatRequest& req) const;

 private:
  std::shared_ptr<HttpTransport> transport_;
  std::string path_;
  std::string model_;
  RetryPolicy retry_;
  Sleeper sleeper_;
};

}  // namespace edusim
