#include "edusim/llm.hpp"

#include "edusim/error.hpp"
#include "edusim/hashing.hpp"
#include "edusim/http.hpp"
#include "edusim/prompts.hpp"
#include "edusim/text.hpp"
#include "edusim/topic.hpp"

#include <cmath>
#include <fstream>
#include <thread>

namespace edusim {

using nlohmann::json;

std::string_view role_name(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::Assistant: return "assistant";
    case Role::User: break;
  }
  return "user";
}

void validate_request(const ChatRequest& req, const RequestBounds& bounds) {
  if (req.messages.empty()) throw ValidationError("chat request has no messages");
  if (!(req.temperature >= 0.0 && req.temperature <= bounds.max_temperature)) {
    throw ValidationError("temperature out of bounds");
  }
  if (req.max_new_tokens < 1 || req.max_new_tokens > bounds.max_new_tokens_limit) {
    throw ValidationError("max_new_tokens out of bounds");
  }
}

std::string transcript_text(const ChatRequest& req) {
  std::string out;
  for (const auto& m : req.messages) {
    out += "[";
    out += role_name(m.role);
    out += "]\n";
    out += m.text;
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- seeded mock

namespace {

std::string last_user_text(const ChatRequest& req) {
  for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
    if (it->role == Role::User) return it->text;
  }
  return {};
}

// Text between `header` and the next blank line.
std::string section_after(std::string_view s, std::string_view header) {
  const std::size_t at = s.find(header);
  if (at == std::string_view::npos) return {};
  std::string_view rest = s.substr(at + header.size());
  const std::size_t end = rest.find("\n\n");
  return text::trim(rest.substr(0, end));
}

std::string first_words(std::string_view s, std::size_t n) {
  auto words = text::split_whitespace(s);
  if (words.size() > n) words.resize(n);
  return text::join(words, " ");
}

}  // namespace

ChatResponse SeededMockBackend::complete(const ChatRequest& req) {
  validate_request(req);
  const std::string transcript = transcript_text(req);
  const std::uint64_t h = splitmix64(fnv1a64(transcript, splitmix64(seed_)));
  const std::string user = last_user_text(req);
  const std::string tag = hex64(h).substr(0, 8);
  std::string reply;

  if (text::contains(user, prompts::kExamAnswerCue)) {
    // Roughly one blank in seven; otherwise a number, preferring one from the problem.
    if (h % 7 == 0) {
      reply = "";
    } else {
      std::vector<std::string> numbers;
      for (const auto& tok : text::word_tokens(section_after(user, "Exam problem:\n"))) {
        if (std::isdigit(static_cast<unsigned char>(tok[0]))) numbers.push_back(tok);
      }
      const std::string answer = !numbers.empty() && (h >> 8) % 2 == 0
                                     ? numbers[(h >> 16) % numbers.size()]
                                     : std::to_string((h >> 24) % 100);
      reply = "Working through the problem (" + tag + ").\nANSWER: " + answer;
    }
  } else if (text::contains(user, prompts::kExamRetryCue)) {
    reply = "QUERY: " + first_words(section_after(user, "Exam problem:\n"), 6);
  } else if (text::contains(user, prompts::kExamQueryCue)) {
    reply = "QUERY: " + section_after(user, "Exam problem:\n");
  } else if (text::contains(user, prompts::kTeacherTaskCue)) {
    reply = "Let's work through this together (" + tag + "). The key idea comes straight from "
            "the example: " + section_after(user, "Retrieved question from the question bank:\n");
  } else if (text::contains(user, prompts::kTeacherQuestionCue) ||
             text::contains(user, prompts::kStudyIntentCue)) {
    // The prompt names the topic as "... <label>." (e.g. "about number theory.").
    std::string label = "math";
    for (Topic t : kAllTopics) {
      const std::string needle = " " + std::string(topic_label(t)) + ".";
      if (text::contains(user, needle)) label = topic_label(t);
    }
    reply = "I want to review " + label + " problems and their solutions (" + tag + ").";
  } else if (text::contains(user, prompts::kActionCue)) {
    const Topic topic = kAllTopics[(h >> 8) % kAllTopics.size()];
    switch (h % 3) {
      case 0: reply = "SELF_STUDY: " + std::string(topic_name(topic)); break;
      case 1: reply = "ASK_TEACHER: " + std::string(topic_name(topic)); break;
      default: reply = "REST"; break;
    }
  } else {
    reply = "mock reply " + tag;
  }

  return ChatResponse{reply,
                      Usage{text::estimate_tokens(transcript), text::estimate_tokens(reply)},
                      id()};
}

// ---------------------------------------------------------------- scripted mock

ScriptedMockBackend::ScriptedMockBackend(std::vector<ScriptEntry> entries)
    : entries_(std::move(entries)), served_(entries_.size(), 0) {
  for (const auto& e : entries_) {
    if (e.match.empty()) throw ValidationError("script entry has no match substring");
    if (e.responses.empty() && !e.transport_error) {
      throw ValidationError("script entry for '" + e.match.front() + "' has no response");
    }
  }
}

ChatResponse ScriptedMockBackend::complete(const ChatRequest& req) {
  validate_request(req);
  const std::string transcript = transcript_text(req);
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    bool ok = true;
    for (const auto& m : e.match) ok = ok && text::contains(transcript, m);
    if (!ok) continue;
    if (e.transport_error) throw TransportError("scripted transport failure (" + e.match.front() + ")");
    const std::size_t k = std::min(served_[i], e.responses.size() - 1);
    ++served_[i];
    const std::string& reply = e.responses[k];
    return ChatResponse{reply,
                        Usage{text::estimate_tokens(transcript), text::estimate_tokens(reply)},
                        id()};
  }
  throw UnscriptedError("unscripted request; last user message: " +
                        text::truncate_chars(last_user_text(req), 160));
}

std::vector<ScriptEntry> ScriptedMockBackend::parse_script(const json& j) {
  if (!j.is_array()) throw ParseError("script must be a JSON array");
  std::vector<ScriptEntry> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& rec = j[i];
    try {
      ScriptEntry e;
      const auto& m = rec.at("match");
      if (m.is_string()) {
        e.match.push_back(m.get<std::string>());
      } else {
        e.match = m.get<std::vector<std::string>>();
      }
      if (rec.contains("response")) e.responses.push_back(rec.at("response").get<std::string>());
      if (rec.contains("responses")) {
        for (const auto& r : rec.at("responses")) e.responses.push_back(r.get<std::string>());
      }
      if (rec.contains("error")) {
        if (rec.at("error").get<std::string>() != "transport") {
          throw ParseError("unknown error kind");
        }
        e.transport_error = true;
      }
      if (e.responses.empty() && !e.transport_error) throw ParseError("entry needs a response or an error");
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ParseError("script entry " + std::to_string(i) + ": " + ex.what());
    } catch (const ParseError& ex) {
      throw ParseError("script entry " + std::to_string(i) + ": " + ex.what());
    }
  }
  return out;
}

std::vector<ScriptEntry> ScriptedMockBackend::load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read script file " + path.string());
  try {
    return parse_script(json::parse(in));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- remote

RemoteChatBackend::RemoteChatBackend(std::shared_ptr<HttpTransport> transport, std::string path,
                                     std::string model, RetryPolicy retry, Sleeper sleeper)
    : transport_(std::move(transport)), path_(std::move(path)), model_(std::move(model)),
      retry_(retry), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

json RemoteChatBackend::request_body(const ChatRequest& req) const {
  json messages = json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", std::string(role_name(m.role))}, {"content", m.text}});
  }
  return json{{"model", model_},
              {"messages", messages},
              {"temperature", req.temperature},
              {"max_tokens", req.max_new_tokens}};
}

ChatResponse RemoteChatBackend::complete(const ChatRequest& req) {
  validate_request(req);
  const json body = request_body(req);
  std::string last_error;
  for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double factor = std::pow(retry_.backoff, attempt - 1);
      sleeper_(std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(retry_.base_delay.count()) * factor)));
    }
    HttpResponse resp;
    try {
      resp = transport_->post_json(path_, body);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    if (resp.status == 429 || resp.status >= 500) {
      last_error = "HTTP " + std::to_string(resp.status);
      continue;
    }
    if (resp.status < 200 || resp.status >= 300) {
      throw TransportError("chat completion rejected with HTTP " + std::to_string(resp.status) +
                           ": " + text::truncate_chars(resp.body, 200));
    }
    try {
      const auto j = json::parse(resp.body);
      const auto& msg = j.at("choices").at(0).at("message");
      ChatResponse out;
      out.text = msg.contains("content") && msg.at("content").is_string()
                     ? msg.at("content").get<std::string>() : std::string();
      if (j.contains("usage") && j.at("usage").is_object()) {
        const auto& u = j.at("usage");
        out.usage = Usage{u.value("prompt_tokens", 0), u.value("completion_tokens", 0)};
      }
      out.backend_id = id();
      return out;
    } catch (const json::exception& e) {
      last_error = std::string("malformed completion: ") + e.what();
    }
  }
  throw TransportError("chat completion failed after " + std::to_string(retry_.max_retries + 1) +
                       " attempts: " + last_error);
}

}  // namespace edusim
