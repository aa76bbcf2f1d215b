#include "edusim/config.hpp"

#include "edusim/error.hpp"
#include "edusim/http.hpp"
#include "edusim/record_io.hpp"
#include "edusim/text.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace edusim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view backend_kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::Mock: return "mock";
    case BackendKind::Scripted: return "scripted";
    case BackendKind::Remote: return "remote";
  }
  return "mock";
}

std::optional<BackendKind> parse_backend_kind(std::string_view s) {
  if (s == "mock") return BackendKind::Mock;
  if (s == "scripted") return BackendKind::Scripted;
  if (s == "remote") return BackendKind::Remote;
  return std::nullopt;
}

std::vector<std::string> AppConfig::validate(const QuestionBank* bank) const {
  std::vector<std::string> errors = run.validate(bank);
  if (width < 1) errors.push_back("width must be >= 1");
  if (matrix.rounds.empty()) errors.push_back("matrix.rounds must not be empty");
  for (int r : matrix.rounds) {
    if (r < 0) errors.push_back("matrix.rounds entries must be >= 0");
  }
  if (matrix.repeats < 1) errors.push_back("matrix.repeats must be >= 1");
  if (matrix.personalities.empty()) errors.push_back("matrix.personalities must not be empty");
  if (matrix.topics.empty()) errors.push_back("matrix.topics must not be empty");
  if (backend == BackendKind::Scripted && script_path.empty())
    errors.push_back("scripted backend requires script_path");
  if (backend == BackendKind::Remote && llm_model.empty())
    errors.push_back("remote backend requires llm_model");
  if (retry.max_retries < 0) errors.push_back("retry.max_retries must be >= 0");
  if (retry.backoff < 1.0) errors.push_back("retry.backoff must be >= 1");
  if (embedder != "hash" && embedder != "remote") errors.push_back("embedder must be 'hash' or 'remote'");
  if (embedding_dim == 0) errors.push_back("embedding_dim must be > 0");
  if (embedder == "remote" && embedding_model.empty())
    errors.push_back("remote embedder requires embedding_model");
  if (classifier != "keyword" && classifier != "remote")
    errors.push_back("classifier must be 'keyword' or 'remote'");
  if (!(min_confidence >= 0.0 && min_confidence <= 1.0))
    errors.push_back("min_confidence must be in [0, 1]");
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) errors.push_back("dev_fraction must be in (0, 1)");
  if (output_dir.empty()) errors.push_back("output_dir must not be empty");
  return errors;
}

ordered_json app_config_to_json(const AppConfig& c) {
  ordered_json j;
  j["run"] = run_config_to_json(c.run);
  ordered_json m;
  m["rounds"] = c.matrix.rounds;
  m["repeats"] = c.matrix.repeats;
  ordered_json ps = ordered_json::array();
  for (Trait t : c.matrix.personalities) ps.push_back(trait_name(t));
  m["personalities"] = ps;
  ordered_json ts = ordered_json::array();
  for (Topic t : c.matrix.topics) ts.push_back(topic_name(t));
  m["topics"] = ts;
  j["matrix"] = m;
  j["width"] = c.width;
  j["backend"] = backend_kind_name(c.backend);
  j["script_path"] = c.script_path;
  j["llm_model"] = c.llm_model;
  j["chat_path"] = c.chat_path;
  ordered_json r;
  r["max_retries"] = c.retry.max_retries;
  r["base_delay_ms"] = c.retry.base_delay.count();
  r["backoff"] = c.retry.backoff;
  j["retry"] = r;
  j["embedder"] = c.embedder;
  j["embedding_dim"] = c.embedding_dim;
  j["embedding_model"] = c.embedding_model;
  j["embedding_path"] = c.embedding_path;
  j["classifier"] = c.classifier;
  j["classifier_path"] = c.classifier_path;
  j["min_confidence"] = c.min_confidence;
  j["dev_fraction"] = c.dev_fraction;
  j["bank_path"] = c.bank_path;
  j["output_dir"] = c.output_dir;
  return j;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (known.count(key)) continue;
    const std::string lower = text::to_lower(key);
    if (text::contains(lower, "key") || text::contains(lower, "token") ||
        text::contains(lower, "secret") || text::contains(lower, "password")) {
      throw ValidationError(where + key + ": secrets are read from the environment only");
    }
    throw ValidationError("unknown config key '" + where + key + "'");
  }
}

}  // namespace

AppConfig app_config_from_json(const json& j, AppConfig c) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  reject_unknown(j,
                 {"run", "matrix", "width", "backend", "script_path", "llm_model", "chat_path", "retry",
                  "embedder", "embedding_dim", "embedding_model", "embedding_path", "classifier",
                  "classifier_path", "min_confidence", "dev_fraction", "bank_path", "output_dir"},
                 "");
  try {
    if (j.contains("run")) {
      reject_unknown(j.at("run"),
                     {"personality", "variant", "learning_rounds", "repeat", "exam_topic", "exam_size",
                      "seed", "student_temperature", "teacher_temperature", "max_new_tokens",
                      "merge_threshold", "learning", "exam", "costs", "score_mode", "shared_exam_set"},
                     "run.");
      c.run = run_config_from_json(j.at("run"), c.run);
    }
    if (j.contains("matrix")) {
      const auto& m = j.at("matrix");
      reject_unknown(m, {"rounds", "repeats", "personalities", "topics"}, "matrix.");
      if (m.contains("rounds")) c.matrix.rounds = m.at("rounds").get<std::vector<int>>();
      c.matrix.repeats = m.value("repeats", c.matrix.repeats);
      if (m.contains("personalities")) {
        c.matrix.personalities.clear();
        for (const auto& s : m.at("personalities")) c.matrix.personalities.push_back(parse_trait_or_throw(s.get<std::string>()));
      }
      if (m.contains("topics")) {
        c.matrix.topics.clear();
        for (const auto& s : m.at("topics")) c.matrix.topics.push_back(parse_topic_or_throw(s.get<std::string>()));
      }
    }
    c.width = j.value("width", c.width);
    if (j.contains("backend")) {
      auto b = parse_backend_kind(j.at("backend").get<std::string>());
      if (!b) throw ValidationError("backend must be 'mock', 'scripted' or 'remote'");
      c.backend = *b;
    }
    c.script_path = j.value("script_path", c.script_path);
    c.llm_model = j.value("llm_model", c.llm_model);
    c.chat_path = j.value("chat_path", c.chat_path);
    if (j.contains("retry")) {
      const auto& r = j.at("retry");
      reject_unknown(r, {"max_retries", "base_delay_ms", "backoff"}, "retry.");
      c.retry.max_retries = r.value("max_retries", c.retry.max_retries);
      c.retry.base_delay = std::chrono::milliseconds(r.value("base_delay_ms", c.retry.base_delay.count()));
      c.retry.backoff = r.value("backoff", c.retry.backoff);
    }
    c.embedder = j.value("embedder", c.embedder);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.embedding_model = j.value("embedding_model", c.embedding_model);
    c.embedding_path = j.value("embedding_path", c.embedding_path);
    c.classifier = j.value("classifier", c.classifier);
    c.classifier_path = j.value("classifier_path", c.classifier_path);
    c.min_confidence = j.value("min_confidence", c.min_confidence);
    c.dev_fraction = j.value("dev_fraction", c.dev_fraction);
    c.bank_path = j.value("bank_path", c.bank_path);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  return c;
}

AppConfig load_app_config(const std::filesystem::path& path, AppConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return app_config_from_json(j, std::move(base));
}

namespace {

void diff_into(const ordered_json& a, const ordered_json& d, const std::string& prefix,
               std::vector<std::string>& out) {
  if (a.is_object() && d.is_object()) {
    for (const auto& [key, value] : a.items()) {
      const std::string path = prefix.empty() ? key : prefix + "." + key;
      if (!d.contains(key)) {
        out.push_back(path);
        continue;
      }
      diff_into(value, d.at(key), path, out);
    }
    return;
  }
  if (a != d) out.push_back(prefix);
}

}  // namespace

std::vector<std::string> config_diff(const ordered_json& actual, const ordered_json& defaults) {
  std::vector<std::string> out;
  diff_into(actual, defaults, "", out);
  return out;
}

EnvLookup process_env() {
  return [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
}

namespace {

std::shared_ptr<HttpTransport> transport_from_env(const EnvLookup& env, const char* endpoint_var,
                                                  const char* key_var) {
  auto endpoint = env(endpoint_var);
  if (!endpoint) throw ValidationError(std::string(endpoint_var) + " is not set");
  HttpEndpoint ep;
  ep.base_url = *endpoint;
  if (auto key = env(key_var)) ep.headers.emplace_back("Authorization", "Bearer " + *key);
  return make_http_transport(std::move(ep));
}

}  // namespace

std::unique_ptr<EmbeddingProvider> make_embedder(const AppConfig& c, const EnvLookup& env) {
  if (c.embedder == "remote") {
    return std::make_unique<RemoteEmbeddingProvider>(
        transport_from_env(env, kEnvEmbedEndpoint, kEnvEmbedApiKey), c.embedding_path,
        c.embedding_model, c.embedding_dim);
  }
  return std::make_unique<HashEmbeddingProvider>(c.embedding_dim);
}

std::unique_ptr<TopicClassifier> make_classifier(const AppConfig& c, const EnvLookup& env) {
  if (c.classifier == "remote") {
    return std::make_unique<RemoteClassifier>(
        transport_from_env(env, kEnvClassifierEndpoint, kEnvClassifierApiKey), c.classifier_path);
  }
  return std::make_unique<KeywordClassifier>();
}

BackendFactory make_backend_factory(const AppConfig& c, const EnvLookup& env) {
  switch (c.backend) {
    case BackendKind::Mock:
      return [](const RunConfig&, std::uint64_t seed) -> std::unique_ptr<ChatBackend> {
        return std::make_unique<SeededMockBackend>(seed);
      };
    case BackendKind::Scripted: {
      auto entries = std::make_shared<const std::vector<ScriptEntry>>(
          ScriptedMockBackend::load_script(c.script_path));
      return [entries](const RunConfig&, std::uint64_t) -> std::unique_ptr<ChatBackend> {
        return std::make_unique<ScriptedMockBackend>(*entries);
      };
    }
    case BackendKind::Remote: {
      auto transport = transport_from_env(env, kEnvLlmEndpoint, kEnvLlmApiKey);
      return [transport, path = c.chat_path, model = c.llm_model, retry = c.retry](
                 const RunConfig&, std::uint64_t) -> std::unique_ptr<ChatBackend> {
        return std::make_unique<RemoteChatBackend>(transport, path, model, retry);
      };
    }
  }
  throw ValidationError("unknown backend");
}

ordered_json make_manifest(std::string_view command, const AppConfig& c,
                           const std::vector<std::string>& args) {
  ordered_json m;
  m["kind"] = "manifest";
  m["command"] = command;
  m["code_version"] = kCodeVersion;
  m["args"] = args;
  const ordered_json resolved = app_config_to_json(c);
  m["overrides"] = config_diff(resolved, app_config_to_json(AppConfig{}));
  m["config"] = resolved;
  return m;
}

void write_manifest(const std::filesystem::path& path, const ordered_json& manifest) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw ValidationError("cannot write manifest " + path.string());
  out << manifest.dump(2) << "\n";
}

}  // namespace edusim
