#pragma once

#include "edusim/engine.hpp"
#include "edusim/llm.hpp"
#include "edusim/qbank.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace edusim {

inline constexpr const char* kCodeVersion = "0.1.0";

// Environment variables. Endpoints and tokens never come from files or flags.
inline constexpr const char* kEnvLlmEndpoint = "EDUSIM_LLM_ENDPOINT";
inline constexpr const char* kEnvLlmApiKey = "EDUSIM_LLM_API_KEY";
inline constexpr const char* kEnvEmbedEndpoint = "EDUSIM_EMBED_ENDPOINT";
inline constexpr const char* kEnvEmbedApiKey = "EDUSIM_EMBED_API_KEY";
inline constexpr const char* kEnvClassifierEndpoint = "EDUSIM_CLASSIFIER_ENDPOINT";
inline constexpr const char* kEnvClassifierApiKey = "EDUSIM_CLASSIFIER_API_KEY";

enum class BackendKind { Mock, Scripted, Remote };
std::string_view backend_kind_name(BackendKind k);
std::optional<BackendKind> parse_backend_kind(std::string_view s);

struct AppConfig {
  RunConfig run;
  MatrixSpec matrix;
  int width = 1;

  BackendKind backend = BackendKind::Mock;
  std::string script_path;  // scripted backend scenario table
  std::string llm_model;    // remote backend model name
  std::string chat_path = "/v1/chat/completions";
  RetryPolicy retry;

  std::string embedder = "hash";  // hash | remote
  std::size_t embedding_dim = 256;
  std::string embedding_model;
  std::string embedding_path = "/v1/embeddings";

  std::string classifier = "keyword";  // keyword | remote
  std::string classifier_path = "/classify";
  double min_confidence = kDefaultMinConfidence;
  double dev_fraction = 0.7;

  std::string bank_path = "bank.jsonl";
  std::string output_dir = "runs";

  // Every problem found; empty means valid.
  std::vector<std::string> validate(const QuestionBank* bank = nullptr) const;
};

// Keys mirror the AppConfig fields; "run" holds RunConfig keys and
// "matrix" holds {rounds, repeats, personalities, topics}. Unknown keys
// and secret-looking keys are rejected.
nlohmann::ordered_json app_config_to_json(const AppConfig& c);
AppConfig app_config_from_json(const nlohmann::json& j, AppConfig base = {});
AppConfig load_app_config(const std::filesystem::path& path, AppConfig base = {});

// Dotted paths of fields that differ from the built-in defaults.
std::vector<std::string> config_diff(const nlohmann::ordered_json& actual,
                                     const nlohmann::ordered_json& defaults);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
EnvLookup process_env();

// Builders honoring the environment for endpoints and tokens.
std::unique_ptr<EmbeddingProvider> make_embedder(const AppConfig& c, const EnvLookup& env);
std::unique_ptr<TopicClassifier> make_classifier(const AppConfig& c, const EnvLookup& env);
BackendFactory make_backend_factory(const AppConfig& c, const EnvLookup& env);

// Resolved configuration plus code version; no timestamps, no secrets.
nlohmann::ordered_json make_manifest(std::string_view command, const AppConfig& c,
                                     const std::vector<std::string>& args);
void write_manifest(const std::filesystem::path& path, const nlohmann::ordered_json& manifest);

}  // namespace edusim
