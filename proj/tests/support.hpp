#pragma once

#include "edusim/agents.hpp"
#include "edusim/engine.hpp"
#include "edusim/llm.hpp"
#include "edusim/qbank.hpp"
#include "edusim/synthetic.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <unistd.h>

#include <json.hpp>

namespace edusim::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("edusim-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << body;
}

inline Question make_question(std::string id, Topic topic, std::string statement,
                              Split split = Split::Dev, std::string latex = "5",
                              std::string plain = "5") {
  Question q;
  q.id = std::move(id);
  q.topic = topic;
  q.statement = std::move(statement);
  q.solution = "Worked solution. The answer is $\\boxed{" + latex + "}$.";
  q.answer_latex = std::move(latex);
  q.answer_plain = std::move(plain);
  q.confidence = 0.99;
  q.split = split;
  return q;
}

// Split, embedded bank built from the synthetic corpus.
inline std::shared_ptr<const QuestionBank> synthetic_bank(std::size_t per_topic = 40,
                                                          std::uint64_t seed = 42,
                                                          std::size_t dim = 256) {
  KeywordClassifier classifier;
  auto ingested = ingest(make_synthetic_corpus({per_topic, 0, seed}), classifier);
  HashEmbeddingProvider embedder(dim);
  return std::make_shared<const QuestionBank>(
      embed_bank(split_bank(ingested.bank, 0.7, seed), embedder));
}

// Scenario entries in cue-specificity order: the exam conversation
// accumulates earlier prompts and the learning system prompt mentions the
// action cue, so specific cues must precede general ones.
inline nlohmann::json scenario(const std::string& action, const std::string& exam_answer = "ANSWER: 5",
                               const std::string& exam_query = "QUERY: similar problem",
                               const std::string& teacher = "Here is the explanation.") {
  using nlohmann::json;
  return json::array({
      json{{"match", "Now solve the problem"}, {"response", exam_answer}},
      json{{"match", "returned no memories"}, {"response", "QUERY: related method"}},
      json{{"match", "write a memory query"}, {"response", exam_query}},
      json{{"match", "Student question:"}, {"response", teacher}},
      json{{"match", "state what you want to review"}, {"response", "I want to review problems."}},
      json{{"match", "write the question you want to ask the teacher"},
           {"response", "Can you explain this topic with an example?"}},
      json{{"match", "choose an action"}, {"response", action}},
  });
}

inline std::unique_ptr<ScriptedMockBackend> scripted(const nlohmann::json& j) {
  return std::make_unique<ScriptedMockBackend>(ScriptedMockBackend::parse_script(j));
}

// Minimal fixture wiring one student to a bank index and backend.
struct Harness {
  std::shared_ptr<const QuestionBank> bank;
  HashEmbeddingProvider embedder;
  BankIndex index;
  AgentSettings settings;
  Rng rng;

  explicit Harness(std::shared_ptr<const QuestionBank> b, std::size_t dim = 256)
      : bank(std::move(b)), embedder(dim), index(bank, embedder), rng(7) {}

  AgentContext context(ChatBackend& backend) {
    return AgentContext{index, embedder, backend, settings, rng};
  }
};

}  // namespace edusim::testing
