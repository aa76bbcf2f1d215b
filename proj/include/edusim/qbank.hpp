#pragma once

#include "edusim/topic.hpp"
#include "edusim/vecstore.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace edusim {

inline constexpr int kBankSchemaVersion = 1;
inline constexpr double kDefaultMinConfidence = 0.95;

// Retained questions per topic (topic order) for the full reference source
// corpus at the default threshold. The corpus itself is external.
inline constexpr std::array<std::size_t, 4> kReferenceBankCounts = {1341, 484, 547, 672};

enum class Split { Unassigned, Dev, Test };

std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view s);

struct Question {
  std::string id;
  Topic topic = Topic::Algebra;
  std::string statement;
  std::string solution;
  std::string answer_latex;
  std::string answer_plain;
  double confidence = 0.0;
  Split split = Split::Unassigned;
  std::optional<EmbeddingVector> embedding;

  friend bool operator==(const Question&, const Question&) = default;
};

// Immutable after construction; safe to share across threads.
class QuestionBank {
 public:
  QuestionBank() = default;
  // Throws InvariantError on duplicate ids, empty answers or confidence
  // outside [0, 1].
  explicit QuestionBank(std::vector<Question> questions);

  const std::vector<Question>& questions() const { return questions_; }
  std::size_t size() const { return questions_.size(); }
  bool empty() const { return questions_.empty(); }

  const Question* find(std::string_view id) const;
  const Question& at(std::string_view id) const;

  // Ids in bank order.
  const std::vector<std::string>& ids(Topic t) const { return by_topic_[topic_index(t)]; }
  std::vector<std::string> ids(Topic t, Split s) const;
  std::vector<std::string> ids(Split s) const;
  std::size_t count(Topic t) const { return ids(t).size(); }

  // True once every question carries Dev or Test.
  bool is_split() const;
  bool is_embedded() const;

  friend bool operator==(const QuestionBank& a, const QuestionBank& b) {
    return a.questions_ == b.questions_;
  }

 private:
  std::vector<Question> questions_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::array<std::vector<std::string>, 4> by_topic_;
};

// One source problem before classification.
struct RawRecord {
  std::string id;  // optional; derived from the statement hash when empty
  std::string statement;
  std::string solution;
  std::string answer_latex;
  std::string answer_plain;
};

// Parses one JSON object. Accepts "statement" or "problem"; answers from
// "answer_latex"/"answer_plain"/"answer".
RawRecord raw_record_from_json(const nlohmann::json& j);
std::vector<RawRecord> load_raw_records(const std::filesystem::path& path);

struct Classification {
  Topic topic = Topic::Algebra;
  double confidence = 0.0;
};

class TopicClassifier {
 public:
  virtual ~TopicClassifier() = default;
  virtual Classification classify(std::string_view statement) = 0;
};

// Deterministic offline classifier. Confidence is a softmax over
// 2 * (keyword hits per topic), so a topic needs a clear keyword lead to
// clear 0.95; a statement with no hits gets 0.25.
class KeywordClassifier final : public TopicClassifier {
 public:
  Classification classify(std::string_view statement) override;
};

// Client for a hosted classifier: POST {"statement": ...} and read
// {"label": ..., "confidence": ...}.
class RemoteClassifier final : public TopicClassifier {
 public:
  RemoteClassifier(std::shared_ptr<HttpTransport> transport, std::string path);
  Classification classify(std::string_view statement) override;

 private:
  std::shared_ptr<HttpTransport> transport_;
  std::string path_;
};

struct SkippedRecord {
  std::size_t index = 0;
  std::string id;
  std::string reason;
};

struct IngestResult {
  QuestionBank bank;
  std::vector<SkippedRecord> skipped;
  std::array<std::size_t, 4> topic_counts{};
};

// Classifies and filters records; keeps those with confidence strictly
// above min_confidence. Bad records and classifier failures are skipped.
IngestResult ingest(const std::vector<RawRecord>& records, TopicClassifier& classifier,
                    double min_confidence = kDefaultMinConfidence);

// Stratified per-topic Dev/Test assignment, deterministic in `seed`.
// Topics with no questions are ignored; a topic that cannot yield at least
// one question on each side throws ValidationError.
QuestionBank split_bank(const QuestionBank& bank, double dev_fraction, std::uint64_t seed);

// Attaches statement embeddings to every question lacking one.
QuestionBank embed_bank(const QuestionBank& bank, const EmbeddingProvider& provider);

// Line-delimited JSON, one question per line, each with "schema_version".
void save_bank(const QuestionBank& bank, const std::filesystem::path& path);
QuestionBank load_bank(const std::filesystem::path& path);

nlohmann::ordered_json question_to_json(const Question& q);
Question question_from_json(const nlohmann::json& j);

// Plain-text rendering of a LaTeX answer: math delimiters and command
// tokens removed, \frac{a}{b} -> a/b, \sqrt{x} -> sqrt(x).
std::string latex_to_plain(std::string_view latex);

// Content of the last \boxed{...} in `s`, if any.
std::optional<std::string> last_boxed(std::string_view s);

}  // namespace edusim
