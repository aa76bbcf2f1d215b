#include "edusim/qbank.hpp"

#include "edusim/error.hpp"
#include "edusim/hashing.hpp"
#include "edusim/http.hpp"
#include "edusim/scoring.hpp"
#include "edusim/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_set>

namespace edusim {

using nlohmann::json;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Dev: return "dev";
    case Split::Test: return "test";
    case Split::Unassigned: break;
  }
  return "unassigned";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  if (s == "unassigned") return Split::Unassigned;
  return std::nullopt;
}

// ---------------------------------------------------------------- bank

QuestionBank::QuestionBank(std::vector<Question> questions) : questions_(std::move(questions)) {
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    const auto& q = questions_[i];
    if (q.id.empty()) throw InvariantError("question at position " + std::to_string(i) + " has no id");
    if (!by_id_.emplace(q.id, i).second) throw InvariantError("duplicate question id '" + q.id + "'");
    if (q.answer_latex.empty() || q.answer_plain.empty()) {
      throw InvariantError("question '" + q.id + "' is missing an answer format");
    }
    if (!(q.confidence >= 0.0 && q.confidence <= 1.0)) {
      throw InvariantError("question '" + q.id + "' has confidence outside [0, 1]");
    }
    by_topic_[topic_index(q.topic)].push_back(q.id);
  }
}

const Question* QuestionBank::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &questions_[it->second];
}

const Question& QuestionBank::at(std::string_view id) const {
  if (const auto* q = find(id)) return *q;
  throw ValidationError("unknown question id '" + std::string(id) + "'");
}

std::vector<std::string> QuestionBank::ids(Topic t, Split s) const {
  std::vector<std::string> out;
  for (const auto& id : ids(t)) {
    if (at(id).split == s) out.push_back(id);
  }
  return out;
}

std::vector<std::string> QuestionBank::ids(Split s) const {
  std::vector<std::string> out;
  for (const auto& q : questions_) {
    if (q.split == s) out.push_back(q.id);
  }
  return out;
}

bool QuestionBank::is_split() const {
  return !questions_.empty() &&
         std::all_of(questions_.begin(), questions_.end(),
                     [](const Question& q) { return q.split != Split::Unassigned; });
}

bool QuestionBank::is_embedded() const {
  return std::all_of(questions_.begin(), questions_.end(),
                     [](const Question& q) { return q.embedding.has_value(); });
}

// ---------------------------------------------------------------- raw records

namespace {

std::string string_field(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (auto it = j.find(k); it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

}  // namespace

RawRecord raw_record_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  RawRecord r;
  r.id = string_field(j, {"id"});
  r.statement = string_field(j, {"statement", "problem"});
  r.solution = string_field(j, {"solution"});
  r.answer_latex = string_field(j, {"answer_latex", "answer"});
  r.answer_plain = string_field(j, {"answer_plain"});
  return r;
}

std::vector<RawRecord> load_raw_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read records file " + path.string());
  std::vector<RawRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(raw_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------- classifiers

Classification KeywordClassifier::classify(std::string_view statement) {
  const auto hits = topic_keyword_hits(statement);
  const int best = *std::max_element(hits.begin(), hits.end());
  double denom = 0.0;
  for (int h : hits) denom += std::exp(2.0 * (h - best));
  std::size_t arg = 0;
  while (hits[arg] != best) ++arg;
  return Classification{kAllTopics[arg], 1.0 / denom};
}

RemoteClassifier::RemoteClassifier(std::shared_ptr<HttpTransport> transport, std::string path)
    : transport_(std::move(transport)), path_(std::move(path)) {}

Classification RemoteClassifier::classify(std::string_view statement) {
  const auto resp = transport_->post_json(path_, json{{"statement", std::string(statement)}});
  if (resp.status < 200 || resp.status >= 300) {
    throw TransportError("classifier returned HTTP " + std::to_string(resp.status));
  }
  json j;
  try {
    j = json::parse(resp.body);
    return Classification{parse_topic_or_throw(j.at("label").get<std::string>()),
                          j.at("confidence").get<double>()};
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed classifier response: ") + e.what());
  }
}

// ---------------------------------------------------------------- ingest

IngestResult ingest(const std::vector<RawRecord>& records, TopicClassifier& classifier,
                    double min_confidence) {
  IngestResult result;
  std::vector<Question> kept;
  std::unordered_set<std::string> seen_ids;
  auto skip = [&](std::size_t i, const std::string& id, std::string reason) {
    result.skipped.push_back(SkippedRecord{i, id, std::move(reason)});
  };

  for (std::size_t i = 0; i < records.size(); ++i) {
    const RawRecord& r = records[i];
    Question q;
    q.statement = text::trim(r.statement);
    q.id = r.id.empty() ? "q" + hex64(fnv1a64(q.statement)) : r.id;
    if (q.statement.empty()) {
      skip(i, q.id, "missing statement");
      continue;
    }
    q.solution = text::trim(r.solution);
    if (q.solution.empty()) {
      skip(i, q.id, "missing solution");
      continue;
    }
    q.answer_latex = text::trim(r.answer_latex);
    q.answer_plain = text::trim(r.answer_plain);
    if (q.answer_latex.empty() && q.answer_plain.empty()) {
      if (auto boxed = last_boxed(q.solution)) q.answer_latex = text::trim(*boxed);
    }
    if (q.answer_latex.empty()) q.answer_latex = q.answer_plain;
    if (q.answer_plain.empty() && !q.answer_latex.empty()) q.answer_plain = latex_to_plain(q.answer_latex);
    if (q.answer_latex.empty() || q.answer_plain.empty()) {
      skip(i, q.id, "missing answer");
      continue;
    }
    if (normalize_tokens(q.answer_latex).empty() || normalize_tokens(q.answer_plain).empty()) {
      skip(i, q.id, "answer is empty after normalization");
      continue;
    }

    Classification c;
    try {
      c = classifier.classify(q.statement);
    } catch (const std::exception& e) {
      skip(i, q.id, std::string("classifier failure: ") + e.what());
      continue;
    }
    if (!(c.confidence >= 0.0 && c.confidence <= 1.0)) {
      skip(i, q.id, "classifier returned confidence outside [0, 1]");
      continue;
    }
    if (!(c.confidence > min_confidence)) {
      skip(i, q.id, "confidence " + std::to_string(c.confidence) + " not above threshold");
      continue;
    }
    if (!seen_ids.insert(q.id).second) {
      skip(i, q.id, "duplicate id");
      continue;
    }
    q.topic = c.topic;
    q.confidence = c.confidence;
    ++result.topic_counts[topic_index(q.topic)];
    kept.push_back(std::move(q));
  }
  result.bank = QuestionBank(std::move(kept));
  return result;
}

// ---------------------------------------------------------------- split / embed

QuestionBank split_bank(const QuestionBank& bank, double dev_fraction, std::uint64_t seed) {
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw ValidationError("dev_fraction must lie strictly between 0 and 1");
  }
  std::unordered_map<std::string, Split> assignment;
  for (Topic t : kAllTopics) {
    std::vector<std::string> ids = bank.ids(t);
    if (ids.empty()) continue;
    const std::size_t n = ids.size();
    const auto n_dev = static_cast<std::size_t>(std::floor(dev_fraction * static_cast<double>(n) + 0.5));
    if (n < 2 || n_dev < 1 || n_dev >= n) {
      throw ValidationError("cannot stratify topic " + std::string(topic_name(t)) + ": " +
                            std::to_string(n) + " questions with dev_fraction " +
                            std::to_string(dev_fraction));
    }
    Rng rng(derive_seed(seed, {"split", topic_name(t)}));
    rng.shuffle(ids);
    for (std::size_t i = 0; i < n; ++i) assignment[ids[i]] = i < n_dev ? Split::Dev : Split::Test;
  }
  std::vector<Question> out = bank.questions();
  for (auto& q : out) q.split = assignment.at(q.id);
  return QuestionBank(std::move(out));
}

QuestionBank embed_bank(const QuestionBank& bank, const EmbeddingProvider& provider) {
  std::vector<Question> out = bank.questions();
  for (auto& q : out) {
    if (!q.embedding) q.embedding = embed(q.statement, provider);
  }
  return QuestionBank(std::move(out));
}

// ---------------------------------------------------------------- persistence

nlohmann::ordered_json question_to_json(const Question& q) {
  nlohmann::ordered_json j;
  j["schema_version"] = kBankSchemaVersion;
  j["id"] = q.id;
  j["topic"] = topic_name(q.topic);
  j["statement"] = q.statement;
  j["solution"] = q.solution;
  j["answer_latex"] = q.answer_latex;
  j["answer_plain"] = q.answer_plain;
  j["confidence"] = q.confidence;
  j["split"] = split_name(q.split);
  if (q.embedding) {
    auto v = q.embedding->values();
    j["embedding"] = std::vector<double>(v.begin(), v.end());
  } else {
    j["embedding"] = nullptr;
  }
  return j;
}

Question question_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  if (!j.contains("schema_version")) throw ParseError("record has no schema_version");
  const int version = j.at("schema_version").get<int>();
  if (version != kBankSchemaVersion) {
    throw VersionError("unsupported bank schema_version " + std::to_string(version) +
                       " (expected " + std::to_string(kBankSchemaVersion) + ")");
  }
  Question q;
  q.id = j.at("id").get<std::string>();
  q.topic = parse_topic_or_throw(j.at("topic").get<std::string>());
  q.statement = j.at("statement").get<std::string>();
  q.solution = j.at("solution").get<std::string>();
  q.answer_latex = j.at("answer_latex").get<std::string>();
  q.answer_plain = j.at("answer_plain").get<std::string>();
  q.confidence = j.at("confidence").get<double>();
  const auto split = parse_split(j.at("split").get<std::string>());
  if (!split) throw ParseError("invalid split '" + j.at("split").get<std::string>() + "'");
  q.split = *split;
  if (j.contains("embedding") && !j.at("embedding").is_null()) {
    q.embedding = EmbeddingVector::from_unit(j.at("embedding").get<std::vector<double>>());
  }
  return q;
}

void save_bank(const QuestionBank& bank, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write bank file " + path.string());
  for (const auto& q : bank.questions()) out << question_to_json(q).dump() << '\n';
  if (!out) throw ValidationError("write failed for bank file " + path.string());
}

QuestionBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read bank file " + path.string());
  std::vector<Question> questions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + ": malformed record: " + e.what());
    }
    const std::string id = j.is_object() && j.contains("id") && j["id"].is_string()
                               ? j["id"].get<std::string>() : "?";
    try {
      questions.push_back(question_from_json(j));
    } catch (const VersionError& e) {
      throw VersionError(where + " (record '" + id + "'): " + e.what());
    } catch (const std::exception& e) {
      throw ParseError(where + " (record '" + id + "'): " + e.what());
    }
  }
  if (questions.empty()) throw ParseError("bank file " + path.string() + " contains no records");
  return QuestionBank(std::move(questions));
}

// ---------------------------------------------------------------- LaTeX -> plain

namespace {

class LatexRenderer {
 public:
  explicit LatexRenderer(std::string_view src) : s_(src) {}

  std::string run() {
    std::string out;
    while (pos_ < s_.size()) step(out);
    return out;
  }

 private:
  void step(std::string& out) {
    const char c = s_[pos_];
    if (c == '$') {
      ++pos_;
      out.push_back(' ');
    } else if (c == '{' || c == '}') {
      ++pos_;
    } else if (c == '\\') {
      command(out);
    } else {
      out.push_back(c);
      ++pos_;
    }
  }

  // Reads a {...} group (or a single character) and renders it.
  std::string group() {
    while (pos_ < s_.size() && s_[pos_] == ' ') ++pos_;
    if (pos_ >= s_.size()) return {};
    if (s_[pos_] != '{') {
      if (s_[pos_] == '\\') {
        std::string out;
        command(out);
        return out;
      }
      return std::string(1, s_[pos_++]);
    }
    const std::size_t start = ++pos_;
    int depth = 1;
    while (pos_ < s_.size() && depth > 0) {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
        pos_ += 2;
        continue;
      }
      if (s_[pos_] == '{') ++depth;
      if (s_[pos_] == '}') --depth;
      ++pos_;
    }
    const std::size_t end = depth == 0 ? pos_ - 1 : pos_;
    return LatexRenderer(s_.substr(start, end - start)).run();
  }

  static bool simple(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
      return std::isalnum(c) || c == '.';
    });
  }

  void command(std::string& out) {
    ++pos_;  // backslash
    if (pos_ >= s_.size()) return;
    if (!std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
      const char sym = s_[pos_++];
      switch (sym) {
        case '(': case ')': case '[': case ']': case ',': case ';': case ':': case '!':
        case ' ': case '$':
          out.push_back(' ');
          break;
        case '\\':
          out.push_back(' ');
          break;
        default:
          out.push_back(sym);  // \% \{ \} \_ ...
      }
      return;
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string_view name = s_.substr(start, pos_ - start);

    if (name == "frac" || name == "dfrac" || name == "tfrac") {
      const std::string num = text::trim(group());
      const std::string den = text::trim(group());
      out += simple(num) ? num : "(" + num + ")";
      out += "/";
      out += simple(den) ? den : "(" + den + ")";
    } else if (name == "sqrt") {
      out += "sqrt(" + text::trim(group()) + ")";
    } else if (name == "boxed" || name == "text" || name == "textbf" || name == "mathrm" ||
               name == "mathbf" || name == "mbox" || name == "operatorname") {
      out += group();
    } else if (name == "left" || name == "right" || name == "displaystyle" || name == "circ" ||
               name == "quad" || name == "qquad") {
      out.push_back(' ');
    } else if (name == "cdot" || name == "times") {
      out += "*";
    } else if (name == "div") {
      out += "/";
    } else if (name == "le" || name == "leq") {
      out += "<=";
    } else if (name == "ge" || name == "geq") {
      out += ">=";
    } else if (name == "ne" || name == "neq") {
      out += "!=";
    } else if (name == "pm") {
      out += "+/-";
    } else if (name == "infty") {
      out += "infinity";
    } else {
      out += name;  // \pi -> pi, \alpha -> alpha
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string latex_to_plain(std::string_view latex) {
  std::string rendered = LatexRenderer(latex).run();
  // "^" left over from "^\circ" and similar is dropped when it ends a token.
  std::string cleaned;
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    if (rendered[i] == '^' && (i + 1 == rendered.size() || rendered[i + 1] == ' ')) continue;
    cleaned.push_back(rendered[i]);
  }
  return text::join(text::split_whitespace(cleaned), " ");
}

std::optional<std::string> last_boxed(std::string_view s) {
  const std::size_t at = s.rfind("\\boxed");
  if (at == std::string_view::npos) return std::nullopt;
  std::size_t i = at + 6;
  while (i < s.size() && s[i] == ' ') ++i;
  if (i >= s.size() || s[i] != '{') return std::nullopt;
  const std::size_t start = i + 1;
  int depth = 0;
  for (; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return std::string(s.substr(start, i - start));
  }
  return std::nullopt;
}

}  // namespace edusim
