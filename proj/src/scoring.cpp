#include "edusim/scoring.hpp"

#include "edusim/error.hpp"
#include "edusim/qbank.hpp"
#include "edusim/text.hpp"

#include <algorithm>
#include <map>

namespace edusim {

std::string_view score_mode_name(ScoreMode m) {
  return m == ScoreMode::ExactMatch ? "exact_match" : "token_f1";
}

std::optional<ScoreMode> parse_score_mode(std::string_view s) {
  if (s == "token_f1") return ScoreMode::TokenF1;
  if (s == "exact_match") return ScoreMode::ExactMatch;
  return std::nullopt;
}

std::optional<std::string> extract_answer(std::string_view raw) {
  constexpr std::string_view kMarker = "ANSWER:";
  if (const std::size_t at = raw.rfind(kMarker); at != std::string_view::npos) {
    const std::string_view rest = raw.substr(at + kMarker.size());
    for (const auto& line : text::split_lines(rest)) {
      std::string t = text::trim(line);
      if (!t.empty()) return t;
    }
    return std::nullopt;
  }
  const auto lines = text::split_lines(raw);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string t = text::trim(*it);
    if (!t.empty()) return t;
  }
  return std::nullopt;
}

namespace {

struct Replacement {
  std::string_view from;
  std::string_view to;
};

// Applied in order before lowercasing.
constexpr Replacement kTable[] = {
    {"\xE2\x88\x92", "-"},  // U+2212 minus sign
    {"\xE2\x80\x93", "-"},  // U+2013 en dash
    {"\\left", " "},        {"\\right", " "},   {"\\displaystyle", " "},
    {"\\dfrac", "\\frac"},  {"\\tfrac", "\\frac"},
    {"\\boxed", ""},        {"\\text", ""},     {"\\mathrm", ""},
    {"\\(", " "},           {"\\)", " "},       {"\\[", " "},    {"\\]", " "},
    {"\\,", " "},           {"\\;", " "},{"\\:", " "},    {"\\!", ""},
    {"$", " "},
};

constexpr std::string_view kSurroundingPunct = ".,;:!?\"'`()[]{}=$";

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view input) {
  std::string s(input);
  for (const auto& r : kTable) s = replace_all(std::move(s), r.from, r.to);
  s = text::to_lower(s);
  std::vector<std::string> out;
  for (auto& tok : text::split_whitespace(s)) {
    const std::size_t b = tok.find_first_not_of(kSurroundingPunct);
    if (b == std::string::npos) continue;
    const std::size_t e = tok.find_last_not_of(kSurroundingPunct);
    out.push_back(tok.substr(b, e - b + 1));
  }
  return out;
}

double token_f1(std::string_view prediction, std::string_view reference, ScoreMode mode) {
  if (text::trim(reference).empty()) throw ValidationError("reference answer is empty");
  const auto ref = normalize_tokens(reference);
  if (ref.empty()) throw ValidationError("reference answer normalizes to no tokens");
  const auto pred = normalize_tokens(prediction);
  if (pred.empty()) return 0.0;
  if (mode == ScoreMode::ExactMatch) return pred == ref ? 1.0 : 0.0;

  std::map<std::string, long> ref_counts;
  for (const auto& t : ref) ++ref_counts[t];
  long common = 0;
  for (const auto& t : pred) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

ExamResult score_question(const std::optional<std::string>& extracted, const Question& q,
                          ScoreMode mode) {
  ExamResult r;
  r.question_id = q.id;
  if (!extracted || text::trim(*extracted).empty()) {
    r.blank = true;
    return r;
  }
  r.extracted = extracted;
  r.f1_latex = token_f1(*extracted, q.answer_latex, mode);
  r.f1_plain = token_f1(*extracted, q.answer_plain, mode);
  r.f1 = std::max(r.f1_latex, r.f1_plain);
  return r;
}

ExamScore macro_f1(std::vector<ExamResult> results) {
  if (results.empty()) throw ValidationError("macro_f1 needs at least one result");
  ExamScore score;
  double sum = 0.0;
  for (const auto& r : results) {
    sum += r.blank ? 0.0 : r.f1;
    if (r.blank) ++score.blank_count;
  }
  score.macro_f1 = sum / static_cast<double>(results.size());
  score.per_question = std::move(results);
  return score;
}

}  // namespace edusim
