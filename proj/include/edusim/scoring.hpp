#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edusim {

struct Question;

// Version tag of the fixed normalization table below; recorded in run records.
inline constexpr std::string_view kNormalizationVersion = "norm-v1";

enum class ScoreMode { TokenF1, ExactMatch };

std::string_view score_mode_name(ScoreMode m);
std::optional<ScoreMode> parse_score_mode(std::string_view s);

struct ExamResult {
  std::string question_id;
  std::string raw_output;
  std::optional<std::string> extracted;
  double f1_latex = 0.0;
  double f1_plain = 0.0;
  double f1 = 0.0;
  bool blank = false;
  int cost = 0;

  friend bool operator==(const ExamResult&, const ExamResult&) = default;
};

struct ExamScore {
  double macro_f1 = 0.0;
  std::size_t blank_count = 0;
  std::vector<ExamResult> per_question;
};

// Final answer in a completion: text after the last "ANSWER:" marker, else
// the last non-empty line. Empty or whitespace-only output yields nullopt.
std::optional<std::string> extract_answer(std::string_view raw_output);

// Normalization: unicode minus -> '-', math delimiters and layout commands
// removed, lowercased, split on whitespace, surrounding punctuation
// (. , ; : ! ? quotes brackets braces = $) stripped, empty tokens dropped.
std::vector<std::string> normalize_tokens(std::string_view text);

// Bag-of-tokens F1 between normalized prediction and reference. Throws
// ValidationError when the reference is empty or normalizes to nothing.
double token_f1(std::string_view prediction, std::string_view reference,
                ScoreMode mode = ScoreMode::TokenF1);

// Per-question grading: max over the LaTeX and plain-text references.
// raw_output and cost are left for the caller.
ExamResult score_question(const std::optional<std::string>& extracted, const Question& q,
                          ScoreMode mode = ScoreMode::TokenF1);

// Unweighted mean of per-question f1, blanks counted as 0.
ExamScore macro_f1(std::vector<ExamResult> results);

}  // namespace edusim
