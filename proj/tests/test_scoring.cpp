#include "edusim/error.hpp"
#include "edusim/hashing.hpp"
#include "edusim/qbank.hpp"
#include "edusim/scoring.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace edusim;

namespace {

// Random answer-like strings drawn from fragments that exercise the normalization table.
std::string random_answer(Rng& rng, std::size_t max_tokens) {
  static const std::vector<std::string> pieces = {
      "12", "-3", "\xE2\x88\x92" "3", "x", "=", "x=3", "$", "\\frac{1}{2}", "\\dfrac{1}{2}", "\\left(", "\\right)",
      "(2,", "3)", "\\boxed{7}", "\\text{cm}", "and", "AND", "pi", "\\pi", "\\,", "\\!", "7.", ",", "{5}", "5",
      "\\mathrm{m}", "\xE2\x80\x93" "1", "\\(", "\\)", "\\;", "Yes!", "\"q\""};
  std::string s;
  const std::size_t n = 1 + rng.below(max_tokens);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += rng.below(4) == 0 ? "  " : " ";
    s += pieces[rng.below(pieces.size())];
  }
  return s;
}

}  // namespace

TEST_CASE("answer extraction") {
  CHECK(extract_answer("work\nANSWER: 12") == "12");
  CHECK(extract_answer("ANSWER: 1\nmore\nANSWER:  7 ") == "7");
  CHECK(extract_answer("ANSWER:\n\n  9\n") == "9");
  CHECK(extract_answer("first\nlast line  \n\n") == "last line");
  CHECK_FALSE(extract_answer("   \n\t").has_value());
  CHECK_FALSE(extract_answer("").has_value());
  CHECK_FALSE(extract_answer("ANSWER:   ").has_value());
  CHECK(extract_answer("answer: 4") == "answer: 4");
}

TEST_CASE("normalization") {
  CHECK(normalize_tokens("$\\boxed{12}$") == std::vector<std::string>{"12"});
  CHECK(normalize_tokens("\xE2\x88\x92" "1, \xE2\x88\x92" "3") == std::vector<std::string>{"-1", "-3"});
  CHECK(normalize_tokens("\\left( 2, 3 \\right)") == std::vector<std::string>{"2", "3"});
  CHECK(normalize_tokens("\\dfrac{1}{2}") == normalize_tokens("\\frac{1}{2}"));
  CHECK(normalize_tokens("X = 3.") == std::vector<std::string>{"x", "3"});
  CHECK(normalize_tokens(" = $ ").empty());
  CHECK(kNormalizationVersion == "norm-v1");
}

TEST_CASE("token F1 examples") {
  CHECK(token_f1("12", "12") == 1.0);
  CHECK(token_f1("", "12") == 0.0);
  CHECK(token_f1("x = 3", "3") == doctest::Approx(2.0 / 3.0));
  CHECK(token_f1("3 3", "3") == doctest::Approx(2.0 / 3.0));
  CHECK(token_f1("a b", "b a") == 1.0);
  CHECK_THROWS_AS(token_f1("12", ""), ValidationError);
  CHECK_THROWS_AS(token_f1("12", "  $ "), ValidationError);
  CHECK(token_f1("b a", "a b", ScoreMode::ExactMatch) == 0.0);
  CHECK(token_f1("$12$", "12", ScoreMode::ExactMatch) == 1.0);
}

TEST_CASE("per-question score takes the better reference") {
  const Question q = testing::make_question("q", Topic::Algebra, "Solve $x^2+4x+3=0$.", Split::Test,
                                            "$x_1=-1, x_2=-3$", "-1 and -3");
  const auto r = score_question(std::string("\xE2\x88\x92" "1, \xE2\x88\x92" "3"), q);
  CHECK(r.f1_latex == 0.0);
  CHECK(r.f1_plain == doctest::Approx(0.8));
  CHECK(r.f1 == doctest::Approx(0.8));
  CHECK_FALSE(r.blank);
  const auto b = score_question(std::nullopt, q);
  CHECK(b.blank);
  CHECK(b.f1 == 0.0);
  CHECK(score_question(std::string("  "), q).blank);
}

TEST_CASE("macro F1 counts blanks as zero") {
  std::vector<ExamResult> rs(3);
  rs[0].f1 = 1.0;
  rs[1].blank = true;
  rs[2].f1 = 0.5;
  const auto s = macro_f1(rs);
  CHECK(s.macro_f1 == doctest::Approx(0.5));
  CHECK(s.blank_count == 1);
  std::vector<ExamResult> blanks(4);
  for (auto& r : blanks) r.blank = true;
  CHECK(macro_f1(blanks).macro_f1 == 0.0);
  CHECK(macro_f1(blanks).blank_count == 4);
  CHECK_THROWS_AS(macro_f1({}), ValidationError);
}

TEST_CASE("token F1 agrees with the independent oracle and stays bounded") {
  Rng rng(2024);
  for (int i = 0; i < 500; ++i) {
    const std::string p = random_answer(rng, 6);
    std::string r = random_answer(rng, 6);
    if (oracle::norm_tokens(r).empty()) r += " 1";
    const double got = token_f1(p, r);
    CHECK(got == doctest::Approx(oracle::f1(p, r)).epsilon(1e-12));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
    CHECK(token_f1(r, r) == 1.0);
    if (!oracle::norm_tokens(p).empty()) CHECK(got == doctest::Approx(token_f1(r, p)).epsilon(1e-12));
  }
}

TEST_CASE("macro F1 is monotone in per-question scores") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ExamResult> rs(1 + rng.below(20));
    for (auto& r : rs) {
      r.blank = rng.below(5) == 0;
      r.f1 = r.blank ? 0.0 : rng.unit();
    }
    const double base = macro_f1(rs).macro_f1;
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
    auto better = rs;
    const std::size_t k = rng.below(rs.size());
    better[k].blank = false;
    better[k].f1 = std::min(1.0, rs[k].f1 + 0.25);
    CHECK(macro_f1(better).macro_f1 >= base);
  }
}
