#include "edusim/topic.hpp"

#include "edusim/error.hpp"
#include "edusim/text.hpp"

#include <algorithm>
#include <cctype>
#include <string>
#include <unordered_map>

namespace edusim {

namespace {

struct TopicNames {
  std::string_view name;
  std::string_view label;
};

constexpr std::array<TopicNames, 4> kNames = {{
    {"algebra", "algebra"},
    {"number_theory", "number theory"},
    {"counting_probability", "counting and probability"},
    {"geometry", "geometry"},
}};

// Fixed keyword table shared by the keyword classifier and the action-reply fallback.
const std::unordered_map<std::string, Topic>& keyword_table() {
  static const std::unordered_map<std::string, Topic> table = [] {
    std::unordered_map<std::string, Topic> t;
    auto add = [&t](Topic topic, std::initializer_list<const char*> words) {
      for (const char* w : words) t.emplace(w, topic);
    };
    add(Topic::Algebra,
        {"algebra", "algebraic", "equation", "equations", "polynomial", "polynomials", "quadratic",
         "quadratics", "linear", "factor", "factoring", "factorization", "factorize", "expression",
         "expressions", "inequality", "inequalities", "variable", "variables", "slope", "exponent",
         "exponents", "logarithm", "sequence", "coefficient", "coefficients"});
    add(Topic::NumberTheory,
        {"prime", "primes", "divisor", "divisors", "divisible", "divisibility", "modulo", "mod",
         "remainder", "remainders", "gcd", "lcm", "integer", "integers", "digit", "digits",
         "congruent", "congruence", "multiple", "multiples", "theory", "base"});
    add(Topic::CountingProbability,
        {"counting", "count", "probability", "probabilities", "combinatorics", "permutation",
         "permutations", "combination", "combinations", "arrangement", "arrangements", "arrange",
         "ways", "choose", "dice", "die", "coin", "coins", "random", "randomly", "expected",
         "outcomes", "committee"});
    add(Topic::Geometry,
        {"geometry", "triangle", "triangles", "circle", "circles", "angle", "angles", "area",
         "perimeter", "polygon", "radius", "diameter", "rectangle", "volume", "hypotenuse",
         "parallelogram", "chord", "tangent", "sphere", "cylinder", "degrees", "trapezoid"});
    return t;
  }();
  return table;
}

std::string squash(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace

std::string_view topic_name(Topic t) { return kNames[topic_index(t)].name; }
std::string_view topic_label(Topic t) { return kNames[topic_index(t)].label; }
std::size_t topic_index(Topic t) { return static_cast<std::size_t>(t); }

std::optional<Topic> parse_topic(std::string_view s) {
  const std::string key = squash(s);
  if (key == "algebra") return Topic::Algebra;
  if (key == "numbertheory") return Topic::NumberTheory;
  if (key == "countingprobability" || key == "countingandprobability" ||
      key == "countingprob" || key == "probability" || key == "counting")
    return Topic::CountingProbability;
  if (key == "geometry") return Topic::Geometry;
  return std::nullopt;
}

std::string valid_topic_list() {
  std::string out;
  for (Topic t : kAllTopics) {
    if (!out.empty()) out += ", ";
    out += topic_name(t);
  }
  return out;
}

Topic parse_topic_or_throw(std::string_view s) {
  if (auto t = parse_topic(s)) return *t;
  throw ValidationError("invalid topic '" + std::string(s) + "'; valid topics: " +
                        valid_topic_list());
}

std::array<int, 4> topic_keyword_hits(std::string_view s) {
  std::array<int, 4> hits{};
  const auto& table = keyword_table();
  for (const auto& tok : text::word_tokens(s)) {
    if (auto it = table.find(tok); it != table.end()) ++hits[topic_index(it->second)];
  }
  return hits;
}

std::optional<Topic> keyword_topic(std::string_view s) {
  const auto hits = topic_keyword_hits(s);
  const auto best = std::max_element(hits.begin(), hits.end());
  if (*best == 0 || std::count(hits.begin(), hits.end(), *best) > 1) return std::nullopt;
  return kAllTopics[static_cast<std::size_t>(best - hits.begin())];
}

}  // namespace edusim
