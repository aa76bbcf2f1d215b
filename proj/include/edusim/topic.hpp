#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace edusim {

enum class Topic { Algebra, NumberTheory, CountingProbability, Geometry };

inline constexpr std::array<Topic, 4> kAllTopics = {
    Topic::Algebra, Topic::NumberTheory, Topic::CountingProbability, Topic::Geometry};

// Canonical machine name: "algebra", "number_theory", "counting_probability", "geometry".
std::string_view topic_name(Topic t);
// Human label used in prompts: "algebra", "number theory", ...
std::string_view topic_label(Topic t);
std::size_t topic_index(Topic t);

// Accepts canonical names plus common spellings ("Number Theory",
// "counting-and-probability", "Counting & Probability", ...).
std::optional<Topic> parse_topic(std::string_view s);
// Throws ValidationError naming the four valid topics.
Topic parse_topic_or_throw(std::string_view s);
std::string valid_topic_list();

// Keyword hits per topic over the word tokens of `s`.
std::array<int, 4> topic_keyword_hits(std::string_view s);
// Topic with strictly the most keyword hits, nullopt when none or tied.
std::optional<Topic> keyword_topic(std::string_view s);

}  // namespace edusim
