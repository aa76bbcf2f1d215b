#include "edusim/personality.hpp"

#include "edusim/error.hpp"
#include "edusim/text.hpp"

namespace edusim {

namespace {

constexpr std::array<std::string_view, 5> kNames = {"openness", "conscientiousness", "extraversion",
                                                    "agreeableness", "neuroticism"};
constexpr std::array<std::string_view, 5> kLabels = {"Openness", "Conscientiousness", "Extraversion",
                                                     "Agreeableness", "Neuroticism"};

// Persona texts, verbatim. Index: [variant][trait].
constexpr std::array<std::array<std::string_view, 5>, 2> kPersonaText = {{
    {
        "You are a student with high openness. You are curious about new knowledge, enjoy "
        "exploring different problem-solving methods, and prefer understanding concepts deeply "
        "rather than memorizing procedures.",
        "You are a highly conscientious student. You plan study tasks carefully, take homework "
        "seriously, and persist in mastering difficult problems even when tired. You regularly "
        "review notes to ensure knowledge consolidation.",
        "You are a highly extraverted student. You enjoy communicating with teachers, prefer "
        "learning through discussion rather than studying alone, and feel comfortable actively "
        "asking questions.",
        "You are a highly agreeable student. You are cooperative and willing to accept teachers' "
        "suggestions. You prefer harmonious learning environments and are receptive to feedback.",
        "You are a student with high neuroticism. You feel anxious about academic performance, "
        "doubt your abilities, and small setbacks affect your confidence. You tend to seek "
        "reassurance from teachers when uncertain.",
    },
    {
        "You are a student with high openness to experience. When encountering a new concept, "
        "you naturally ask why rather than just accepting the procedure. You enjoy exploring "
        "connections between ideas, even at the cost of going off-topic. You tolerate ambiguity "
        "well and find uncertainty stimulating rather than uncomfortable.",
        "You are a student with high conscientiousness. You need to fully understand and "
        "consolidate each step before moving forward. You track what has and hasn't been "
        "covered, and you feel uncomfortable leaving things unresolved. You rarely rush. "
        "Accuracy matters more to you than speed.",
        "You are a student with high extraversion. You think by talking. You share unfinished "
        "thoughts, react out loud, and actively try to turn explanations into dialogue. You're "
        "energized by back-and-forth exchange. You're not afraid of being wrong in front of "
        "others. Silence feels unproductive to you.",
        "You are a student with high agreeableness. You prioritize harmony in the interaction. "
        "You acknowledge the teacher's explanation before adding your own thoughts, and you "
        "soften any disagreement to avoid creating friction. You rarely push back directly. When "
        "confused, you assume the fault is yours first.",
        "You are a student with high neuroticism. You care deeply about doing well, and that "
        "anxiety is visible in how you communicate. You second-guess yourself mid-answer, seek "
        "frequent reassurance, and let small mistakes affect your confidence disproportionately. "
        "You feel genuine relief when reassured, but it doesn't last long before the next doubt "
        "appears.",
    },
}};

const std::array<std::array<PersonalityProfile, 5>, 2>& profiles() {
  static const auto table = [] {
    std::array<std::array<PersonalityProfile, 5>, 2> t{};
    for (std::size_t v = 0; v < 2; ++v) {
      for (std::size_t i = 0; i < 5; ++i) {
        t[v][i] = PersonalityProfile{kAllTraits[i], static_cast<PromptVariant>(v), kPersonaText[v][i]};
      }
    }
    return t;
  }();
  return table;
}

}  // namespace

std::string_view trait_name(Trait t) { return kNames[trait_index(t)]; }
std::string_view trait_label(Trait t) { return kLabels[trait_index(t)]; }
std::size_t trait_index(Trait t) { return static_cast<std::size_t>(t); }

std::optional<Trait> parse_trait(std::string_view s) {
  const std::string key = text::to_lower(text::trim(s));
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (key == kNames[i]) return kAllTraits[i];
  }
  return std::nullopt;
}

Trait parse_trait_or_throw(std::string_view s) {
  if (auto t = parse_trait(s)) return *t;
  std::string valid;
  for (auto n : kNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
  throw ValidationError("invalid personality '" + std::string(s) + "'; valid personalities: " + valid);
}

std::string_view variant_name(PromptVariant v) {
  return v == PromptVariant::Elaborated ? "elaborated" : "concise";
}

std::optional<PromptVariant> parse_variant(std::string_view s) {
  if (s == "concise") return PromptVariant::Concise;
  if (s == "elaborated") return PromptVariant::Elaborated;
  return std::nullopt;
}

const PersonalityProfile& personality(Trait t, PromptVariant v) {
  return profiles()[static_cast<std::size_t>(v)][trait_index(t)];
}

}  // namespace edusim
