#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace edusim {

enum class Trait { Openness, Conscientiousness, Extraversion, Agreeableness, Neuroticism };
enum class PromptVariant { Concise, Elaborated };

inline constexpr std::array<Trait, 5> kAllTraits = {Trait::Openness, Trait::Conscientiousness,
                                                    Trait::Extraversion, Trait::Agreeableness,
                                                    Trait::Neuroticism};

// "openness", "conscientiousness", ...
std::string_view trait_name(Trait t);
// "Openness", "Conscientiousness", ...
std::string_view trait_label(Trait t);
std::size_t trait_index(Trait t);
std::optional<Trait> parse_trait(std::string_view s);
Trait parse_trait_or_throw(std::string_view s);

std::string_view variant_name(PromptVariant v);
std::optional<PromptVariant> parse_variant(std::string_view s);

struct PersonalityProfile {
  Trait trait = Trait::Openness;
  PromptVariant variant = PromptVariant::Concise;
  std::string_view prompt_text;

  friend bool operator==(const PersonalityProfile& a, const PersonalityProfile& b) {
    return a.trait == b.trait && a.variant == b.variant;
  }
};

// One of the ten shipped high-trait student personas.
const PersonalityProfile& personality(Trait t, PromptVariant v = PromptVariant::Concise);

}  // namespace edusim
