#pragma once

#include "edusim/qbank.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace edusim {

// Templated competition-style problems with computed answers. Every
// topical record carries at least three keywords of its own topic and none
// of another, so the keyword classifier accepts it above 0.95. Ambiguous
// records carry at most two keywords and are rejected at that threshold.
struct SyntheticCorpusSpec {
  std::size_t per_topic = 10;
  std::size_t ambiguous = 0;
  std::uint64_t seed = 42;
};

std::vector<RawRecord> make_synthetic_corpus(const SyntheticCorpusSpec& spec);
void save_raw_records(const std::vector<RawRecord>& records, const std::filesystem::path& path);

}  // namespace edusim
