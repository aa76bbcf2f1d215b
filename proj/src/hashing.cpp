#include "edusim/hashing.hpp"

#include <cstdio>

namespace edusim {

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> parts) {
  std::uint64_t h = splitmix64(base);
  for (std::string_view p : parts) {
    h = fnv1a64(p, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  }
  return splitmix64(h);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::size_t Rng::below(std::size_t n) {
  // Rejection sampling keeps the draw unbiased and platform independent.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

}  // namespace edusim
