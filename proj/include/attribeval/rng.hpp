#pragma once

// Portable seeded sampling. std::mt19937_64 output is fixed by the standard,
// but the std distributions and std::shuffle are not, so index draws and
// shuffles are done here to keep seeded results identical across toolchains.

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>

namespace attribeval {

/// Uniform integer in [0, bound) by rejection sampling. `bound` must be > 0.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % bound;
}

template <typename T>
void seeded_shuffle(std::span<T> items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace attribeval
