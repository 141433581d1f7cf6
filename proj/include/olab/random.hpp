#pragma once

#include <cstdint>
#include <random>

namespace olab {

using Engine = std::mt19937_64;

/// Independent random streams used across the library. Each Monte-Carlo draw is
/// keyed by (seed, stream, index, attempt) so results do not depend on the order
/// in which samples are processed.
enum class Stream : std::uint64_t {
  wigner = 1,
  phases = 2,
  haar = 3,
  flow = 4,
  observable = 5,
  test_values = 6,
};

inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t index = 0,
                          std::uint64_t attempt = 0) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  const auto s = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{lo(seed), hi(seed), lo(s), hi(s), lo(index), hi(index), lo(attempt), hi(attempt)};
  return Engine(seq);
}

}  // namespace olab
