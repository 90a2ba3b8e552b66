#pragma once
// Keyed random streams. Every stochastic step draws from an engine seeded by
// a tuple of keys, so results do not depend on evaluation order.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rodd {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

inline std::mt19937_64 keyed_engine(std::initializer_list<std::uint64_t> keys) {
  return std::mt19937_64(mix_keys(keys));
}

// Stream domains, so two subsystems never share a stream by accident.
enum class Stream : std::uint64_t {
  geometry = 0x47454f,
  codebook = 0x434f44,
  noise = 0x4e4f49,
  interference = 0x494e54,
  bench = 0x42454e,
};

}  // namespace rodd
