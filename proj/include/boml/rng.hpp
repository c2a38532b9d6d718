#pragma once

#include <cstdint>
#include <random>

namespace boml {

// splitmix64 finalizer; decorrelates structured seed tuples.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t seed_mix(std::uint64_t a) { return mix64(a); }

template <typename... Rest>
std::uint64_t seed_mix(std::uint64_t a, Rest... rest) {
  return mix64(a ^ seed_mix(static_cast<std::uint64_t>(rest)...));
}

// Stream tags keep independent random streams from colliding when they
// share the same run seed and phase/iteration indices.
enum StreamTag : std::uint64_t {
  kTagInit = 0x11,
  kTagTask = 0x22,
  kTagEval = 0x33,
  kTagFisher = 0x44,
  kTagVi = 0x55,
  kTagPick = 0x66,
  kTagPrec = 0x77,
  kTagStream = 0x88,
};

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace boml
