#ifndef POSTADJ_RNG_HPP
#define POSTADJ_RNG_HPP

#include <cstdint>
#include <random>

namespace postadj {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream derivation: stream k of master seed s is independent
// of the order in which streams are requested.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t s = splitmix64(master_seed ^ splitmix64(index + 0x5851f42d4c957f2dULL));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(master_seed ^ splitmix64(index + 0x2545f4914f6cdd1dULL));
}

}  // namespace postadj

#endif  // POSTADJ_RNG_HPP
