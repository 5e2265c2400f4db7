#ifndef LOGITMC_RANDOM_HPP_
#define LOGITMC_RANDOM_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace logitmc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable derived seed for (master, role, index). FNV-1a over the role name so
// the mapping does not depend on std::hash.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view role,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : role) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) + index);
}

inline double uniform01(Rng& rng) {
  // 53 random bits, open at 1.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace logitmc

#endif  // LOGITMC_RANDOM_HPP_
