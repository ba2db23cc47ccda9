#pragma once

#include <cstdint>
#include <string>

namespace optikv {

// FNV-1a, fixed here so ring placement and rng lanes are stable across
// platforms and runs.
inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t seed = 0) {
  std::uint64_t h = 14695981039346656037ull ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace optikv
