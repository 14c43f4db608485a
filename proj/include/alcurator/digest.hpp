//
// Project al-curator - Copyright 2026 The al-curator Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef ALCURATOR_DIGEST_HPP_
#define ALCURATOR_DIGEST_HPP_

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace alcurator {

// FNV-1a, 64 bit.
constexpr std::uint64_t fnv1a(std::string_view data,
                              std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// 17 significant digits, enough to read back the same double.
inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// SplitMix64 finalizer; derives independent stream seeds from (seed, salt).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace alcurator

#endif  // ALCURATOR_DIGEST_HPP_
