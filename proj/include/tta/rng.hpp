// Copyright 2026  ttaudio authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef TTA_RNG_HPP
#define TTA_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace tta {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Keyed fan-out of a master seed into independent sub-streams. Each
// (master, key) pair maps to a fixed sub-seed, so grid cells and pipeline
// stages can be re-run in isolation.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view key) {
  return splitmix64(master ^ fnv1a64(key));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view key,
                                 std::uint64_t index) {
  return splitmix64(derive_seed(master, key) ^ splitmix64(index));
}

}  // namespace tta

#endif  // TTA_RNG_HPP
