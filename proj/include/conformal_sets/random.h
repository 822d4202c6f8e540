/*
 * Copyright 2026 The conformal-sets Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Stateless counter-based random numbers. Every draw is a pure function of
// (seed, index...), so results do not depend on evaluation order.

#ifndef CONFORMAL_SETS_RANDOM_H_
#define CONFORMAL_SETS_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <numbers>

namespace conformal_sets {

// SplitMix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t HashIndex(std::uint64_t seed, std::uint64_t index) {
  return Mix64(Mix64(seed) ^ Mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t HashIndex(std::uint64_t seed, std::uint64_t a,
                                  std::uint64_t b) {
  return HashIndex(HashIndex(seed, a), b);
}

// Uniform in [0, 1) with 53 random bits.
constexpr double BitsToUnit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr double IndexedUniform(std::uint64_t seed, std::uint64_t index) {
  return BitsToUnit(HashIndex(seed, index));
}

// Standard normal by Box-Muller on two indexed uniforms.
inline double IndexedNormal(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t base = HashIndex(seed, index);
  const double u1 = 1.0 - BitsToUnit(Mix64(base ^ 0x1ULL));  // (0, 1]
  const double u2 = BitsToUnit(Mix64(base ^ 0x2ULL));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace conformal_sets

#endif  // CONFORMAL_SETS_RANDOM_H_
