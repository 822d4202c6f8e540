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

// Nonconformity scores V(x, y). Lower means more plausible.
//
//   APS : sum of the confidences ranked strictly above y, plus u times the
//         confidence at y's rank.
//   RAPS: APS + lambda * max(0, rank - k_reg).
//   HPS : 1 - f(x)_y.
//
// The tie-breaking uniform u is one draw per example, shared by all
// candidate labels of that example, and derived from (seed, row index).

#ifndef CONFORMAL_SETS_SCORES_H_
#define CONFORMAL_SETS_SCORES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conformal_sets/core.h"

namespace conformal_sets {

enum class ScoreKind { kAps, kRaps, kHps };

std::string_view ScoreKindName(ScoreKind kind);
// Accepts "aps", "raps", "hps" (case-insensitive). Throws ConfigError.
ScoreKind ParseScoreKind(std::string_view name);

struct ScoreConfig {
  ScoreKind kind = ScoreKind::kAps;
  double lambda = 0.0;     // RAPS only.
  std::size_t k_reg = 1;   // RAPS only.
  bool randomize = true;   // APS/RAPS. When false, u = 1.
  std::uint64_t seed = 0;

  // Throws ConfigError unless lambda >= 0 and 1 <= k_reg <= num_classes
  // (RAPS only).
  void Validate(std::size_t num_classes) const;

  friend bool operator==(const ScoreConfig&, const ScoreConfig&) = default;
};

// Seed perturbation that separates test-time draws from calibration draws.
inline constexpr std::uint64_t kTestSeedDomain = 0x7e57d0a1c0ffee11ULL;

inline std::uint64_t TestSeed(std::uint64_t seed) {
  return seed ^ kTestSeedDomain;
}

// Tie-breaking uniform for example `index`. Equals 1 when randomization is
// off or the score ignores it.
double TieBreakUniform(const ScoreConfig& cfg, std::uint64_t seed,
                       std::size_t index);

double ScorePair(std::span<const double> row, std::size_t y,
                 const ScoreConfig& cfg, double u);

class ScoreMatrix {
 public:
  ScoreMatrix(std::vector<double> values, std::size_t rows,
              std::size_t num_classes)
      : values_(std::move(values)), rows_(rows), num_classes_(num_classes) {}

  std::size_t rows() const { return rows_; }
  std::size_t num_classes() const { return num_classes_; }
  double at(std::size_t i, std::size_t y) const {
    return values_[i * num_classes_ + y];
  }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * num_classes_, num_classes_};
  }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
  std::size_t rows_;
  std::size_t num_classes_;
};

// Scores of every (row, candidate label) pair with u drawn from cfg.seed.
ScoreMatrix ScoreAll(const ProbabilityMatrix& probs, const ScoreConfig& cfg);

// Same, with u drawn from an explicit seed (test-time scoring passes
// TestSeed(cfg.seed)).
ScoreMatrix ScoreAll(const ProbabilityMatrix& probs, const ScoreConfig& cfg,
                     std::uint64_t draw_seed);

// V_i = V(x_i, y_i); identical to gathering ScoreAll at the true labels.
std::vector<double> ScoreTrueLabels(const ProbabilityMatrix& probs,
                                    const LabelVector& labels,
                                    const ScoreConfig& cfg);

}  // namespace conformal_sets

#endif  // CONFORMAL_SETS_SCORES_H_
