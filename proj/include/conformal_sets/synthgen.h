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

// Synthetic classifier outputs for Monte-Carlo coverage checks, and the
// long-tail class-count profiles used to build imbalanced training sets.
//
// A synthetic row for true class y is
//
//   z_j ~ N(0, 1)                                  for every class j
//   z_y += temperature * sharpness[y] * exp(spread * N(0, 1))
//   row = (1 - noise) * softmax(z) + noise / K
//
// so `temperature` sets how often the true class ranks first, `spread`
// varies confidence between examples and `noise` flattens rows towards
// uniform. All draws are indexed by (seed, stream, row, column).

#ifndef CONFORMAL_SETS_SYNTHGEN_H_
#define CONFORMAL_SETS_SYNTHGEN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "conformal_sets/calibration.h"
#include "conformal_sets/core.h"
#include "conformal_sets/scores.h"

namespace conformal_sets {

struct SyntheticWorld {
  std::size_t num_classes = 0;
  std::vector<double> class_priors;     // Simplex; used by SampleByPriors.
  double temperature = 1.0;             // > 0
  double noise = 0.0;                   // [0, 1]
  double spread = 0.0;                  // >= 0
  std::vector<double> class_sharpness;  // Empty means all 1.
  std::uint64_t seed = 0;

  // Balanced priors, unit sharpness.
  static SyntheticWorld Balanced(std::size_t num_classes, double temperature,
                                 double noise, std::uint64_t seed);

  // Throws ConfigError on invalid parameters.
  void Validate() const;
};

enum class DecayKind { kExp, kPoly, kMaj };

std::string_view DecayKindName(DecayKind kind);
DecayKind ParseDecayKind(std::string_view name);

struct DecaySpec {
  DecayKind kind = DecayKind::kExp;
  double rho = 1.0;          // (0, 1]
  std::size_t n_train = 0;   // Total budget n_tr.
  std::size_t num_classes = 0;
};

// Per-class training counts, c = 1..K in the profile formulas:
//   EXP : n_tr / K * rho^(c / K)
//   POLY: n_tr / K / sqrt(c / (10 rho) + 1)
//   MAJ : n_tr / K for c = 1, n_tr / K * rho otherwise
// floored and clamped to at least 1.
std::vector<std::size_t> DecayCounts(const DecaySpec& spec);

// Per-class sharpness log(1 + n_c) / log(1 + max n_c): classes with less
// training data get a less confident classifier.
std::vector<double> SharpnessFromCounts(std::span<const std::size_t> counts);

struct SyntheticSample {
  ProbabilityMatrix probs;
  LabelVector labels;
};

// counts[y] rows of class y, laid out class by class. `stream` separates
// independent draws from the same world (calibration vs test).
SyntheticSample SampleWorld(const SyntheticWorld& world,
                            std::span<const std::size_t> counts,
                            std::uint64_t stream = 0);

// n rows with labels drawn i.i.d. from world.class_priors.
SyntheticSample SampleByPriors(const SyntheticWorld& world, std::size_t n,
                               std::uint64_t stream = 0);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // Sample standard deviation (n - 1).
  double se = 0.0;      // stddev / sqrt(replications).
};

MeanStd Summarize(std::span<const double> values);

struct CoverageSummary {
  std::size_t replications = 0;
  std::vector<MeanStd> class_coverage;
  std::vector<MeanStd> class_size;
  MeanStd apss;
  MeanStd ucr;
  std::vector<double> apss_per_replication;
};

struct OracleSettings {
  Method method = Method::kCcp;
  ScoreConfig score;
  double alpha = 0.1;
  double g = 0.0;
  RankOption option = RankOption::kOptionII;
  std::size_t replications = 1;
};

// Draws a fresh calibration and test set per replication, calibrates,
// predicts and evaluates. Replication r uses world seed
// HashIndex(world.seed, r) and score seed HashIndex(score.seed, r), so the
// summary is independent of the thread schedule.
CoverageSummary OracleCoverage(const SyntheticWorld& world,
                               std::span<const std::size_t> counts_cal,
                               std::span<const std::size_t> counts_test,
                               const OracleSettings& settings);

}  // namespace conformal_sets

#endif  // CONFORMAL_SETS_SYNTHGEN_H_
