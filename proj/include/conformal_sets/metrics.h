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

// Evaluation metrics for class-conditional prediction sets and the
// efficiency diagnostics that compare an RC3P model against CCP.

#ifndef CONFORMAL_SETS_METRICS_H_
#define CONFORMAL_SETS_METRICS_H_

#include <cstddef>
#include <optional>
#include <vector>

#include "conformal_sets/calibration.h"
#include "conformal_sets/core.h"
#include "conformal_sets/prediction.h"

namespace conformal_sets {

struct ClassCoverage {
  Label y = 0;
  std::size_t n_test = 0;
  std::size_t covered = 0;
  double coverage = 0.0;   // covered / n_test; 0 when absent.
  double mean_size = 0.0;  // Mean set size over class-y rows.
  bool present = false;
};

struct CoverageReport {
  double alpha = 0.0;
  // Fraction of present classes whose coverage is below 1 - alpha.
  double ucr = 0.0;
  // Macro average over present classes of the class mean set size.
  double apss = 0.0;
  // Sum over present classes of max(1 - alpha - coverage, 0).
  double ucg = 0.0;
  std::size_t classes_evaluated = 0;
  std::vector<ClassCoverage> per_class;
};

// Classes absent from `labels` are excluded from every average (with a
// logged warning). Throws InputError when the batch and labels disagree in
// length, ValidationError on labels or members >= num_classes.
CoverageReport Evaluate(const PredictionBatch& batch, const LabelVector& labels,
                        double alpha, std::size_t num_classes);

struct RankFrequency {
  std::vector<double> p;  // p[k - 1] = P(k).
  std::size_t pairs = 0;  // (row, member) pairs counted.
  bool empty = true;      // No pairs; p is all zero.
};

// Normalized histogram of the label ranks of every set member.
RankFrequency ComputeRankFrequency(const PredictionBatch& batch,
                                   const ProbabilityMatrix& probs);

struct SigmaEntry {
  Label y = 0;
  std::size_t numerator = 0;    // V <= q_rc3p(y) and rank <= k_hat(y).
  std::size_t denominator = 0;  // V <= q_ccp(y).
  double sigma = 0.0;
  bool defined = false;
};

// Empirical condition numbers, pooled over every row of `probs` as a
// candidate for each class. Scores use the calibration-time uniforms. Throws
// ConfigError unless the models are RC3P and CCP sharing score config,
// alpha, g and K.
std::vector<SigmaEntry> SigmaCondition(const CalibrationModel& rc3p,
                                       const CalibrationModel& ccp,
                                       const ProbabilityMatrix& probs,
                                       const LabelVector& labels);

struct Theorem2Entry {
  Label y = 0;
  double b = 0.0;          // P[f_(rbar) (+ lambda) <= q_ccp(y) | Y != y]
  double d = 0.0;          // P[rank <= k_hat(y) | Y != y]
  double p_y = 0.0;        // P[Y = y]
  double alpha_eff = 0.0;
  double eps_at_khat = 0.0;
  double rhs = 0.0;        // p_y / (1 - p_y) * (alpha_eff - eps)
  bool satisfied = false;  // b - d >= rhs
  bool defined = false;    // Some row has Y != y.
};

// Midpoint rank floor((r + 1) / 2).
inline std::size_t MidRank(std::size_t rank) { return (rank + 1) / 2; }

// Plug-in check of the sufficient condition for sigma_y <= 1. Throws
// UnsupportedError for HPS.
std::vector<Theorem2Entry> Theorem2Check(const CalibrationModel& rc3p,
                                         const CalibrationModel& ccp,
                                         const ProbabilityMatrix& probs,
                                         const LabelVector& labels);

struct MetricsReport {
  CoverageReport coverage;
  std::optional<RankFrequency> rank_freq;
  std::optional<std::vector<SigmaEntry>> sigma;
  std::optional<std::vector<Theorem2Entry>> thm2;
};

}  // namespace conformal_sets

#endif  // CONFORMAL_SETS_METRICS_H_
