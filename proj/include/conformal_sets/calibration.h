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

// Split-conformal calibrators.
//
//   Marginal: one threshold, the conformal quantile of all calibration
//             scores.
//   CCP     : one threshold per class, computed on that class's scores.
//   RC3P    : per class y, a calibrated label rank k_hat(y) with top-k error
//             eps_y^{k_hat} < alpha_eff, a reduced nominal level alpha_hat
//             <= alpha_eff - eps_y^{k_hat}, and the class threshold taken at
//             level 1 - alpha_hat. A label enters the set only if it passes
//             both the score threshold and the rank filter.
//
// alpha_eff is the per-class miscoverage after the optional g / sqrt(n_y)
// coverage inflation.

#ifndef CONFORMAL_SETS_CALIBRATION_H_
#define CONFORMAL_SETS_CALIBRATION_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conformal_sets/core.h"
#include "conformal_sets/scores.h"

namespace conformal_sets {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Upper clamp of the inflated coverage level.
inline constexpr double kMaxLevel = 1.0 - 1e-12;

// m-th smallest score with m = ceil(level * (n + 1)); +inf when m > n.
// Throws ConfigError unless 0 < level < 1.
double ConformalQuantile(std::span<const double> scores, double level);

// 1-based order-statistic index used by ConformalQuantile.
std::size_t QuantileIndex(double level, std::size_t n);

// Miscoverage after inflation: max(alpha - g / sqrt(n_y), 1 - kMaxLevel).
double EffectiveAlpha(double alpha, double g, std::size_t n_y);

// 1 - EffectiveAlpha(alpha, g, n_y), i.e. min(1 - alpha + g / sqrt(n_y),
// kMaxLevel).
double EffectiveLevel(double alpha, double g, std::size_t n_y);

enum class Method { kMarginal, kCcp, kRc3p };

std::string_view MethodName(Method method);
Method ParseMethod(std::string_view name);

// Option I: caller-chosen feasible (k_hat, alpha_hat). Option II: smallest
// feasible rank and the full remaining budget.
enum class RankOption { kOptionI = 1, kOptionII = 2 };

struct ClassRecord {
  Label y = 0;
  double q_hat = kInfinity;
  std::size_t k_hat = 0;
  double alpha_hat = 0.0;
  std::size_t n_y = 0;
  double eps_at_khat = 0.0;
  bool degenerate = false;

  friend bool operator==(const ClassRecord&, const ClassRecord&) = default;
};

struct MarginalRecord {
  double q_hat = kInfinity;
  std::size_t n = 0;

  friend bool operator==(const MarginalRecord&,
                         const MarginalRecord&) = default;
};

struct CalibrationModel {
  Method method = Method::kCcp;
  double alpha = 0.1;
  double g = 0.0;
  ScoreConfig score;
  std::size_t num_classes = 0;
  std::vector<ClassRecord> classes;  // Empty for Method::kMarginal.
  std::optional<MarginalRecord> marginal;

  // Hex digest identifying this model's content.
  std::string Fingerprint() const;

  friend bool operator==(const CalibrationModel&,
                         const CalibrationModel&) = default;
};

// True-label scores and ranks of a calibration set, the inputs every
// calibrator actually consumes. May be empty.
struct LabeledScores {
  std::vector<double> scores;
  std::vector<std::size_t> ranks;
  LabelVector labels;
  std::size_t num_classes = 0;

  static LabeledScores Compute(const ProbabilityMatrix& probs,
                               const LabelVector& labels,
                               const ScoreConfig& cfg);
};

struct RankChoice {
  std::size_t k_hat = 0;
  double alpha_hat = 0.0;
  double eps_at_khat = 0.0;
};

// Per-class Option I values. Unset entries fall back to Option II.
struct RankOverrides {
  std::vector<std::optional<std::size_t>> k_hat;
  std::vector<std::optional<double>> alpha_hat;
};

// Chooses (k_hat, alpha_hat) per class. Throws ConfigError naming the class
// when an override violates eps^k < alpha_eff or
// 0 <= alpha_hat <= alpha_eff - eps^k, or when some alpha_eff <= 0.
// Degenerate classes get k_hat = K, alpha_hat = alpha_eff.
std::vector<RankChoice> ConfigureRank(const TopKErrorTable& errors,
                                      std::span<const double> alpha_eff,
                                      RankOption option,
                                      const RankOverrides* overrides = nullptr);

CalibrationModel CalibrateMarginal(const LabeledScores& data,
                                   const ScoreConfig& cfg, double alpha,
                                   double g);
CalibrationModel CalibrateCcp(const LabeledScores& data,
                              const ScoreConfig& cfg, double alpha, double g);
CalibrationModel CalibrateRc3p(const LabeledScores& data,
                               const ScoreConfig& cfg, double alpha, double g,
                               RankOption option = RankOption::kOptionII,
                               const RankOverrides* overrides = nullptr);

CalibrationModel CalibrateMarginal(const ProbabilityMatrix& probs,
                                   const LabelVector& labels,
                                   const ScoreConfig& cfg, double alpha,
                                   double g);
CalibrationModel CalibrateCcp(const ProbabilityMatrix& probs,
                              const LabelVector& labels,
                              const ScoreConfig& cfg, double alpha, double g);
CalibrationModel CalibrateRc3p(const ProbabilityMatrix& probs,
                               const LabelVector& labels,
                               const ScoreConfig& cfg, double alpha, double g,
                               RankOption option = RankOption::kOptionII,
                               const RankOverrides* overrides = nullptr);

// Dispatches on `method`; `option`/`overrides` only matter for RC3P.
CalibrationModel Calibrate(Method method, const ProbabilityMatrix& probs,
                           const LabelVector& labels, const ScoreConfig& cfg,
                           double alpha, double g,
                           RankOption option = RankOption::kOptionII,
                           const RankOverrides* overrides = nullptr);

// Throws ConfigError if an RC3P record breaks eps < alpha_eff or
// 0 <= alpha_hat <= alpha_eff - eps, or a degenerate record is not
// (+inf, K).
void CheckRc3pFeasibility(const CalibrationModel& model);

}  // namespace conformal_sets

#endif  // CONFORMAL_SETS_CALIBRATION_H_
