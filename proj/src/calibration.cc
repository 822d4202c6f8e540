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

#include "conformal_sets/calibration.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include "conformal_sets/errors.h"
#include "spdlog/spdlog.h"

namespace conformal_sets {
namespace {

void CheckAlpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

void CheckG(double g) {
  if (!(g >= 0.0) || !std::isfinite(g)) {
    throw ConfigError("g must be a finite non-negative number, got " +
                      std::to_string(g));
  }
}

// Quantile at 1 - alpha_hat; a zero (or rounding-to-zero) budget means the
// threshold can never be attained.
double ThresholdAt(std::span<const double> scores, double alpha_hat) {
  const double level = 1.0 - alpha_hat;
  if (level >= 1.0) return kInfinity;
  return ConformalQuantile(scores, level);
}

std::vector<std::vector<double>> ScoresByClass(const LabeledScores& data) {
  std::vector<std::vector<double>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.scores.size(); ++i) {
    by_class[data.labels[i]].push_back(data.scores[i]);
  }
  return by_class;
}

void CheckLabeledScores(const LabeledScores& data) {
  if (data.num_classes < 2) {
    throw InputError("calibration needs K >= 2, got " +
                     std::to_string(data.num_classes));
  }
  if (data.scores.size() != data.labels.size() ||
      data.ranks.size() != data.labels.size()) {
    throw InputError("calibration scores, ranks and labels differ in length");
  }
  CheckLabels(data.labels, data.num_classes);
}

CalibrationModel EmptyModel(Method method, const ScoreConfig& cfg,
                            double alpha, double g, std::size_t num_classes) {
  CalibrationModel model;
  model.method = method;
  model.alpha = alpha;
  model.g = g;
  model.score = cfg;
  model.num_classes = num_classes;
  return model;
}

ClassRecord DegenerateRecord(Label y, double alpha, std::size_t num_classes) {
  spdlog::warn("class {} has no calibration examples; threshold set to +inf",
               y);
  ClassRecord record;
  record.y = y;
  record.q_hat = kInfinity;
  record.k_hat = num_classes;
  record.alpha_hat = alpha;
  record.n_y = 0;
  record.eps_at_khat = 0.0;
  record.degenerate = true;
  return record;
}

void AppendDouble(std::string& out, double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g;", value);
  out += buffer;
}

}  // namespace

std::size_t QuantileIndex(double level, std::size_t n) {
  const double target = level * static_cast<double>(n + 1);
  const double nearest = std::round(target);
  // Products such as 0.9 * 10 may land an ulp above the integer they
  // represent.
  double m = std::abs(target - nearest) <= 1e-9 * std::max(1.0, target)
                 ? nearest
                 : std::ceil(target);
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

double ConformalQuantile(std::span<const double> scores, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("quantile level must lie in (0, 1), got " +
                      std::to_string(level));
  }
  const std::size_t n = scores.size();
  const std::size_t m = QuantileIndex(level, n);
  if (n == 0 || m > n) return kInfinity;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[m - 1];
}

double EffectiveAlpha(double alpha, double g, std::size_t n_y) {
  CheckAlpha(alpha);
  CheckG(g);
  if (n_y == 0) {
    throw InputError("coverage inflation needs at least one example");
  }
  if (g == 0.0) return alpha;
  return std::max(alpha - g / std::sqrt(static_cast<double>(n_y)),
                  1.0 - kMaxLevel);
}

double EffectiveLevel(double alpha, double g, std::size_t n_y) {
  return 1.0 - EffectiveAlpha(alpha, g, n_y);
}

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kMarginal:
      return "marginal";
    case Method::kCcp:
      return "ccp";
    case Method::kRc3p:
      return "rc3p";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "marginal") return Method::kMarginal;
  if (lower == "ccp") return Method::kCcp;
  if (lower == "rc3p") return Method::kRc3p;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected marginal, ccp or rc3p)");
}

std::string CalibrationModel::Fingerprint() const {
  std::string canonical;
  canonical += MethodName(method);
  canonical += ';';
  AppendDouble(canonical, alpha);
  AppendDouble(canonical, g);
  canonical += ScoreKindName(score.kind);
  canonical += ';';
  AppendDouble(canonical, score.lambda);
  canonical += std::to_string(score.k_reg) + ';' +
               std::to_string(score.randomize) + ';' +
               std::to_string(score.seed) + ';' +
               std::to_string(num_classes) + ';';
  for (const ClassRecord& r : classes) {
    canonical += std::to_string(r.y) + ';';
    AppendDouble(canonical, r.q_hat);
    canonical += std::to_string(r.k_hat) + ';';
    AppendDouble(canonical, r.alpha_hat);
    canonical += std::to_string(r.n_y) + ';';
    AppendDouble(canonical, r.eps_at_khat);
    canonical += std::to_string(r.degenerate) + ';';
  }
  if (marginal) {
    AppendDouble(canonical, marginal->q_hat);
    canonical += std::to_string(marginal->n) + ';';
  }

  // FNV-1a, 64 bit.
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

LabeledScores LabeledScores::Compute(const ProbabilityMatrix& probs,
                                     const LabelVector& labels,
                                     const ScoreConfig& cfg) {
  CheckPaired(probs, labels);
  LabeledScores data;
  data.scores = ScoreTrueLabels(probs, labels, cfg);
  data.ranks = TrueLabelRanks(probs, labels);
  data.labels = labels;
  data.num_classes = probs.num_classes();
  return data;
}

std::vector<RankChoice> ConfigureRank(const TopKErrorTable& errors,
                                      std::span<const double> alpha_eff,
                                      RankOption option,
                                      const RankOverrides* overrides) {
  const std::size_t num_classes = errors.num_classes();
  if (alpha_eff.size() != num_classes) {
    throw InputError("expected " + std::to_string(num_classes) +
                     " effective alphas, got " +
                     std::to_string(alpha_eff.size()));
  }
  if (overrides != nullptr) {
    if (option != RankOption::kOptionI) {
      throw ConfigError("rank overrides require Option I");
    }
    if ((!overrides->k_hat.empty() && overrides->k_hat.size() != num_classes) ||
        (!overrides->alpha_hat.empty() &&
         overrides->alpha_hat.size() != num_classes)) {
      throw ConfigError("rank overrides must list one entry per class (K=" +
                        std::to_string(num_classes) + ")");
    }
  }

  std::vector<RankChoice> choices(num_classes);
  for (Label y = 0; y < num_classes; ++y) {
    const double budget = alpha_eff[y];
    if (!(budget > 0.0)) {
      throw ConfigError("class " + std::to_string(y) +
                        ": effective alpha must be positive, got " +
                        std::to_string(budget));
    }
    RankChoice& choice = choices[y];
    if (errors.degenerate(y)) {
      choice = {num_classes, budget, 0.0};
      continue;
    }

    // Option II: the smallest rank whose top-k error fits in the budget.
    // eps^K = 0 < budget, so the scan always terminates.
    std::size_t k = num_classes;
    for (std::size_t candidate = 1; candidate <= num_classes; ++candidate) {
      if (errors.error(y, candidate) < budget) {
        k = candidate;
        break;
      }
    }

    std::optional<std::size_t> k_override;
    std::optional<double> alpha_override;
    if (overrides != nullptr) {
      if (!overrides->k_hat.empty()) k_override = overrides->k_hat[y];
      if (!overrides->alpha_hat.empty()) alpha_override = overrides->alpha_hat[y];
    }
    if (k_override) {
      if (*k_override < 1 || *k_override > num_classes) {
        throw ConfigError("class " + std::to_string(y) + ": k_hat " +
                          std::to_string(*k_override) + " outside [1, " +
                          std::to_string(num_classes) + "]");
      }
      if (!(errors.error(y, *k_override) < budget)) {
        throw ConfigError("class " + std::to_string(y) + ": k_hat " +
                          std::to_string(*k_override) + " is infeasible (eps=" +
                          std::to_string(errors.error(y, *k_override)) +
                          " >= alpha=" + std::to_string(budget) + ")");
      }
      k = *k_override;
    }

    const double eps = errors.error(y, k);
    double alpha_hat = budget - eps;
    if (alpha_override) {
      if (!(*alpha_override >= 0.0 && *alpha_override <= budget - eps)) {
        throw ConfigError("class " + std::to_string(y) + ": alpha_hat " +
                          std::to_string(*alpha_override) +
                          " outside [0, " + std::to_string(budget - eps) + "]");
      }
      alpha_hat = *alpha_override;
    }
    choice = {k, alpha_hat, eps};
  }
  return choices;
}

CalibrationModel CalibrateMarginal(const LabeledScores& data,
                                   const ScoreConfig& cfg, double alpha,
                                   double g) {
  CheckLabeledScores(data);
  CheckAlpha(alpha);
  CheckG(g);
  cfg.Validate(data.num_classes);
  CalibrationModel model =
      EmptyModel(Method::kMarginal, cfg, alpha, g, data.num_classes);
  const std::size_t n = data.scores.size();
  MarginalRecord record;
  record.n = n;
  if (n == 0) {
    spdlog::warn("empty calibration set; marginal threshold set to +inf");
    record.q_hat = kInfinity;
  } else {
    record.q_hat = ThresholdAt(data.scores, EffectiveAlpha(alpha, g, n));
  }
  model.marginal = record;
  return model;
}

CalibrationModel CalibrateCcp(const LabeledScores& data,
                              const ScoreConfig& cfg, double alpha, double g) {
  CheckLabeledScores(data);
  CheckAlpha(alpha);
  CheckG(g);
  cfg.Validate(data.num_classes);
  CalibrationModel model =
      EmptyModel(Method::kCcp, cfg, alpha, g, data.num_classes);
  const auto by_class = ScoresByClass(data);
  for (Label y = 0; y < data.num_classes; ++y) {
    const auto& scores = by_class[y];
    if (scores.empty()) {
      model.classes.push_back(DegenerateRecord(y, alpha, data.num_classes));
      continue;
    }
    ClassRecord record;
    record.y = y;
    record.n_y = scores.size();
    record.alpha_hat = EffectiveAlpha(alpha, g, scores.size());
    record.k_hat = data.num_classes;
    record.eps_at_khat = 0.0;
    record.q_hat = ThresholdAt(scores, record.alpha_hat);
    model.classes.push_back(record);
  }
  return model;
}

CalibrationModel CalibrateRc3p(const LabeledScores& data,
                               const ScoreConfig& cfg, double alpha, double g,
                               RankOption option,
                               const RankOverrides* overrides) {
  CheckLabeledScores(data);
  CheckAlpha(alpha);
  CheckG(g);
  cfg.Validate(data.num_classes);
  CalibrationModel model =
      EmptyModel(Method::kRc3p, cfg, alpha, g, data.num_classes);

  const TopKErrorTable errors =
      EstimateTopKErrors(data.ranks, data.labels, data.num_classes);
  std::vector<double> alpha_eff(data.num_classes, alpha);
  for (Label y = 0; y < data.num_classes; ++y) {
    if (!errors.degenerate(y)) {
      alpha_eff[y] = EffectiveAlpha(alpha, g, errors.count(y));
    }
  }
  const auto choices = ConfigureRank(errors, alpha_eff, option, overrides);
  const auto by_class = ScoresByClass(data);

  for (Label y = 0; y < data.num_classes; ++y) {
    if (errors.degenerate(y)) {
      model.classes.push_back(DegenerateRecord(y, alpha, data.num_classes));
      continue;
    }
    ClassRecord record;
    record.y = y;
    record.n_y = errors.count(y);
    record.k_hat = choices[y].k_hat;
    record.alpha_hat = choices[y].alpha_hat;
    record.eps_at_khat = choices[y].eps_at_khat;
    record.q_hat = ThresholdAt(by_class[y], record.alpha_hat);
    model.classes.push_back(record);
  }
  CheckRc3pFeasibility(model);
  return model;
}

CalibrationModel CalibrateMarginal(const ProbabilityMatrix& probs,
                                   const LabelVector& labels,
                                   const ScoreConfig& cfg, double alpha,
                                   double g) {
  return CalibrateMarginal(LabeledScores::Compute(probs, labels, cfg), cfg,
                           alpha, g);
}

CalibrationModel CalibrateCcp(const ProbabilityMatrix& probs,
                              const LabelVector& labels,
                              const ScoreConfig& cfg, double alpha, double g) {
  return CalibrateCcp(LabeledScores::Compute(probs, labels, cfg), cfg, alpha,
                      g);
}

CalibrationModel CalibrateRc3p(const ProbabilityMatrix& probs,
                               const LabelVector& labels,
                               const ScoreConfig& cfg, double alpha, double g,
                               RankOption option,
                               const RankOverrides* overrides) {
  return CalibrateRc3p(LabeledScores::Compute(probs, labels, cfg), cfg, alpha,
                       g, option, overrides);
}

CalibrationModel Calibrate(Method method, const ProbabilityMatrix& probs,
                           const LabelVector& labels, const ScoreConfig& cfg,
                           double alpha, double g, RankOption option,
                           const RankOverrides* overrides) {
  switch (method) {
    case Method::kMarginal:
      return CalibrateMarginal(probs, labels, cfg, alpha, g);
    case Method::kCcp:
      return CalibrateCcp(probs, labels, cfg, alpha, g);
    case Method::kRc3p:
      return CalibrateRc3p(probs, labels, cfg, alpha, g, option, overrides);
  }
  throw ConfigError("unknown calibration method");
}

void CheckRc3pFeasibility(const CalibrationModel& model) {
  if (model.method != Method::kRc3p) return;
  for (const ClassRecord& r : model.classes) {
    const std::string where = "class " + std::to_string(r.y) + ": ";
    if (r.degenerate) {
      if (r.q_hat != kInfinity || r.k_hat != model.num_classes) {
        throw ConfigError(where + "degenerate class must carry (+inf, K)");
      }
      continue;
    }
    const double budget = EffectiveAlpha(model.alpha, model.g, r.n_y);
    if (!(r.eps_at_khat < budget)) {
      throw ConfigError(where + "top-k error " + std::to_string(r.eps_at_khat) +
                        " is not below alpha " + std::to_string(budget));
    }
    if (!(r.alpha_hat >= 0.0 && r.alpha_hat <= budget - r.eps_at_khat)) {
      throw ConfigError(where + "alpha_hat " + std::to_string(r.alpha_hat) +
                        " outside [0, alpha - eps]");
    }
    if (r.k_hat < 1 || r.k_hat > model.num_classes) {
      throw ConfigError(where + "k_hat outside [1, K]");
    }
  }
}

}  // namespace conformal_sets
