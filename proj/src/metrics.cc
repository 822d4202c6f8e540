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

#include "conformal_sets/metrics.h"

#include <algorithm>
#include <functional>
#include <string>

#include "conformal_sets/errors.h"
#include "conformal_sets/scores.h"
#include "spdlog/spdlog.h"

namespace conformal_sets {
namespace {

void CheckMembers(const PredictionBatch& batch, std::size_t num_classes) {
  for (const PredictionSet& set : batch.sets) {
    for (Label y : set.members) {
      if (y >= num_classes) {
        throw ValidationError("prediction set " + std::to_string(set.index) +
                              " contains class " + std::to_string(y) +
                              " >= K=" + std::to_string(num_classes));
      }
    }
  }
}

void CheckModelPair(const CalibrationModel& rc3p, const CalibrationModel& ccp,
                    const ProbabilityMatrix& probs, const LabelVector& labels) {
  if (rc3p.method != Method::kRc3p || ccp.method != Method::kCcp) {
    throw ConfigError("diagnostics need an RC3P model and a CCP model");
  }
  if (!(rc3p.score == ccp.score) || rc3p.alpha != ccp.alpha ||
      rc3p.g != ccp.g || rc3p.num_classes != ccp.num_classes) {
    throw ConfigError(
        "RC3P and CCP models differ in score config, alpha, g or K");
  }
  if (rc3p.num_classes != probs.num_classes() ||
      rc3p.classes.size() != rc3p.num_classes ||
      ccp.classes.size() != ccp.num_classes) {
    throw InputError("models have K=" + std::to_string(rc3p.num_classes) +
                     " but the probability matrix has K=" +
                     std::to_string(probs.num_classes()));
  }
  CheckPaired(probs, labels);
}

}  // namespace

CoverageReport Evaluate(const PredictionBatch& batch, const LabelVector& labels,
                        double alpha, std::size_t num_classes) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  if (batch.sets.size() != labels.size()) {
    throw InputError("batch has " + std::to_string(batch.sets.size()) +
                     " sets but there are " + std::to_string(labels.size()) +
                     " labels");
  }
  CheckLabels(labels, num_classes);
  CheckMembers(batch, num_classes);

  CoverageReport report;
  report.alpha = alpha;
  report.per_class.resize(num_classes);
  std::vector<std::size_t> size_sums(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Label y = labels[i];
    const auto& members = batch.sets[i].members;
    ClassCoverage& entry = report.per_class[y];
    ++entry.n_test;
    if (std::binary_search(members.begin(), members.end(), y)) ++entry.covered;
    size_sums[y] += members.size();
  }

  const double target = 1.0 - alpha;
  std::size_t under = 0;
  double size_total = 0.0;
  for (Label y = 0; y < num_classes; ++y) {
    ClassCoverage& entry = report.per_class[y];
    entry.y = y;
    if (entry.n_test == 0) {
      spdlog::warn("class {} is absent from the evaluation labels; excluded",
                   y);
      continue;
    }
    entry.present = true;
    const double n = static_cast<double>(entry.n_test);
    const double covered = static_cast<double>(entry.covered);
    entry.coverage = covered / n;
    entry.mean_size = static_cast<double>(size_sums[y]) / n;
    // Compare counts rather than ratios so gaps like 0.9 - 17/20 come out
    // as the nearest double to 1/20.
    const double required = target * n;
    if (covered < required) {
      ++under;
      report.ucg += (required - covered) / n;
    }
    size_total += entry.mean_size;
    ++report.classes_evaluated;
  }
  if (report.classes_evaluated > 0) {
    const double evaluated = static_cast<double>(report.classes_evaluated);
    report.ucr = static_cast<double>(under) / evaluated;
    report.apss = size_total / evaluated;
  }
  return report;
}

RankFrequency ComputeRankFrequency(const PredictionBatch& batch,
                                   const ProbabilityMatrix& probs) {
  if (batch.sets.size() != probs.rows()) {
    throw InputError("batch has " + std::to_string(batch.sets.size()) +
                     " sets but the probability matrix has " +
                     std::to_string(probs.rows()) + " rows");
  }
  const std::size_t num_classes = probs.num_classes();
  CheckMembers(batch, num_classes);
  std::vector<std::size_t> counts(num_classes, 0);
  RankFrequency freq;
  for (std::size_t i = 0; i < batch.sets.size(); ++i) {
    for (Label y : batch.sets[i].members) {
      ++counts[LabelRank(probs.row(i), y) - 1];
      ++freq.pairs;
    }
  }
  freq.p.assign(num_classes, 0.0);
  freq.empty = freq.pairs == 0;
  if (!freq.empty) {
    for (std::size_t k = 0; k < num_classes; ++k) {
      freq.p[k] =
          static_cast<double>(counts[k]) / static_cast<double>(freq.pairs);
    }
  }
  return freq;
}

std::vector<SigmaEntry> SigmaCondition(const CalibrationModel& rc3p,
                                       const CalibrationModel& ccp,
                                       const ProbabilityMatrix& probs,
                                       const LabelVector& labels) {
  CheckModelPair(rc3p, ccp, probs, labels);
  const std::size_t num_classes = probs.num_classes();
  const ScoreMatrix scores = ScoreAll(probs, rc3p.score);

  std::vector<SigmaEntry> entries(num_classes);
  for (Label y = 0; y < num_classes; ++y) entries[y].y = y;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (Label y = 0; y < num_classes; ++y) {
      const double v = scores.at(i, y);
      if (v <= ccp.classes[y].q_hat) ++entries[y].denominator;
      if (v <= rc3p.classes[y].q_hat &&
          LabelRank(probs.row(i), y) <= rc3p.classes[y].k_hat) {
        ++entries[y].numerator;
      }
    }
  }
  for (SigmaEntry& entry : entries) {
    entry.defined = entry.denominator > 0;
    if (entry.defined) {
      entry.sigma = static_cast<double>(entry.numerator) /
                    static_cast<double>(entry.denominator);
    }
  }
  return entries;
}

std::vector<Theorem2Entry> Theorem2Check(const CalibrationModel& rc3p,
                                         const CalibrationModel& ccp,
                                         const ProbabilityMatrix& probs,
                                         const LabelVector& labels) {
  CheckModelPair(rc3p, ccp, probs, labels);
  if (rc3p.score.kind == ScoreKind::kHps) {
    throw UnsupportedError(
        "the efficiency condition is only defined for APS and RAPS scores");
  }
  const std::size_t num_classes = probs.num_classes();
  const double shift =
      rc3p.score.kind == ScoreKind::kRaps ? rc3p.score.lambda : 0.0;

  std::vector<std::size_t> class_counts(num_classes, 0);
  std::vector<std::size_t> b_counts(num_classes, 0);
  std::vector<std::size_t> d_counts(num_classes, 0);
  std::vector<double> sorted(num_classes);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    ++class_counts[labels[i]];
    std::copy(row.begin(), row.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    for (Label y = 0; y < num_classes; ++y) {
      if (y == labels[i]) continue;
      const std::size_t rank = LabelRank(row, y);
      if (sorted[MidRank(rank) - 1] + shift <= ccp.classes[y].q_hat) {
        ++b_counts[y];
      }
      if (rank <= rc3p.classes[y].k_hat) ++d_counts[y];
    }
  }

  const double n = static_cast<double>(probs.rows());
  std::vector<Theorem2Entry> entries(num_classes);
  for (Label y = 0; y < num_classes; ++y) {
    Theorem2Entry& entry = entries[y];
    const ClassRecord& record = rc3p.classes[y];
    entry.y = y;
    entry.eps_at_khat = record.eps_at_khat;
    entry.alpha_eff = record.n_y > 0
                          ? EffectiveAlpha(rc3p.alpha, rc3p.g, record.n_y)
                          : rc3p.alpha;
    const std::size_t others = probs.rows() - class_counts[y];
    entry.p_y = static_cast<double>(class_counts[y]) / n;
    entry.defined = others > 0;
    if (!entry.defined) continue;
    entry.b = static_cast<double>(b_counts[y]) / static_cast<double>(others);
    entry.d = static_cast<double>(d_counts[y]) / static_cast<double>(others);
    entry.rhs =
        entry.p_y / (1.0 - entry.p_y) * (entry.alpha_eff - entry.eps_at_khat);
    entry.satisfied = entry.b - entry.d >= entry.rhs;
  }
  return entries;
}

}  // namespace conformal_sets
