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

#include "conformal_sets/scores.h"

#include <algorithm>
#include <cctype>
#include <functional>
#include <string>

#include "conformal_sets/errors.h"
#include "conformal_sets/parallel.h"
#include "conformal_sets/random.h"

namespace conformal_sets {
namespace {

// Sorted-descending confidences of one row with running prefix sums, so the
// cumulative part of APS for rank r is prefix[r - 1].
struct SortedRow {
  std::vector<double> sorted;
  std::vector<double> prefix;  // prefix[j] = sorted[0] + ... + sorted[j-1].

  explicit SortedRow(std::span<const double> row)
      : sorted(row.begin(), row.end()), prefix(row.size() + 1, 0.0) {
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      prefix[j + 1] = prefix[j] + sorted[j];
    }
  }

  std::size_t Rank(double value) const {
    return static_cast<std::size_t>(
        std::upper_bound(sorted.begin(), sorted.end(), value,
                         std::greater<>()) -
        sorted.begin());
  }
};

double ScoreFromRank(const SortedRow& row, double confidence,
                     std::size_t rank, const ScoreConfig& cfg, double u) {
  if (cfg.kind == ScoreKind::kHps) return 1.0 - confidence;
  // Prefix sums of a row that is stochastic up to rounding can exceed 1 by
  // an ulp.
  const double aps =
      std::min(1.0, row.prefix[rank - 1] + u * row.sorted[rank - 1]);
  if (cfg.kind == ScoreKind::kAps || rank <= cfg.k_reg) return aps;
  return aps + cfg.lambda * static_cast<double>(rank - cfg.k_reg);
}

}  // namespace

std::string_view ScoreKindName(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kAps:
      return "aps";
    case ScoreKind::kRaps:
      return "raps";
    case ScoreKind::kHps:
      return "hps";
  }
  return "unknown";
}

ScoreKind ParseScoreKind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "aps") return ScoreKind::kAps;
  if (lower == "raps") return ScoreKind::kRaps;
  if (lower == "hps") return ScoreKind::kHps;
  throw ConfigError("unknown score kind '" + std::string(name) +
                    "' (expected aps, raps or hps)");
}

void ScoreConfig::Validate(std::size_t num_classes) const {
  if (kind != ScoreKind::kRaps) return;
  if (!(lambda >= 0.0)) {
    throw ConfigError("RAPS lambda must be non-negative, got " +
                      std::to_string(lambda));
  }
  if (k_reg < 1 || k_reg > num_classes) {
    throw ConfigError("RAPS k_reg must lie in [1, " +
                      std::to_string(num_classes) + "], got " +
                      std::to_string(k_reg));
  }
}

double TieBreakUniform(const ScoreConfig& cfg, std::uint64_t seed,
                       std::size_t index) {
  if (cfg.kind == ScoreKind::kHps || !cfg.randomize) return 1.0;
  return IndexedUniform(seed, index);
}

double ScorePair(std::span<const double> row, std::size_t y,
                 const ScoreConfig& cfg, double u) {
  cfg.Validate(row.size());
  if (!(u >= 0.0 && u <= 1.0)) {
    throw ConfigError("tie-breaking uniform must lie in [0, 1], got " +
                      std::to_string(u));
  }
  const std::size_t rank = LabelRank(row, y);
  return ScoreFromRank(SortedRow(row), row[y], rank, cfg, u);
}

ScoreMatrix ScoreAll(const ProbabilityMatrix& probs, const ScoreConfig& cfg,
                     std::uint64_t draw_seed) {
  const std::size_t n = probs.rows();
  const std::size_t num_classes = probs.num_classes();
  cfg.Validate(num_classes);
  std::vector<double> values(n * num_classes);
  ParallelFor(n, [&](std::size_t i) {
    const auto row = probs.row(i);
    const SortedRow sorted(row);
    const double u = TieBreakUniform(cfg, draw_seed, i);
    for (std::size_t y = 0; y < num_classes; ++y) {
      values[i * num_classes + y] =
          ScoreFromRank(sorted, row[y], sorted.Rank(row[y]), cfg, u);
    }
  });
  return ScoreMatrix(std::move(values), n, num_classes);
}

ScoreMatrix ScoreAll(const ProbabilityMatrix& probs, const ScoreConfig& cfg) {
  return ScoreAll(probs, cfg, cfg.seed);
}

std::vector<double> ScoreTrueLabels(const ProbabilityMatrix& probs,
                                    const LabelVector& labels,
                                    const ScoreConfig& cfg) {
  CheckPaired(probs, labels);
  const ScoreMatrix all = ScoreAll(probs, cfg);
  std::vector<double> scores(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    scores[i] = all.at(i, labels[i]);
  }
  return scores;
}

}  // namespace conformal_sets
