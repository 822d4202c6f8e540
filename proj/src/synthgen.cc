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

#include "conformal_sets/synthgen.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "conformal_sets/errors.h"
#include "conformal_sets/metrics.h"
#include "conformal_sets/parallel.h"
#include "conformal_sets/prediction.h"
#include "conformal_sets/random.h"
#include "spdlog/spdlog.h"

namespace conformal_sets {
namespace {

// Writes one synthetic row for class y into `out`.
void DrawRow(const SyntheticWorld& world, Label y, std::uint64_t row_seed,
             std::span<double> out) {
  const std::size_t num_classes = world.num_classes;
  for (std::size_t j = 0; j < num_classes; ++j) {
    out[j] = IndexedNormal(row_seed, j);
  }
  const double sharpness =
      world.class_sharpness.empty() ? 1.0 : world.class_sharpness[y];
  const double difficulty =
      world.spread > 0.0
          ? std::exp(world.spread * IndexedNormal(row_seed, num_classes))
          : 1.0;
  out[y] += world.temperature * sharpness * difficulty;

  const double top = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& z : out) {
    z = std::exp(z - top);
    total += z;
  }
  const double uniform = 1.0 / static_cast<double>(num_classes);
  for (double& p : out) {
    p = (1.0 - world.noise) * (p / total) + world.noise * uniform;
  }
}

SyntheticSample Assemble(const SyntheticWorld& world,
                         std::vector<Label> labels, std::uint64_t stream) {
  const std::size_t n = labels.size();
  const std::size_t num_classes = world.num_classes;
  std::vector<double> values(n * num_classes);
  const std::uint64_t stream_seed = HashIndex(world.seed, stream);
  ParallelFor(n, [&](std::size_t i) {
    DrawRow(world, labels[i], HashIndex(stream_seed, i),
            std::span<double>(values.data() + i * num_classes, num_classes));
  });
  return {ProbabilityMatrix::FromValues(std::move(values), n, num_classes),
          LabelVector(std::move(labels))};
}

}  // namespace

SyntheticWorld SyntheticWorld::Balanced(std::size_t num_classes,
                                        double temperature, double noise,
                                        std::uint64_t seed) {
  SyntheticWorld world;
  world.num_classes = num_classes;
  world.class_priors.assign(num_classes,
                            1.0 / static_cast<double>(num_classes));
  world.temperature = temperature;
  world.noise = noise;
  world.seed = seed;
  return world;
}

void SyntheticWorld::Validate() const {
  if (num_classes < 2) {
    throw ConfigError("synthetic world needs K >= 2");
  }
  if (class_priors.size() != num_classes) {
    throw ConfigError("class priors must have K entries");
  }
  double total = 0.0;
  for (double p : class_priors) {
    if (!(p >= 0.0)) throw ConfigError("class priors must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("class priors sum to " + std::to_string(total) +
                      ", expected 1");
  }
  if (!(temperature > 0.0)) {
    throw ConfigError("temperature must be positive");
  }
  if (!(noise >= 0.0 && noise <= 1.0)) {
    throw ConfigError("noise must lie in [0, 1]");
  }
  if (!(spread >= 0.0)) throw ConfigError("spread must be non-negative");
  if (!class_sharpness.empty() && class_sharpness.size() != num_classes) {
    throw ConfigError("class sharpness must be empty or have K entries");
  }
  for (double s : class_sharpness) {
    if (!(s >= 0.0)) throw ConfigError("class sharpness must be non-negative");
  }
}

std::string_view DecayKindName(DecayKind kind) {
  switch (kind) {
    case DecayKind::kExp:
      return "exp";
    case DecayKind::kPoly:
      return "poly";
    case DecayKind::kMaj:
      return "maj";
  }
  return "unknown";
}

DecayKind ParseDecayKind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "exp") return DecayKind::kExp;
  if (lower == "poly") return DecayKind::kPoly;
  if (lower == "maj") return DecayKind::kMaj;
  throw ConfigError("unknown decay '" + std::string(name) +
                    "' (expected exp, poly or maj)");
}

std::vector<std::size_t> DecayCounts(const DecaySpec& spec) {
  if (spec.num_classes < 1) throw ConfigError("decay needs K >= 1");
  if (!(spec.rho > 0.0 && spec.rho <= 1.0)) {
    throw ConfigError("imbalance ratio rho must lie in (0, 1], got " +
                      std::to_string(spec.rho));
  }
  const double k = static_cast<double>(spec.num_classes);
  const double base = static_cast<double>(spec.n_train) / k;
  std::vector<std::size_t> counts(spec.num_classes);
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < spec.num_classes; ++i) {
    const double c = static_cast<double>(i + 1);
    double value = base;
    switch (spec.kind) {
      case DecayKind::kExp:
        value = base * std::pow(spec.rho, c / k);
        break;
      case DecayKind::kPoly:
        value = base / std::sqrt(c / (10.0 * spec.rho) + 1.0);
        break;
      case DecayKind::kMaj:
        value = i == 0 ? base : base * spec.rho;
        break;
    }
    // Absorb representation error on values that are integers in exact
    // arithmetic (10 * 0.1^1 must floor to 1).
    const double floored = std::floor(value + 1e-9 * std::max(1.0, value));
    if (floored < 1.0) ++clamped;
    counts[i] = std::max<std::size_t>(1, static_cast<std::size_t>(floored));
  }
  if (clamped == spec.num_classes) {
    spdlog::warn("every class count was clamped to 1; n_train={} is too small",
                 spec.n_train);
  }
  return counts;
}

std::vector<double> SharpnessFromCounts(std::span<const std::size_t> counts) {
  if (counts.empty()) return {};
  const std::size_t largest = *std::max_element(counts.begin(), counts.end());
  const double denom = std::log1p(static_cast<double>(largest));
  std::vector<double> sharpness(counts.size(), 1.0);
  if (denom <= 0.0) return sharpness;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    sharpness[i] = std::log1p(static_cast<double>(counts[i])) / denom;
  }
  return sharpness;
}

SyntheticSample SampleWorld(const SyntheticWorld& world,
                            std::span<const std::size_t> counts,
                            std::uint64_t stream) {
  world.Validate();
  if (counts.size() != world.num_classes) {
    throw InputError("expected " + std::to_string(world.num_classes) +
                     " class counts, got " + std::to_string(counts.size()));
  }
  std::vector<Label> labels;
  labels.reserve(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  for (Label y = 0; y < world.num_classes; ++y) {
    labels.insert(labels.end(), counts[y], y);
  }
  if (labels.empty()) throw InputError("requested an empty sample");
  return Assemble(world, std::move(labels), stream);
}

SyntheticSample SampleByPriors(const SyntheticWorld& world, std::size_t n,
                               std::uint64_t stream) {
  world.Validate();
  if (n == 0) throw InputError("requested an empty sample");
  std::vector<double> cumulative(world.num_classes);
  std::partial_sum(world.class_priors.begin(), world.class_priors.end(),
                   cumulative.begin());
  const std::uint64_t label_seed = HashIndex(world.seed, stream, 0x1abe1ULL);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = IndexedUniform(label_seed, i) * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    labels[i] = static_cast<Label>(
        std::min<std::size_t>(it - cumulative.begin(), world.num_classes - 1));
  }
  return Assemble(world, std::move(labels), stream);
}

MeanStd Summarize(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double squares = 0.0;
    for (double v : values) squares += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(squares / (n - 1.0));
    out.se = out.stddev / std::sqrt(n);
  }
  return out;
}

CoverageSummary OracleCoverage(const SyntheticWorld& world,
                               std::span<const std::size_t> counts_cal,
                               std::span<const std::size_t> counts_test,
                               const OracleSettings& settings) {
  world.Validate();
  if (settings.replications < 1) {
    throw ConfigError("replications must be at least 1");
  }
  const std::size_t num_classes = world.num_classes;
  const std::size_t reps = settings.replications;

  std::vector<CoverageReport> reports(reps);
  ParallelFor(reps, [&](std::size_t r) {
    SyntheticWorld replica = world;
    replica.seed = HashIndex(world.seed, r);
    ScoreConfig score = settings.score;
    score.seed = HashIndex(settings.score.seed, r);
    const SyntheticSample cal = SampleWorld(replica, counts_cal, 1);
    const SyntheticSample test = SampleWorld(replica, counts_test, 2);
    const CalibrationModel model =
        Calibrate(settings.method, cal.probs, cal.labels, score,
                  settings.alpha, settings.g, settings.option);
    const PredictionBatch batch = Predict(model, test.probs);
    reports[r] = Evaluate(batch, test.labels, settings.alpha, num_classes);
  });

  CoverageSummary summary;
  summary.replications = reps;
  std::vector<double> values(reps);
  for (Label y = 0; y < num_classes; ++y) {
    for (std::size_t r = 0; r < reps; ++r) {
      values[r] = reports[r].per_class[y].coverage;
    }
    summary.class_coverage.push_back(Summarize(values));
    for (std::size_t r = 0; r < reps; ++r) {
      values[r] = reports[r].per_class[y].mean_size;
    }
    summary.class_size.push_back(Summarize(values));
  }
  for (std::size_t r = 0; r < reps; ++r) values[r] = reports[r].ucr;
  summary.ucr = Summarize(values);
  for (std::size_t r = 0; r < reps; ++r) values[r] = reports[r].apss;
  summary.apss = Summarize(values);
  summary.apss_per_replication = values;
  return summary;
}

}  // namespace conformal_sets
