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

#include "conformal_sets/prediction.h"

#include <string>

#include "conformal_sets/errors.h"
#include "conformal_sets/parallel.h"
#include "conformal_sets/scores.h"

namespace conformal_sets {
namespace {

void CheckModel(const CalibrationModel& model, Method expected,
                const ProbabilityMatrix& test_probs) {
  if (model.method != expected) {
    throw ConfigError("model was calibrated with method '" +
                      std::string(MethodName(model.method)) + "', expected '" +
                      std::string(MethodName(expected)) + "'");
  }
  if (model.num_classes != test_probs.num_classes()) {
    throw InputError("model has K=" + std::to_string(model.num_classes) +
                     " but the probability matrix has K=" +
                     std::to_string(test_probs.num_classes()));
  }
  if (expected == Method::kMarginal) {
    if (!model.marginal) throw ConfigError("marginal model lacks a threshold");
  } else if (model.classes.size() != model.num_classes) {
    throw ConfigError("model lists " + std::to_string(model.classes.size()) +
                      " class records for K=" +
                      std::to_string(model.num_classes));
  }
}

// `include(i, y, score)` decides membership for one candidate.
template <typename Include>
PredictionBatch Threshold(const CalibrationModel& model,
                          const ProbabilityMatrix& test_probs,
                          Include include) {
  const std::uint64_t seed = TestSeed(model.score.seed);
  const ScoreMatrix scores = ScoreAll(test_probs, model.score, seed);
  PredictionBatch batch;
  batch.model_fingerprint = model.Fingerprint();
  batch.score_seed = seed;
  batch.sets.resize(test_probs.rows());
  ParallelFor(test_probs.rows(), [&](std::size_t i) {
    PredictionSet& set = batch.sets[i];
    set.index = i;
    for (Label y = 0; y < test_probs.num_classes(); ++y) {
      if (include(i, y, scores.at(i, y))) set.members.push_back(y);
    }
  });
  return batch;
}

}  // namespace

PredictionBatch PredictMarginal(const CalibrationModel& model,
                                const ProbabilityMatrix& test_probs) {
  CheckModel(model, Method::kMarginal, test_probs);
  const double q_hat = model.marginal->q_hat;
  return Threshold(model, test_probs,
                   [&](std::size_t, Label, double v) { return v <= q_hat; });
}

PredictionBatch PredictCcp(const CalibrationModel& model,
                           const ProbabilityMatrix& test_probs) {
  CheckModel(model, Method::kCcp, test_probs);
  return Threshold(model, test_probs, [&](std::size_t, Label y, double v) {
    return v <= model.classes[y].q_hat;
  });
}

PredictionBatch PredictRc3p(const CalibrationModel& model,
                            const ProbabilityMatrix& test_probs) {
  CheckModel(model, Method::kRc3p, test_probs);
  return Threshold(model, test_probs, [&](std::size_t i, Label y, double v) {
    const ClassRecord& r = model.classes[y];
    return v <= r.q_hat && LabelRank(test_probs.row(i), y) <= r.k_hat;
  });
}

PredictionBatch Predict(const CalibrationModel& model,
                        const ProbabilityMatrix& test_probs) {
  switch (model.method) {
    case Method::kMarginal:
      return PredictMarginal(model, test_probs);
    case Method::kCcp:
      return PredictCcp(model, test_probs);
    case Method::kRc3p:
      return PredictRc3p(model, test_probs);
  }
  throw ConfigError("unknown calibration method");
}

}  // namespace conformal_sets
