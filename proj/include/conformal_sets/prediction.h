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

#ifndef CONFORMAL_SETS_PREDICTION_H_
#define CONFORMAL_SETS_PREDICTION_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "conformal_sets/calibration.h"
#include "conformal_sets/core.h"

namespace conformal_sets {

struct PredictionSet {
  std::size_t index = 0;
  std::vector<Label> members;  // Sorted ascending, unique.

  friend bool operator==(const PredictionSet&,
                         const PredictionSet&) = default;
};

struct PredictionBatch {
  std::vector<PredictionSet> sets;
  std::string model_fingerprint;
  std::uint64_t score_seed = 0;
};

// y is in the set iff V(x, y) <= q_hat. Test-time tie-breaking uniforms
// come from TestSeed(model.score.seed), one per row.
PredictionBatch PredictMarginal(const CalibrationModel& model,
                                const ProbabilityMatrix& test_probs);

// y is in the set iff V(x, y) <= q_hat(y).
PredictionBatch PredictCcp(const CalibrationModel& model,
                           const ProbabilityMatrix& test_probs);

// y is in the set iff V(x, y) <= q_hat(y) and rank(x, y) <= k_hat(y).
PredictionBatch PredictRc3p(const CalibrationModel& model,
                            const ProbabilityMatrix& test_probs);

// Dispatches on model.method.
PredictionBatch Predict(const CalibrationModel& model,
                        const ProbabilityMatrix& test_probs);

}  // namespace conformal_sets

#endif  // CONFORMAL_SETS_PREDICTION_H_
