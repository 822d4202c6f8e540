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

#include "conformal_sets/core.h"

#include <cmath>
#include <string>

#include "conformal_sets/errors.h"

namespace conformal_sets {

ProbabilityMatrix ProbabilityMatrix::FromValues(std::vector<double> values,
                                                std::size_t rows,
                                                std::size_t num_classes) {
  if (rows < 1) {
    throw ValidationError("probability matrix needs at least one row");
  }
  if (num_classes < 2) {
    throw ValidationError("probability matrix needs at least two classes, got " +
                          std::to_string(num_classes));
  }
  if (values.size() != rows * num_classes) {
    throw InputError("probability matrix expects " +
                     std::to_string(rows * num_classes) + " values, got " +
                     std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = values.data() + i * num_classes;
    double sum = 0.0;
    for (std::size_t y = 0; y < num_classes; ++y) {
      if (!(row[y] >= 0.0 && row[y] <= 1.0)) {
        throw ValidationError("row " + std::to_string(i) + ", column " +
                              std::to_string(y) + ": confidence " +
                              std::to_string(row[y]) + " outside [0, 1]");
      }
      sum += row[y];
    }
    const double deviation = std::abs(sum - 1.0);
    if (deviation > kRowSumTolerance) {
      throw ValidationError("row " + std::to_string(i) + " sums to " +
                            std::to_string(sum) + ", expected 1");
    }
    if (deviation > kRowSumExact) {
      for (std::size_t y = 0; y < num_classes; ++y) row[y] /= sum;
    }
  }
  return ProbabilityMatrix(std::move(values), rows, num_classes);
}

void CheckLabels(const LabelVector& labels, std::size_t num_classes) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw ValidationError("label " + std::to_string(labels[i]) + " at index " +
                            std::to_string(i) + " is not below K=" +
                            std::to_string(num_classes));
    }
  }
}

void CheckPaired(const ProbabilityMatrix& probs, const LabelVector& labels) {
  if (probs.rows() != labels.size()) {
    throw InputError("probability matrix has " + std::to_string(probs.rows()) +
                     " rows but there are " + std::to_string(labels.size()) +
                     " labels");
  }
  CheckLabels(labels, probs.num_classes());
}

ClassPartition PartitionByClass(const LabelVector& labels,
                                std::size_t num_classes) {
  CheckLabels(labels, num_classes);
  ClassPartition partition;
  partition.indices.resize(num_classes);
  partition.counts.assign(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    partition.indices[labels[i]].push_back(i);
    ++partition.counts[labels[i]];
  }
  return partition;
}

std::size_t LabelRank(std::span<const double> row, std::size_t y) {
  if (y >= row.size()) {
    throw InputError("class index " + std::to_string(y) +
                     " out of bounds for a row of " +
                     std::to_string(row.size()) + " classes");
  }
  const double target = row[y];
  std::size_t rank = 0;
  for (double value : row) {
    if (value >= target) ++rank;
  }
  return rank;
}

std::vector<std::size_t> TrueLabelRanks(const ProbabilityMatrix& probs,
                                        const LabelVector& labels) {
  CheckPaired(probs, labels);
  std::vector<std::size_t> ranks(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ranks[i] = LabelRank(probs.row(i), labels[i]);
  }
  return ranks;
}

TopKErrorTable EstimateTopKErrors(std::span<const std::size_t> ranks,
                                  const LabelVector& labels,
                                  std::size_t num_classes) {
  if (ranks.size() != labels.size()) {
    throw InputError("got " + std::to_string(ranks.size()) + " ranks for " +
                     std::to_string(labels.size()) + " labels");
  }
  CheckLabels(labels, num_classes);

  // histogram[y][r - 1] = number of class-y examples with rank r.
  std::vector<std::size_t> histogram(num_classes * num_classes, 0);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] < 1 || ranks[i] > num_classes) {
      throw InputError("rank " + std::to_string(ranks[i]) + " at index " +
                       std::to_string(i) + " outside [1, K]");
    }
    ++histogram[labels[i] * num_classes + ranks[i] - 1];
    ++counts[labels[i]];
  }

  std::vector<double> errors(num_classes * num_classes, 0.0);
  for (std::size_t y = 0; y < num_classes; ++y) {
    if (counts[y] == 0) continue;
    // above = number of class-y examples with rank > k.
    std::size_t above = counts[y];
    for (std::size_t k = 1; k <= num_classes; ++k) {
      above -= histogram[y * num_classes + k - 1];
      errors[y * num_classes + k - 1] =
          static_cast<double>(above) / static_cast<double>(counts[y]);
    }
  }
  return TopKErrorTable(num_classes, std::move(errors), std::move(counts));
}

TopKErrorTable EstimateTopKErrors(const ProbabilityMatrix& probs,
                                  const LabelVector& labels) {
  const auto ranks = TrueLabelRanks(probs, labels);
  return EstimateTopKErrors(ranks, labels, probs.num_classes());
}

}  // namespace conformal_sets
