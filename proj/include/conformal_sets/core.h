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

// Domain types shared by every stage of the pipeline: classifier confidence
// matrices, label vectors, per-class partitions, label ranks and the
// class-wise top-k error table.
//
// Class indices are 0-based everywhere. Ranks are 1-based: the most
// confident class of a row has rank 1.

#ifndef CONFORMAL_SETS_CORE_H_
#define CONFORMAL_SETS_CORE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace conformal_sets {

using Label = std::uint32_t;

// Maximum deviation of a row sum from 1 that is repaired by renormalization.
inline constexpr double kRowSumTolerance = 1e-6;

// Row sums closer to 1 than this are left untouched, so ingesting an
// already-normalized matrix is the identity.
inline constexpr double kRowSumExact = 1e-12;

// n x K row-stochastic matrix of classifier confidences, stored row-major.
class ProbabilityMatrix {
 public:
  // Validates and takes ownership of `values` (row-major, rows * num_classes
  // entries). Every entry must lie in [0, 1]; rows whose sum is within
  // kRowSumTolerance of 1 are renormalized, others are rejected with a
  // ValidationError naming the row.
  static ProbabilityMatrix FromValues(std::vector<double> values,
                                      std::size_t rows,
                                      std::size_t num_classes);

  std::size_t rows() const { return rows_; }
  std::size_t num_classes() const { return num_classes_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * num_classes_, num_classes_};
  }
  double at(std::size_t i, std::size_t y) const {
    return values_[i * num_classes_ + y];
  }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const ProbabilityMatrix&,
                         const ProbabilityMatrix&) = default;

 private:
  ProbabilityMatrix(std::vector<double> values, std::size_t rows,
                    std::size_t num_classes)
      : values_(std::move(values)), rows_(rows), num_classes_(num_classes) {}

  std::vector<double> values_;
  std::size_t rows_ = 0;
  std::size_t num_classes_ = 0;
};

// Ground-truth labels. The class count is not known at construction time
// (label files carry none); CheckLabels validates against a K.
class LabelVector {
 public:
  LabelVector() = default;
  explicit LabelVector(std::vector<Label> labels)
      : labels_(std::move(labels)) {}

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  Label operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<Label>& values() const { return labels_; }

  auto begin() const { return labels_.begin(); }
  auto end() const { return labels_.end(); }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  std::vector<Label> labels_;
};

// Throws ValidationError if some label is >= num_classes.
void CheckLabels(const LabelVector& labels, std::size_t num_classes);

// Throws InputError on a length mismatch, ValidationError on a bad label.
void CheckPaired(const ProbabilityMatrix& probs, const LabelVector& labels);

struct ClassPartition {
  std::vector<std::vector<std::size_t>> indices;  // I_y, ascending.
  std::vector<std::size_t> counts;                // n_y.

  std::size_t num_classes() const { return counts.size(); }
  bool degenerate(Label y) const { return counts[y] == 0; }
};

ClassPartition PartitionByClass(const LabelVector& labels,
                                std::size_t num_classes);

// Number of entries of `row` that are >= row[y]. Ties count against y, so a
// tied maximum yields a rank above 1.
std::size_t LabelRank(std::span<const double> row, std::size_t y);

// Empirical class-wise top-k errors: error(y, k) is the fraction of class-y
// examples whose true-label rank exceeds k.
class TopKErrorTable {
 public:
  TopKErrorTable(std::size_t num_classes, std::vector<double> errors,
                 std::vector<std::size_t> counts)
      : num_classes_(num_classes),
        errors_(std::move(errors)),
        counts_(std::move(counts)) {}

  std::size_t num_classes() const { return num_classes_; }

  // 1 <= k <= K. Degenerate classes report 0 for every k.
  double error(Label y, std::size_t k) const {
    return errors_[y * num_classes_ + (k - 1)];
  }
  std::span<const double> errors(Label y) const {
    return {errors_.data() + y * num_classes_, num_classes_};
  }
  std::size_t count(Label y) const { return counts_[y]; }
  bool degenerate(Label y) const { return counts_[y] == 0; }

 private:
  std::size_t num_classes_;
  std::vector<double> errors_;  // K x K, row y holds k = 1..K.
  std::vector<std::size_t> counts_;
};

// Builds the table from the true-label ranks of a calibration set.
TopKErrorTable EstimateTopKErrors(std::span<const std::size_t> ranks,
                                  const LabelVector& labels,
                                  std::size_t num_classes);

TopKErrorTable EstimateTopKErrors(const ProbabilityMatrix& probs,
                                  const LabelVector& labels);

// True-label rank of every row.
std::vector<std::size_t> TrueLabelRanks(const ProbabilityMatrix& probs,
                                        const LabelVector& labels);

}  // namespace conformal_sets

#endif  // CONFORMAL_SETS_CORE_H_
