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


#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "conformal_sets/core.h"
#include "conformal_sets/errors.h"
#include "test_util.h"

namespace conformal_sets {
namespace {

using testing::Gen;
using testing::Labels;
using testing::Matrix;

TEST(ProbabilityMatrixTest, AcceptsValidRows) {
  const auto m = Matrix({{0.5, 0.3, 0.2}, {0.1, 0.1, 0.8}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.num_classes(), 3u);
  EXPECT_DOUBLE_EQ(m.at(1, 2), 0.8);
}

TEST(ProbabilityMatrixTest, RenormalizesSmallDrift) {
  const auto m = Matrix({{0.5 + 4e-7, 0.3, 0.2}});
  const double sum = m.at(0, 0) + m.at(0, 1) + m.at(0, 2);
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(ProbabilityMatrixTest, RejectsRowOutsideTolerance) {
  try {
    Matrix({{0.5, 0.5}, {0.5, 0.3}});
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos)
        << e.what();
  }
}

TEST(ProbabilityMatrixTest, RejectsEntriesOutsideUnitInterval) {
  EXPECT_THROW(Matrix({{1.5, -0.5}}), ValidationError);
  EXPECT_THROW(Matrix({{NAN, 1.0}}), ValidationError);
}

TEST(ProbabilityMatrixTest, RejectsDegenerateShapes) {
  EXPECT_THROW(ProbabilityMatrix::FromValues({1.0}, 1, 1), ValidationError);
  EXPECT_THROW(ProbabilityMatrix::FromValues({}, 0, 3), ValidationError);
  EXPECT_THROW(ProbabilityMatrix::FromValues({0.5, 0.5}, 1, 3), InputError);
}

TEST(ProbabilityMatrixTest, IngestionIsIdempotent) {
  Gen gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto once = gen.Matrix(gen.Int(1, 20), gen.Int(2, 12));
    const auto twice = ProbabilityMatrix::FromValues(
        once.values(), once.rows(), once.num_classes());
    for (std::size_t i = 0; i < once.values().size(); ++i) {
      EXPECT_LE(std::abs(once.values()[i] - twice.values()[i]), 1e-12);
    }
  }
}

TEST(LabelRankTest, CountsEntriesAtLeastAsLarge) {
  const std::vector<double> row = {0.5, 0.3, 0.2};
  EXPECT_EQ(LabelRank(row, 1), 2u);
  EXPECT_EQ(LabelRank(row, 0), 1u);
  EXPECT_EQ(LabelRank(row, 2), 3u);
}

TEST(LabelRankTest, TiesInflateRank) {
  const std::vector<double> row = {0.4, 0.4, 0.2};
  EXPECT_EQ(LabelRank(row, 0), 2u);
  EXPECT_EQ(LabelRank(row, 1), 2u);
  const std::vector<double> flat = {0.25, 0.25, 0.25, 0.25};
  for (std::size_t y = 0; y < 4; ++y) EXPECT_EQ(LabelRank(flat, y), 4u);
}

TEST(LabelRankTest, OutOfRangeClassIsInputError) {
  const std::vector<double> row = {0.5, 0.5};
  EXPECT_THROW(LabelRank(row, 2), InputError);
}

TEST(LabelRankTest, RandomRowsStayInRange) {
  Gen gen(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = gen.Int(2, 15);
    const auto row = gen.Row(k);
    const auto top = static_cast<std::size_t>(
        std::max_element(row.begin(), row.end()) - row.begin());
    const bool unique_max =
        std::count(row.begin(), row.end(), row[top]) == 1;
    if (unique_max) {
      EXPECT_EQ(LabelRank(row, top), 1u);
    }
    for (std::size_t y = 0; y < k; ++y) {
      const std::size_t r = LabelRank(row, y);
      EXPECT_GE(r, 1u);
      EXPECT_LE(r, k);
    }
  }
}

TEST(PartitionTest, SplitsIndicesByClass) {
  const auto p = PartitionByClass(Labels({0, 1, 0}), 2);
  EXPECT_EQ(p.indices[0], (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(p.indices[1], (std::vector<std::size_t>{1}));
  EXPECT_EQ(p.counts, (std::vector<std::size_t>{2, 1}));
}

TEST(PartitionTest, EmptyLabelsLeaveEveryClassDegenerate) {
  const auto p = PartitionByClass(Labels({}), 3);
  for (Label y = 0; y < 3; ++y) {
    EXPECT_EQ(p.counts[y], 0u);
    EXPECT_TRUE(p.degenerate(y));
  }
}

TEST(PartitionTest, MissingClassesAreDegenerate) {
  const auto p = PartitionByClass(Labels({2, 2, 2}), 3);
  EXPECT_EQ(p.counts[2], 3u);
  EXPECT_TRUE(p.degenerate(0));
  EXPECT_TRUE(p.degenerate(1));
  EXPECT_FALSE(p.degenerate(2));
}

TEST(PartitionTest, RejectsOutOfRangeLabels) {
  EXPECT_THROW(PartitionByClass(Labels({0, 3}), 3), ValidationError);
}

TEST(PartitionTest, DisjointCover) {
  Gen gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = gen.Int(2, 10);
    const std::size_t n = gen.Int(0, 60);
    const auto labels = gen.Labels(n, k);
    const auto p = PartitionByClass(labels, k);
    std::vector<int> seen(n, 0);
    std::size_t total = 0;
    for (Label y = 0; y < k; ++y) {
      EXPECT_EQ(p.indices[y].size(), p.counts[y]);
      total += p.counts[y];
      for (std::size_t i : p.indices[y]) {
        EXPECT_EQ(labels[i], y);
        ++seen[i];
      }
    }
    EXPECT_EQ(total, n);
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(TopKErrorTest, MatchesCountOverSize) {
  const std::vector<std::size_t> ranks = {1, 1, 2, 3, 5};
  const auto table = EstimateTopKErrors(ranks, Labels({0, 0, 0, 0, 0}), 5);
  EXPECT_EQ(table.error(0, 1), 0.6);
  EXPECT_EQ(table.error(0, 2), 0.4);
  EXPECT_EQ(table.error(0, 4), 0.2);
  EXPECT_EQ(table.error(0, 5), 0.0);
  EXPECT_EQ(table.count(0), 5u);
  EXPECT_TRUE(table.degenerate(1));
}

TEST(TopKErrorTest, PerfectClassifierHasNoError) {
  const auto probs = Matrix({{0.9, 0.1}, {0.2, 0.8}, {0.7, 0.3}});
  const auto table = EstimateTopKErrors(probs, Labels({0, 1, 0}));
  for (Label y = 0; y < 2; ++y) {
    for (std::size_t k = 1; k <= 2; ++k) EXPECT_EQ(table.error(y, k), 0.0);
  }
}

TEST(TopKErrorTest, LengthMismatchIsInputError) {
  const auto probs = Matrix({{0.9, 0.1}, {0.2, 0.8}});
  EXPECT_THROW(EstimateTopKErrors(probs, Labels({0})), InputError);
}

TEST(TopKErrorTest, MonotoneWithTerminalZero) {
  Gen gen(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = gen.Int(2, 12);
    const std::size_t n = gen.Int(1, 80);
    const auto probs = gen.Matrix(n, k);
    const auto labels = gen.Labels(n, k);
    const auto table = EstimateTopKErrors(probs, labels);
    const auto ranks = TrueLabelRanks(probs, labels);
    for (Label y = 0; y < k; ++y) {
      if (table.degenerate(y)) continue;
      EXPECT_EQ(table.error(y, k), 0.0);
      for (std::size_t j = 1; j < k; ++j) {
        EXPECT_GE(table.error(y, j), table.error(y, j + 1));
        std::size_t above = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (labels[i] == y && ranks[i] > j) ++above;
        }
        EXPECT_EQ(table.error(y, j), static_cast<double>(above) /
                                         static_cast<double>(table.count(y)));
      }
    }
  }
}

}  // namespace
}  // namespace conformal_sets
