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


#include <algorithm>
#include <iterator>
#include <vector>

#include <gtest/gtest.h>

#include "conformal_sets/calibration.h"
#include "conformal_sets/errors.h"
#include "conformal_sets/parallel.h"
#include "conformal_sets/prediction.h"
#include "oracles.h"
#include "test_util.h"

namespace conformal_sets {
namespace {

using testing::BruteRank;
using testing::BruteSets;
using testing::Gen;
using testing::Matrix;

CalibrationModel MarginalModel(double q_hat, std::size_t k,
                               bool randomize = false) {
  CalibrationModel model;
  model.method = Method::kMarginal;
  model.num_classes = k;
  model.score.randomize = randomize;
  model.marginal = MarginalRecord{q_hat, 10};
  return model;
}

CalibrationModel ClassModel(Method method, std::vector<double> q_hat,
                            std::vector<std::size_t> k_hat) {
  CalibrationModel model;
  model.method = method;
  model.num_classes = q_hat.size();
  model.score.randomize = false;
  for (Label y = 0; y < q_hat.size(); ++y) {
    ClassRecord r;
    r.y = y;
    r.q_hat = q_hat[y];
    r.k_hat = k_hat[y];
    r.n_y = 10;
    model.classes.push_back(r);
  }
  return model;
}

std::vector<std::vector<Label>> Members(const PredictionBatch& batch) {
  std::vector<std::vector<Label>> out;
  for (const auto& s : batch.sets) out.push_back(s.members);
  return out;
}

TEST(PredictMarginalTest, InfiniteThresholdGivesFullSets) {
  Gen gen(40);
  const auto probs = gen.Matrix(20, 4);
  const auto batch = PredictMarginal(MarginalModel(kInfinity, 4, true), probs);
  for (const auto& set : batch.sets) {
    EXPECT_EQ(set.members, (std::vector<Label>{0, 1, 2, 3}));
  }
}

TEST(PredictMarginalTest, TinyThresholdAllowsEmptySets) {
  const auto probs = Matrix({{0.6, 0.4}, {0.5, 0.5}});
  const auto batch = PredictMarginal(MarginalModel(0.1, 2), probs);
  for (const auto& set : batch.sets) EXPECT_TRUE(set.members.empty());
}

TEST(PredictMarginalTest, TwoClassHandEvaluation) {
  // Scores with u = 1 are 0.9 and 1.0.
  const auto probs = Matrix({{0.9, 0.1}});
  const auto batch = PredictMarginal(MarginalModel(0.95, 2), probs);
  EXPECT_EQ(batch.sets[0].members, (std::vector<Label>{0}));
  EXPECT_EQ(batch.sets[0].index, 0u);
}

TEST(PredictTest, KMismatchNamesBothValues) {
  const auto probs = Matrix({{0.9, 0.1}});
  try {
    PredictMarginal(MarginalModel(0.95, 3), probs);
    FAIL();
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("K=3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("K=2"), std::string::npos) << msg;
  }
}

TEST(PredictTest, MethodMismatchIsConfigError) {
  const auto probs = Matrix({{0.9, 0.1}});
  EXPECT_THROW(PredictCcp(MarginalModel(0.95, 2), probs), ConfigError);
  EXPECT_THROW(
      PredictMarginal(ClassModel(Method::kCcp, {1.0, 1.0}, {2, 2}), probs),
      ConfigError);
}

TEST(PredictCcpTest, InfiniteThresholdsGiveFullSets) {
  Gen gen(41);
  const auto probs = gen.Matrix(10, 3);
  const auto model =
      ClassModel(Method::kCcp, {kInfinity, kInfinity, kInfinity}, {3, 3, 3});
  for (const auto& set : PredictCcp(model, probs).sets) {
    EXPECT_EQ(set.members.size(), 3u);
  }
}

TEST(PredictCcpTest, EqualThresholdsMatchMarginal) {
  Gen gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = gen.Int(2, 7);
    const auto probs = gen.Matrix(gen.Int(1, 30), k);
    const double q = gen.Real(0.0, 1.0);
    auto ccp = ClassModel(Method::kCcp, std::vector<double>(k, q),
                          std::vector<std::size_t>(k, k));
    auto marginal = MarginalModel(q, k);
    ccp.score.randomize = marginal.score.randomize = true;
    ccp.score.seed = marginal.score.seed = trial;
    EXPECT_EQ(Members(PredictCcp(ccp, probs)),
              Members(PredictMarginal(marginal, probs)));
  }
}

TEST(PredictRc3pTest, FullRankMatchesCcp) {
  Gen gen(43);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = gen.Int(2, 7);
    const auto probs = gen.Matrix(gen.Int(1, 30), k);
    std::vector<double> q(k);
    for (double& v : q) v = gen.Real(0.0, 1.0);
    const std::vector<std::size_t> full(k, k);
    EXPECT_EQ(Members(PredictRc3p(ClassModel(Method::kRc3p, q, full), probs)),
              Members(PredictCcp(ClassModel(Method::kCcp, q, full), probs)));
  }
}

TEST(PredictRc3pTest, RankOneFilterKeepsArgmaxTies) {
  Gen gen(44);
  const auto probs = gen.Matrix(200, 4);
  const auto model = ClassModel(
      Method::kRc3p, {kInfinity, kInfinity, kInfinity, kInfinity}, {1, 1, 1, 1});
  const auto batch = PredictRc3p(model, probs);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    const double top = *std::max_element(row.begin(), row.end());
    for (Label y : batch.sets[i].members) EXPECT_EQ(row[y], top);
    // Only a unique maximum survives the rank-1 filter.
    const auto ties = std::count(row.begin(), row.end(), top);
    EXPECT_EQ(batch.sets[i].members.size(), ties == 1 ? 1u : 0u);
  }
}

TEST(PredictRc3pTest, SetEqualsIntersectionOfBothConditions) {
  Gen gen(45);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = gen.Int(2, 8);
    const auto cal = gen.Matrix(gen.Int(k, 100), k);
    const auto labels = gen.CoveringLabels(cal.rows(), k);
    ScoreConfig cfg;
    cfg.seed = trial;
    cfg.randomize = gen.Coin();
    if (gen.Coin(0.3)) {
      cfg.kind = ScoreKind::kRaps;
      cfg.lambda = gen.Real(0.0, 0.2);
      cfg.k_reg = gen.Int(1, k);
    }
    const auto model =
        CalibrateRc3p(cal, labels, cfg, gen.Real(0.05, 0.5), 0.0);
    const auto test = gen.Matrix(gen.Int(1, 50), k);
    const auto batch = PredictRc3p(model, test);
    const auto scores = ScoreAll(test, cfg, TestSeed(cfg.seed));
    for (std::size_t i = 0; i < test.rows(); ++i) {
      std::vector<Label> by_rank;
      std::vector<Label> by_score;
      for (Label y = 0; y < k; ++y) {
        if (BruteRank(test.row(i), y) <= model.classes[y].k_hat) {
          by_rank.push_back(y);
        }
        if (scores.at(i, y) <= model.classes[y].q_hat) by_score.push_back(y);
      }
      std::vector<Label> both;
      std::set_intersection(by_rank.begin(), by_rank.end(), by_score.begin(),
                            by_score.end(), std::back_inserter(both));
      EXPECT_EQ(batch.sets[i].members, both);
    }
  }
}

TEST(PredictTest, NestedInAlpha) {
  Gen gen(46);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = gen.Int(2, 6);
    const auto cal = gen.Matrix(gen.Int(k, 120), k);
    const auto labels = gen.CoveringLabels(cal.rows(), k);
    const auto test = gen.Matrix(30, k);
    ScoreConfig cfg;
    cfg.seed = trial;
    const double big = gen.Real(0.1, 0.5);
    const double small = big * gen.Real(0.1, 0.9);
    for (auto method : {Method::kMarginal, Method::kCcp}) {
      const auto wide = Predict(Calibrate(method, cal, labels, cfg, small, 0.0),
                                test);
      const auto narrow = Predict(Calibrate(method, cal, labels, cfg, big, 0.0),
                                  test);
      for (std::size_t i = 0; i < test.rows(); ++i) {
        EXPECT_TRUE(std::includes(
            wide.sets[i].members.begin(), wide.sets[i].members.end(),
            narrow.sets[i].members.begin(), narrow.sets[i].members.end()));
      }
    }
  }
}

TEST(PredictTest, MatchesBruteForceAndIsDeterministic) {
  Gen gen(47);
  const std::size_t k = 6;
  const auto cal = gen.Matrix(600, k);
  const auto labels = gen.CoveringLabels(600, k);
  const auto test = gen.Matrix(2000, k);
  ScoreConfig cfg;
  cfg.seed = 77;
  for (auto method : {Method::kMarginal, Method::kCcp, Method::kRc3p}) {
    const auto model = Calibrate(method, cal, labels, cfg, 0.1, 0.0);
    SetThreadCount(1);
    const auto serial = Predict(model, test);
    SetThreadCount(4);
    const auto parallel = Predict(model, test);
    SetThreadCount(0);
    EXPECT_EQ(serial.sets, parallel.sets);
    EXPECT_EQ(serial.model_fingerprint, model.Fingerprint());
    EXPECT_EQ(serial.score_seed, TestSeed(cfg.seed));
    const auto expected =
        BruteSets(model, test, ScoreAll(test, cfg, TestSeed(cfg.seed)));
    EXPECT_EQ(Members(serial), expected);
    for (const auto& set : serial.sets) {
      EXPECT_LE(set.members.size(), k);
      EXPECT_TRUE(std::is_sorted(set.members.begin(), set.members.end()));
      EXPECT_EQ(std::adjacent_find(set.members.begin(), set.members.end()),
                set.members.end());
    }
  }
}

}  // namespace
}  // namespace conformal_sets
