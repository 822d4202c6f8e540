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

// Python bindings. Matrices cross the boundary as float64 numpy arrays;
// models and reports cross as JSON text (the same schema the CLI writes),
// decoded into dicts by the pure-Python wrapper.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>
#include <vector>

#include "conformal_sets/calibration.h"
#include "conformal_sets/core.h"
#include "conformal_sets/errors.h"
#include "conformal_sets/io.h"
#include "conformal_sets/metrics.h"
#include "conformal_sets/prediction.h"
#include "conformal_sets/scores.h"
#include "conformal_sets/synthgen.h"

namespace py = pybind11;
namespace cs = conformal_sets;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<long long, py::array::c_style | py::array::forcecast>;

cs::ProbabilityMatrix ToMatrix(const DoubleArray& probs) {
  if (probs.ndim() != 2) {
    throw cs::InputError("probabilities must be a 2-D array");
  }
  const auto rows = static_cast<std::size_t>(probs.shape(0));
  const auto cols = static_cast<std::size_t>(probs.shape(1));
  std::vector<double> values(probs.data(), probs.data() + rows * cols);
  return cs::ProbabilityMatrix::FromValues(std::move(values), rows, cols);
}

DoubleArray FromMatrix(const cs::ProbabilityMatrix& probs) {
  DoubleArray out({probs.rows(), probs.num_classes()});
  std::copy(probs.values().begin(), probs.values().end(), out.mutable_data());
  return out;
}

cs::LabelVector ToLabels(const LabelArray& labels) {
  if (labels.ndim() != 1) throw cs::InputError("labels must be a 1-D array");
  std::vector<cs::Label> values(static_cast<std::size_t>(labels.shape(0)));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const long long y = labels.data()[i];
    if (y < 0) {
      throw cs::ValidationError("label at index " + std::to_string(i) +
                                " is negative");
    }
    values[i] = static_cast<cs::Label>(y);
  }
  return cs::LabelVector(std::move(values));
}

cs::ScoreConfig MakeScore(const std::string& kind, double lambda,
                          std::size_t k_reg, bool randomize,
                          std::uint64_t seed) {
  cs::ScoreConfig cfg;
  cfg.kind = cs::ParseScoreKind(kind);
  cfg.lambda = lambda;
  cfg.k_reg = k_reg;
  cfg.randomize = randomize;
  cfg.seed = seed;
  return cfg;
}

cs::CalibrationModel ParseModel(const std::string& text) {
  try {
    return cs::ModelFromJson(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw cs::ParseError(std::string("model JSON: ") + e.what());
  }
}

cs::PredictionBatch ToBatch(const std::vector<std::vector<cs::Label>>& sets) {
  cs::PredictionBatch batch;
  batch.sets.resize(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    batch.sets[i].index = i;
    batch.sets[i].members = sets[i];
    std::sort(batch.sets[i].members.begin(), batch.sets[i].members.end());
  }
  return batch;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Class-conditional conformal prediction sets (C++ core)";

  static py::exception<cs::Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const cs::Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("label_rank",
        [](const std::vector<double>& row, std::size_t y) {
          return cs::LabelRank(row, y);
        },
        py::arg("row"), py::arg("y"));

  m.def("score_pair",
        [](const std::vector<double>& row, std::size_t y,
           const std::string& kind, double lambda, std::size_t k_reg,
           double u) {
          return cs::ScorePair(row, y, MakeScore(kind, lambda, k_reg, true, 0),
                               u);
        },
        py::arg("row"), py::arg("y"), py::arg("kind") = "aps",
        py::arg("lam") = 0.0, py::arg("k_reg") = 1, py::arg("u") = 1.0);

  m.def("score_all",
        [](const DoubleArray& probs, const std::string& kind, double lambda,
           std::size_t k_reg, bool randomize, std::uint64_t seed) {
          const auto scores = cs::ScoreAll(
              ToMatrix(probs), MakeScore(kind, lambda, k_reg, randomize, seed));
          DoubleArray out({scores.rows(), scores.num_classes()});
          std::copy(scores.values().begin(), scores.values().end(),
                    out.mutable_data());
          return out;
        },
        py::arg("probs"), py::arg("kind") = "aps", py::arg("lam") = 0.0,
        py::arg("k_reg") = 1, py::arg("randomize") = true,
        py::arg("seed") = 0);

  m.def("conformal_quantile",
        [](const std::vector<double>& scores, double level) {
          return cs::ConformalQuantile(scores, level);
        },
        py::arg("scores"), py::arg("level"));

  m.def("effective_level", &cs::EffectiveLevel, py::arg("alpha"),
        py::arg("g"), py::arg("n_y"));

  m.def("topk_errors",
        [](const DoubleArray& probs, const LabelArray& labels) {
          const auto table = cs::EstimateTopKErrors(ToMatrix(probs),
                                                    ToLabels(labels));
          const std::size_t k = table.num_classes();
          DoubleArray out({k, k});
          for (std::size_t y = 0; y < k; ++y) {
            const auto row = table.errors(static_cast<cs::Label>(y));
            std::copy(row.begin(), row.end(), out.mutable_data() + y * k);
          }
          return out;
        },
        py::arg("probs"), py::arg("labels"));

  m.def("calibrate",
        [](const std::string& method, const DoubleArray& probs,
           const LabelArray& labels, double alpha, double g,
           const std::string& kind, double lambda, std::size_t k_reg,
           bool randomize, std::uint64_t seed, int option) {
          const auto model = cs::Calibrate(
              cs::ParseMethod(method), ToMatrix(probs), ToLabels(labels),
              MakeScore(kind, lambda, k_reg, randomize, seed), alpha, g,
              option == 1 ? cs::RankOption::kOptionI
                          : cs::RankOption::kOptionII);
          return cs::ModelToJson(model).dump();
        },
        py::arg("method"), py::arg("probs"), py::arg("labels"),
        py::arg("alpha"), py::arg("g") = 0.0, py::arg("kind") = "aps",
        py::arg("lam") = 0.0, py::arg("k_reg") = 1,
        py::arg("randomize") = true, py::arg("seed") = 0,
        py::arg("option") = 2);

  m.def("predict",
        [](const std::string& model_json, const DoubleArray& probs) {
          const auto batch = cs::Predict(ParseModel(model_json), ToMatrix(probs));
          std::vector<std::vector<cs::Label>> sets;
          sets.reserve(batch.sets.size());
          for (const auto& set : batch.sets) sets.push_back(set.members);
          return sets;
        },
        py::arg("model_json"), py::arg("probs"));

  m.def("evaluate",
        [](const std::vector<std::vector<cs::Label>>& sets,
           const LabelArray& labels, double alpha, std::size_t num_classes) {
          return cs::CoverageReportToJson(
                     cs::Evaluate(ToBatch(sets), ToLabels(labels), alpha,
                                  num_classes))
              .dump();
        },
        py::arg("sets"), py::arg("labels"), py::arg("alpha"),
        py::arg("num_classes"));

  m.def("rank_frequency",
        [](const std::vector<std::vector<cs::Label>>& sets,
           const DoubleArray& probs) {
          return cs::ComputeRankFrequency(ToBatch(sets), ToMatrix(probs)).p;
        },
        py::arg("sets"), py::arg("probs"));

  m.def("diagnose",
        [](const std::string& rc3p_json, const std::string& ccp_json,
           const DoubleArray& probs, const LabelArray& labels) {
          const auto rc3p = ParseModel(rc3p_json);
          const auto ccp = ParseModel(ccp_json);
          const auto matrix = ToMatrix(probs);
          const auto y = ToLabels(labels);
          nlohmann::json out;
          out["sigma"] =
              cs::SigmaToJson(cs::SigmaCondition(rc3p, ccp, matrix, y));
          if (rc3p.score.kind != cs::ScoreKind::kHps) {
            out["thm2"] =
                cs::Theorem2ToJson(cs::Theorem2Check(rc3p, ccp, matrix, y));
          }
          return out.dump();
        },
        py::arg("rc3p_json"), py::arg("ccp_json"), py::arg("probs"),
        py::arg("labels"));

  m.def("decay_counts",
        [](const std::string& kind, double rho, std::size_t n_train,
           std::size_t num_classes) {
          return cs::DecayCounts(
              {cs::ParseDecayKind(kind), rho, n_train, num_classes});
        },
        py::arg("kind"), py::arg("rho"), py::arg("n_train"),
        py::arg("num_classes"));

  m.def("sample_world",
        [](const std::vector<std::size_t>& counts, double temperature,
           double noise, std::uint64_t seed, double spread,
           std::uint64_t stream) {
          auto world = cs::SyntheticWorld::Balanced(counts.size(), temperature,
                                                    noise, seed);
          world.spread = spread;
          const auto sample = cs::SampleWorld(world, counts, stream);
          LabelArray labels(static_cast<py::ssize_t>(sample.labels.size()));
          for (std::size_t i = 0; i < sample.labels.size(); ++i) {
            labels.mutable_data()[i] = sample.labels[i];
          }
          return py::make_tuple(FromMatrix(sample.probs), labels);
        },
        py::arg("counts"), py::arg("temperature") = 3.0,
        py::arg("noise") = 0.0, py::arg("seed") = 0, py::arg("spread") = 0.0,
        py::arg("stream") = 0);
}
