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

// File formats.
//
// Probability matrix, CSV: n lines of K comma-separated decimals, with an
// optional header line (detected when its first field is not a number).
// Probability matrix, binary (".rcm"): "RCM1", u64 n, u64 K, then n*K
// doubles, row-major, all little-endian.
// Labels: one non-negative integer per line.
// Prediction sets: "row_index,set_size,i1;i2;..." per line, members sorted;
// the member field is empty for an empty set.
// Model, metrics and diagnostics: JSON. Infinite thresholds are written as
// the string "inf".
//
// Every text output ends with a newline; CSV floats carry 17 significant
// digits.

#ifndef CONFORMAL_SETS_IO_H_
#define CONFORMAL_SETS_IO_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "conformal_sets/calibration.h"
#include "conformal_sets/core.h"
#include "conformal_sets/metrics.h"
#include "conformal_sets/prediction.h"
#include "conformal_sets/synthgen.h"
#include "nlohmann/json.hpp"

namespace conformal_sets {

// "%.17g".
std::string FormatDouble(double value);

ProbabilityMatrix ParseProbabilityCsv(std::istream& in,
                                      std::string_view source = "<stream>");
void WriteProbabilityCsv(std::ostream& out, const ProbabilityMatrix& probs);

ProbabilityMatrix ParseProbabilityBinary(std::istream& in,
                                         std::string_view source = "<stream>");
void WriteProbabilityBinary(std::ostream& out, const ProbabilityMatrix& probs);

// Binary when the extension is ".rcm", CSV otherwise.
ProbabilityMatrix ReadProbabilityMatrix(const std::filesystem::path& path);
void WriteProbabilityMatrix(const std::filesystem::path& path,
                            const ProbabilityMatrix& probs);

LabelVector ParseLabels(std::istream& in, std::string_view source = "<stream>");
LabelVector ReadLabels(const std::filesystem::path& path);
void WriteLabels(const std::filesystem::path& path, const LabelVector& labels);

void WritePredictionSets(std::ostream& out, const PredictionBatch& batch);
PredictionBatch ParsePredictionSets(std::istream& in,
                                    std::string_view source = "<stream>");
void WritePredictionSets(const std::filesystem::path& path,
                         const PredictionBatch& batch);
PredictionBatch ReadPredictionSets(const std::filesystem::path& path);

nlohmann::json ModelToJson(const CalibrationModel& model);
// Throws ParseError on missing or mistyped fields.
CalibrationModel ModelFromJson(const nlohmann::json& json);
void SaveModel(const std::filesystem::path& path,
               const CalibrationModel& model);
CalibrationModel LoadModel(const std::filesystem::path& path);

nlohmann::json CoverageReportToJson(const CoverageReport& report);
nlohmann::json RankFrequencyToJson(const RankFrequency& freq);
nlohmann::json SigmaToJson(const std::vector<SigmaEntry>& sigma);
nlohmann::json Theorem2ToJson(const std::vector<Theorem2Entry>& entries);
nlohmann::json MetricsReportToJson(const MetricsReport& report);
nlohmann::json CoverageSummaryToJson(const CoverageSummary& summary);

// One row per class plus a trailing "summary" row.
void WriteMetricsCsv(std::ostream& out, const CoverageReport& report);
void WriteRankFrequencyCsv(std::ostream& out, const RankFrequency& freq);
void WriteSigmaCsv(std::ostream& out, const std::vector<SigmaEntry>& sigma);

// Pretty-printed JSON with a trailing newline.
void WriteJson(const std::filesystem::path& path, const nlohmann::json& json);
nlohmann::json ReadJson(const std::filesystem::path& path);

// Writes `text` to `path` via a stream opened in binary mode.
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

}  // namespace conformal_sets

#endif  // CONFORMAL_SETS_IO_H_
