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


#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "conformal_sets/calibration.h"
#include "conformal_sets/errors.h"
#include "conformal_sets/io.h"
#include "conformal_sets/metrics.h"
#include "conformal_sets/prediction.h"
#include "test_util.h"

namespace conformal_sets {
namespace {

using testing::Gen;
using testing::Matrix;
using testing::TempDir;

std::string ErrorOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(FormatDoubleTest, SeventeenDigitsAndInfinity) {
  EXPECT_EQ(FormatDouble(0.1), "0.10000000000000001");
  EXPECT_EQ(FormatDouble(1.0), "1");
  EXPECT_EQ(FormatDouble(kInfinity), "inf");
}

TEST(CsvMatrixTest, SingleRow) {
  std::istringstream in("0.5,0.3,0.2\n");
  const auto m = ParseProbabilityCsv(in);
  EXPECT_EQ(m.rows(), 1u);
  EXPECT_EQ(m.num_classes(), 3u);
  EXPECT_EQ(m.at(0, 1), 0.3);
}

TEST(CsvMatrixTest, HeaderIsSkippedAndBlankLinesIgnored) {
  std::istringstream in("p0,p1\n0.25,0.75\n\n0.5,0.5\r\n");
  const auto m = ParseProbabilityCsv(in);
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.at(1, 0), 0.5);
}

TEST(CsvMatrixTest, ErrorsCarryLineNumbers) {
  std::istringstream ragged("0.5,0.5\n0.2,0.3,0.5\n");
  EXPECT_NE(ErrorOf([&] { ParseProbabilityCsv(ragged, "m.csv"); })
                .find("m.csv:2"),
            std::string::npos);
  std::istringstream garbage("0.5,0.5\n0.5,abc\n");
  const auto msg = ErrorOf([&] { ParseProbabilityCsv(garbage, "m.csv"); });
  EXPECT_NE(msg.find("m.csv:2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("abc"), std::string::npos) << msg;
  std::istringstream empty("header\n");
  EXPECT_THROW(ParseProbabilityCsv(empty), ParseError);
}

TEST(CsvMatrixTest, RowSumFailureNamesRow) {
  std::istringstream in("0.5,0.5\n0.5,0.3\n");
  try {
    ParseProbabilityCsv(in);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(MatrixRoundTripTest, CsvAndBinaryAreLossless) {
  Gen gen(70);
  TempDir dir;
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = gen.Matrix(gen.Int(1, 30), gen.Int(2, 9));
    WriteProbabilityMatrix(dir / "m.csv", m);
    WriteProbabilityMatrix(dir / "m.rcm", m);
    EXPECT_EQ(ReadProbabilityMatrix(dir / "m.csv"), m);
    EXPECT_EQ(ReadProbabilityMatrix(dir / "m.rcm"), m);
  }
}

TEST(BinaryMatrixTest, LayoutIsLittleEndian) {
  const auto m = Matrix({{0.25, 0.75}});
  std::ostringstream out;
  WriteProbabilityBinary(out, m);
  const std::string bytes = out.str();
  ASSERT_EQ(bytes.size(), 4u + 8u + 8u + 16u);
  EXPECT_EQ(bytes.substr(0, 4), "RCM1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 2u);
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 20, 8);
  EXPECT_EQ(first, 0.25);
}

TEST(BinaryMatrixTest, ErrorsCarryOffsets) {
  const auto m = Matrix({{0.25, 0.75}, {0.5, 0.5}});
  std::ostringstream out;
  WriteProbabilityBinary(out, m);
  const std::string good = out.str();

  std::istringstream bad_magic("XXXX" + good.substr(4));
  EXPECT_NE(ErrorOf([&] { ParseProbabilityBinary(bad_magic); })
                .find("offset 0"),
            std::string::npos);
  std::istringstream truncated(good.substr(0, good.size() - 3));
  EXPECT_NE(ErrorOf([&] { ParseProbabilityBinary(truncated); })
                .find("offset 44"),
            std::string::npos);
  std::istringstream trailing(good + "x");
  EXPECT_NE(ErrorOf([&] { ParseProbabilityBinary(trailing); })
                .find("trailing"),
            std::string::npos);
  std::istringstream header_only(good.substr(0, 10));
  EXPECT_THROW(ParseProbabilityBinary(header_only), ParseError);
}

TEST(LabelsTest, ParsesOnePerLine) {
  std::istringstream in("0\n2\n1\n");
  EXPECT_EQ(ParseLabels(in).values(), (std::vector<Label>{0, 2, 1}));
  std::istringstream empty("");
  EXPECT_TRUE(ParseLabels(empty).empty());
}

TEST(LabelsTest, NonIntegerLine) {
  for (const char* text : {"0\n1.5\n", "0\n-1\n", "0\nx\n"}) {
    std::istringstream in(text);
    const auto msg = ErrorOf([&] { ParseLabels(in, "l.txt"); });
    EXPECT_NE(msg.find("l.txt:2"), std::string::npos) << msg;
  }
}

TEST(LabelsTest, OutOfRangeCaughtAgainstK) {
  std::istringstream in("0\n3\n");
  EXPECT_THROW(CheckLabels(ParseLabels(in), 3), ValidationError);
}

TEST(LabelsTest, RoundTrip) {
  TempDir dir;
  const LabelVector labels(std::vector<Label>{4, 0, 0, 17});
  WriteLabels(dir / "l.txt", labels);
  EXPECT_EQ(ReadLabels(dir / "l.txt"), labels);
}

TEST(PredictionSetsTest, FormatAndRoundTrip) {
  PredictionBatch batch;
  batch.sets = {{0, {0, 2}}, {1, {}}, {2, {1}}};
  std::ostringstream out;
  WritePredictionSets(out, batch);
  EXPECT_EQ(out.str(), "0,2,0;2\n1,0,\n2,1,1\n");
  std::istringstream in(out.str());
  EXPECT_EQ(ParsePredictionSets(in).sets, batch.sets);
}

TEST(PredictionSetsTest, RejectsMalformedLines) {
  for (const char* text :
       {"0,2,0\n", "0,1,1;0\n", "0,2\n", "a,1,0\n", "0,1,x\n", "0,2,1;1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(ParsePredictionSets(in, "s.csv"), ParseError) << text;
  }
}

CalibrationModel SampleModel(Method method) {
  Gen gen(71);
  const auto probs = gen.Matrix(60, 4);
  auto labels = gen.CoveringLabels(60, 3);  // Class 3 stays empty.
  ScoreConfig cfg;
  cfg.kind = ScoreKind::kRaps;
  cfg.lambda = 0.05;
  cfg.k_reg = 2;
  cfg.seed = 0xfedcba9876543210ULL;
  return Calibrate(method, probs, labels, cfg, 0.1, 0.25);
}

TEST(ModelJsonTest, RoundTripIsExact) {
  TempDir dir;
  for (auto method : {Method::kMarginal, Method::kCcp, Method::kRc3p}) {
    const auto model = SampleModel(method);
    SaveModel(dir / "model.json", model);
    const auto loaded = LoadModel(dir / "model.json");
    EXPECT_EQ(loaded, model);
    EXPECT_EQ(loaded.Fingerprint(), model.Fingerprint());
    const std::string text = testing::ReadFile(dir / "model.json");
    EXPECT_EQ(text.back(), '\n');
  }
}

TEST(ModelJsonTest, InfinityIsSpelledOut) {
  const auto model = SampleModel(Method::kCcp);
  ASSERT_TRUE(model.classes[3].degenerate);
  const auto json = ModelToJson(model);
  EXPECT_EQ(json["classes"][3]["q_hat"], "inf");
  EXPECT_EQ(ModelFromJson(json).classes[3].q_hat, kInfinity);
  EXPECT_EQ(json["score"]["kind"], "raps");
  EXPECT_EQ(json["score"]["kreg"], 2);
  EXPECT_EQ(json["K"], 4);
  EXPECT_FALSE(json.contains("marginal"));
}

TEST(ModelJsonTest, MissingFieldsAreParseErrors) {
  auto json = ModelToJson(SampleModel(Method::kRc3p));
  auto broken = json;
  broken.erase("alpha");
  EXPECT_NE(ErrorOf([&] { ModelFromJson(broken); }).find("alpha"),
            std::string::npos);
  broken = json;
  broken["classes"][1].erase("k_hat");
  EXPECT_NE(ErrorOf([&] { ModelFromJson(broken); }).find("classes[1]"),
            std::string::npos);
  broken = json;
  broken["classes"][0]["q_hat"] = "huge";
  EXPECT_THROW(ModelFromJson(broken), ParseError);
  broken = json;
  broken["method"] = "cluster";
  EXPECT_THROW(ModelFromJson(broken), ParseError);
  broken = json;
  broken["classes"].erase(2);
  EXPECT_THROW(ModelFromJson(broken), ParseError);
  broken = json;
  broken["alpha"] = "small";
  EXPECT_THROW(ModelFromJson(broken), ParseError);
}

TEST(ModelJsonTest, ReloadedModelPredictsIdentically) {
  Gen gen(72);
  TempDir dir;
  const auto test = gen.Matrix(300, 4);
  for (auto method : {Method::kMarginal, Method::kCcp, Method::kRc3p}) {
    const auto model = SampleModel(method);
    SaveModel(dir / "m.json", model);
    EXPECT_EQ(Predict(LoadModel(dir / "m.json"), test).sets,
              Predict(model, test).sets);
  }
}

TEST(ReportCsvTest, MetricsCsvHasClassRowsAndSummary) {
  PredictionBatch batch;
  batch.sets = {{0, {0}}, {1, {0, 1}}, {2, {}}};
  const auto report = Evaluate(batch, LabelVector({0, 1, 1}), 0.1, 2);
  std::ostringstream out;
  WriteMetricsCsv(out, report);
  EXPECT_EQ(out.str(),
            "class,n_test,covered,coverage,mean_size,ucr,apss,ucg\n"
            "0,1,1,1,1,,,\n"
            "1,2,1,0.5,1,,,\n"
            "summary,3,2,0.66666666666666663,,0.5,1,0.40000000000000002\n");
}

TEST(ReportCsvTest, SigmaAndRankCsv) {
  std::vector<SigmaEntry> sigma = {{0, 1, 2, 0.5, true}, {1, 0, 0, 0.0, false}};
  std::ostringstream s;
  WriteSigmaCsv(s, sigma);
  EXPECT_EQ(s.str(), "class,numerator,denominator,sigma\n0,1,2,0.5\n1,0,0,nan\n");
  RankFrequency freq{{0.75, 0.25}, 4, false};
  std::ostringstream r;
  WriteRankFrequencyCsv(r, freq);
  EXPECT_EQ(r.str(), "rank,frequency\n1,0.75\n2,0.25\n");
}

TEST(FileErrorsTest, MissingInputIsInputError) {
  EXPECT_THROW(ReadProbabilityMatrix("/nonexistent/p.csv"), InputError);
  EXPECT_THROW(ReadLabels("/nonexistent/l.txt"), InputError);
  EXPECT_THROW(LoadModel("/nonexistent/m.json"), InputError);
  TempDir dir;
  testing::WriteFile(dir / "bad.json", "{ not json");
  EXPECT_THROW(LoadModel(dir / "bad.json"), ParseError);
}

}  // namespace
}  // namespace conformal_sets
