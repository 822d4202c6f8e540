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

#include "conformal_sets/io.h"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "conformal_sets/errors.h"

namespace conformal_sets {
namespace {

using nlohmann::json;

constexpr std::array<char, 4> kBinaryMagic = {'R', 'C', 'M', '1'};

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool ParseDouble(std::string_view text, double& value) {
  text = Trim(text);
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (*begin == '+') ++begin;
  const auto result = std::from_chars(begin, end, value);
  return result.ec == std::errc() && result.ptr == end;
}

template <typename Int>
bool ParseInteger(std::string_view text, Int& value) {
  text = Trim(text);
  if (text.empty()) return false;
  const auto result =
      std::from_chars(text.data(), text.data() + text.size(), value);
  return result.ec == std::errc() && result.ptr == text.data() + text.size();
}

std::vector<std::string_view> Split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void FailParse(std::string_view source, std::size_t line,
                            const std::string& what) {
  throw ParseError(std::string(source) + ":" + std::to_string(line) + ": " +
                   what);
}

std::ifstream OpenInput(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream OpenOutput(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  return out;
}

void PutU64(std::ostream& out, std::uint64_t value) {
  std::array<char, 8> bytes;
  for (int b = 0; b < 8; ++b) {
    bytes[b] = static_cast<char>((value >> (8 * b)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

bool GetU64(std::istream& in, std::uint64_t& value) {
  std::array<unsigned char, 8> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    return false;
  }
  value = 0;
  for (int b = 0; b < 8; ++b) {
    value |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  }
  return true;
}

json Threshold(double q_hat) {
  if (std::isinf(q_hat) && q_hat > 0) return "inf";
  return q_hat;
}

double ThresholdFrom(const json& value, const std::string& where) {
  if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    if (s == "inf" || s == "+inf" || s == "Infinity") return kInfinity;
    throw ParseError(where + ": unexpected threshold string '" + s + "'");
  }
  if (value.is_number()) return value.get<double>();
  throw ParseError(where + ": threshold must be a number or \"inf\"");
}

template <typename T>
T Field(const json& object, const char* key, const std::string& where) {
  if (!object.is_object() || !object.contains(key)) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  try {
    return object.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": field '" + key + "': " + e.what());
  }
}

json MeanStdToJson(const MeanStd& m) {
  return {{"mean", m.mean}, {"stddev", m.stddev}, {"se", m.se}};
}

}  // namespace

std::string FormatDouble(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

ProbabilityMatrix ParseProbabilityCsv(std::istream& in,
                                      std::string_view source) {
  std::vector<double> values;
  std::size_t num_classes = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_number = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view trimmed = Trim(line);
    if (trimmed.empty()) continue;
    const auto fields = Split(trimmed, ',');
    double value = 0.0;
    if (first_content && !ParseDouble(fields.front(), value)) {
      first_content = false;  // Header.
      continue;
    }
    first_content = false;
    if (num_classes == 0) {
      num_classes = fields.size();
    } else if (fields.size() != num_classes) {
      FailParse(source, line_number,
                "expected " + std::to_string(num_classes) + " fields, got " +
                    std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!ParseDouble(fields[j], value)) {
        FailParse(source, line_number,
                  "field " + std::to_string(j + 1) + " ('" +
                      std::string(Trim(fields[j])) + "') is not a number");
      }
      values.push_back(value);
    }
    ++rows;
  }
  if (rows == 0) {
    throw ParseError(std::string(source) + ": no data rows");
  }
  return ProbabilityMatrix::FromValues(std::move(values), rows, num_classes);
}

void WriteProbabilityCsv(std::ostream& out, const ProbabilityMatrix& probs) {
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out << ',';
      out << FormatDouble(row[j]);
    }
    out << '\n';
  }
}

ProbabilityMatrix ParseProbabilityBinary(std::istream& in,
                                         std::string_view source) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kBinaryMagic) {
    throw ParseError(std::string(source) + ": offset 0: missing RCM1 magic");
  }
  std::uint64_t rows = 0;
  std::uint64_t num_classes = 0;
  if (!GetU64(in, rows) || !GetU64(in, num_classes)) {
    throw ParseError(std::string(source) + ": offset 4: truncated header");
  }
  if (num_classes == 0 || rows > (std::uint64_t{1} << 40) / num_classes) {
    throw ParseError(std::string(source) + ": offset 4: implausible shape " +
                     std::to_string(rows) + "x" + std::to_string(num_classes));
  }
  std::vector<double> values(rows * num_classes);
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::uint64_t bits = 0;
    if (!GetU64(in, bits)) {
      throw ParseError(std::string(source) + ": offset " +
                       std::to_string(20 + 8 * k) + ": truncated data (" +
                       std::to_string(k) + " of " +
                       std::to_string(values.size()) + " values)");
    }
    std::memcpy(&values[k], &bits, sizeof(double));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(std::string(source) + ": offset " +
                     std::to_string(20 + 8 * values.size()) +
                     ": trailing bytes after data");
  }
  return ProbabilityMatrix::FromValues(std::move(values), rows, num_classes);
}

void WriteProbabilityBinary(std::ostream& out, const ProbabilityMatrix& probs) {
  out.write(kBinaryMagic.data(), kBinaryMagic.size());
  PutU64(out, probs.rows());
  PutU64(out, probs.num_classes());
  for (double v : probs.values()) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(double));
    PutU64(out, bits);
  }
}

ProbabilityMatrix ReadProbabilityMatrix(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  if (path.extension() == ".rcm") {
    return ParseProbabilityBinary(in, path.string());
  }
  return ParseProbabilityCsv(in, path.string());
}

void WriteProbabilityMatrix(const std::filesystem::path& path,
                            const ProbabilityMatrix& probs) {
  auto out = OpenOutput(path);
  if (path.extension() == ".rcm") {
    WriteProbabilityBinary(out, probs);
  } else {
    WriteProbabilityCsv(out, probs);
  }
}

LabelVector ParseLabels(std::istream& in, std::string_view source) {
  std::vector<Label> labels;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view trimmed = Trim(line);
    if (trimmed.empty()) continue;
    Label value = 0;
    if (!ParseInteger(trimmed, value)) {
      FailParse(source, line_number,
                "'" + std::string(trimmed) + "' is not a non-negative integer");
    }
    labels.push_back(value);
  }
  return LabelVector(std::move(labels));
}

LabelVector ReadLabels(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  return ParseLabels(in, path.string());
}

void WriteLabels(const std::filesystem::path& path, const LabelVector& labels) {
  auto out = OpenOutput(path);
  for (Label y : labels) out << y << '\n';
}

void WritePredictionSets(std::ostream& out, const PredictionBatch& batch) {
  for (const PredictionSet& set : batch.sets) {
    out << set.index << ',' << set.members.size() << ',';
    for (std::size_t j = 0; j < set.members.size(); ++j) {
      if (j > 0) out << ';';
      out << set.members[j];
    }
    out << '\n';
  }
}

PredictionBatch ParsePredictionSets(std::istream& in,
                                    std::string_view source) {
  PredictionBatch batch;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view text = line;
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    if (Trim(text).empty()) continue;
    const auto fields = Split(text, ',');
    if (fields.size() != 3) {
      FailParse(source, line_number,
                "expected 'row_index,set_size,members', got " +
                    std::to_string(fields.size()) + " fields");
    }
    PredictionSet set;
    std::size_t size = 0;
    if (!ParseInteger(fields[0], set.index) || !ParseInteger(fields[1], size)) {
      FailParse(source, line_number, "row index and set size must be integers");
    }
    if (!Trim(fields[2]).empty()) {
      for (std::string_view member : Split(fields[2], ';')) {
        Label y = 0;
        if (!ParseInteger(member, y)) {
          FailParse(source, line_number,
                    "member '" + std::string(Trim(member)) +
                        "' is not a class index");
        }
        if (!set.members.empty() && y <= set.members.back()) {
          FailParse(source, line_number,
                    "members must be strictly increasing");
        }
        set.members.push_back(y);
      }
    }
    if (set.members.size() != size) {
      FailParse(source, line_number,
                "set size " + std::to_string(size) + " but " +
                    std::to_string(set.members.size()) + " members");
    }
    batch.sets.push_back(std::move(set));
  }
  return batch;
}

void WritePredictionSets(const std::filesystem::path& path,
                         const PredictionBatch& batch) {
  auto out = OpenOutput(path);
  WritePredictionSets(out, batch);
}

PredictionBatch ReadPredictionSets(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  return ParsePredictionSets(in, path.string());
}

json ModelToJson(const CalibrationModel& model) {
  json out;
  out["method"] = MethodName(model.method);
  out["alpha"] = model.alpha;
  out["g"] = model.g;
  out["score"] = {{"kind", ScoreKindName(model.score.kind)},
                  {"lambda", model.score.lambda},
                  {"kreg", model.score.k_reg},
                  {"randomize", model.score.randomize},
                  {"seed", model.score.seed}};
  out["K"] = model.num_classes;
  json classes = json::array();
  for (const ClassRecord& r : model.classes) {
    classes.push_back({{"y", r.y},
                       {"q_hat", Threshold(r.q_hat)},
                       {"k_hat", r.k_hat},
                       {"alpha_hat", r.alpha_hat},
                       {"n_y", r.n_y},
                       {"eps_at_khat", r.eps_at_khat},
                       {"degenerate", r.degenerate}});
  }
  out["classes"] = std::move(classes);
  if (model.marginal) {
    out["marginal"] = {{"q_hat", Threshold(model.marginal->q_hat)},
                       {"n", model.marginal->n}};
  }
  return out;
}

CalibrationModel ModelFromJson(const json& in) {
  const std::string where = "model";
  CalibrationModel model;
  const json score = Field<json>(in, "score", where);
  try {
    model.method = ParseMethod(Field<std::string>(in, "method", where));
    model.score.kind =
        ParseScoreKind(Field<std::string>(score, "kind", where + ".score"));
  } catch (const ConfigError& e) {
    throw ParseError(where + ": " + e.what());
  }
  model.alpha = Field<double>(in, "alpha", where);
  model.g = Field<double>(in, "g", where);
  model.score.lambda = Field<double>(score, "lambda", where + ".score");
  model.score.k_reg = Field<std::size_t>(score, "kreg", where + ".score");
  model.score.randomize = Field<bool>(score, "randomize", where + ".score");
  model.score.seed = Field<std::uint64_t>(score, "seed", where + ".score");
  model.num_classes = Field<std::size_t>(in, "K", where);

  const json classes = Field<json>(in, "classes", where);
  if (!classes.is_array()) throw ParseError(where + ": 'classes' must be a list");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string at = where + ".classes[" + std::to_string(i) + "]";
    const json& c = classes[i];
    ClassRecord r;
    r.y = Field<Label>(c, "y", at);
    r.q_hat = ThresholdFrom(Field<json>(c, "q_hat", at), at);
    r.k_hat = Field<std::size_t>(c, "k_hat", at);
    r.alpha_hat = Field<double>(c, "alpha_hat", at);
    r.n_y = Field<std::size_t>(c, "n_y", at);
    r.eps_at_khat = Field<double>(c, "eps_at_khat", at);
    r.degenerate = Field<bool>(c, "degenerate", at);
    if (r.y != i) throw ParseError(at + ": classes must be listed in order");
    model.classes.push_back(r);
  }
  if (in.contains("marginal") && !in.at("marginal").is_null()) {
    const json& m = in.at("marginal");
    MarginalRecord record;
    record.q_hat = ThresholdFrom(Field<json>(m, "q_hat", where + ".marginal"),
                                 where + ".marginal");
    record.n = Field<std::size_t>(m, "n", where + ".marginal");
    model.marginal = record;
  }
  if (model.method == Method::kMarginal && !model.marginal) {
    throw ParseError(where + ": marginal model lacks 'marginal'");
  }
  if (model.method != Method::kMarginal &&
      model.classes.size() != model.num_classes) {
    throw ParseError(where + ": expected " + std::to_string(model.num_classes) +
                     " class records, got " +
                     std::to_string(model.classes.size()));
  }
  return model;
}

void SaveModel(const std::filesystem::path& path,
               const CalibrationModel& model) {
  WriteJson(path, ModelToJson(model));
}

CalibrationModel LoadModel(const std::filesystem::path& path) {
  return ModelFromJson(ReadJson(path));
}

json CoverageReportToJson(const CoverageReport& report) {
  json per_class = json::array();
  for (const ClassCoverage& c : report.per_class) {
    per_class.push_back({{"class", c.y},
                         {"n_test", c.n_test},
                         {"covered", c.covered},
                         {"coverage", c.coverage},
                         {"mean_size", c.mean_size},
                         {"present", c.present}});
  }
  return {{"alpha", report.alpha},
          {"ucr", report.ucr},
          {"apss", report.apss},
          {"ucg", report.ucg},
          {"classes_evaluated", report.classes_evaluated},
          {"per_class", std::move(per_class)}};
}

json RankFrequencyToJson(const RankFrequency& freq) {
  return {{"p", freq.p}, {"pairs", freq.pairs}, {"empty", freq.empty}};
}

json SigmaToJson(const std::vector<SigmaEntry>& sigma) {
  json out = json::array();
  for (const SigmaEntry& s : sigma) {
    out.push_back({{"class", s.y},
                   {"numerator", s.numerator},
                   {"denominator", s.denominator},
                   {"sigma", s.defined ? json(s.sigma) : json(nullptr)},
                   {"defined", s.defined}});
  }
  return out;
}

json Theorem2ToJson(const std::vector<Theorem2Entry>& entries) {
  json out = json::array();
  for (const Theorem2Entry& t : entries) {
    out.push_back({{"class", t.y},
                   {"B", t.b},
                   {"D", t.d},
                   {"p_y", t.p_y},
                   {"alpha_eff", t.alpha_eff},
                   {"eps_at_khat", t.eps_at_khat},
                   {"rhs", t.rhs},
                   {"satisfied", t.satisfied},
                   {"defined", t.defined}});
  }
  return out;
}

json MetricsReportToJson(const MetricsReport& report) {
  json out = CoverageReportToJson(report.coverage);
  if (report.rank_freq) out["rank_freq"] = RankFrequencyToJson(*report.rank_freq);
  if (report.sigma) out["sigma"] = SigmaToJson(*report.sigma);
  if (report.thm2) out["thm2"] = Theorem2ToJson(*report.thm2);
  return out;
}

json CoverageSummaryToJson(const CoverageSummary& summary) {
  json per_class = json::array();
  for (std::size_t y = 0; y < summary.class_coverage.size(); ++y) {
    per_class.push_back({{"class", y},
                         {"coverage", MeanStdToJson(summary.class_coverage[y])},
                         {"mean_size", MeanStdToJson(summary.class_size[y])}});
  }
  return {{"replications", summary.replications},
          {"apss", MeanStdToJson(summary.apss)},
          {"ucr", MeanStdToJson(summary.ucr)},
          {"per_class", std::move(per_class)}};
}

void WriteMetricsCsv(std::ostream& out, const CoverageReport& report) {
  out << "class,n_test,covered,coverage,mean_size,ucr,apss,ucg\n";
  for (const ClassCoverage& c : report.per_class) {
    out << c.y << ',' << c.n_test << ',' << c.covered << ','
        << FormatDouble(c.coverage) << ',' << FormatDouble(c.mean_size)
        << ",,,\n";
  }
  std::size_t n_test = 0;
  std::size_t covered = 0;
  for (const ClassCoverage& c : report.per_class) {
    n_test += c.n_test;
    covered += c.covered;
  }
  const double overall =
      n_test > 0 ? static_cast<double>(covered) / static_cast<double>(n_test)
                 : 0.0;
  out << "summary," << n_test << ',' << covered << ',' << FormatDouble(overall)
      << ",," << FormatDouble(report.ucr) << ',' << FormatDouble(report.apss)
      << ',' << FormatDouble(report.ucg) << '\n';
}

void WriteRankFrequencyCsv(std::ostream& out, const RankFrequency& freq) {
  out << "rank,frequency\n";
  for (std::size_t k = 0; k < freq.p.size(); ++k) {
    out << k + 1 << ',' << FormatDouble(freq.p[k]) << '\n';
  }
}

void WriteSigmaCsv(std::ostream& out, const std::vector<SigmaEntry>& sigma) {
  out << "class,numerator,denominator,sigma\n";
  for (const SigmaEntry& s : sigma) {
    out << s.y << ',' << s.numerator << ',' << s.denominator << ','
        << (s.defined ? FormatDouble(s.sigma) : std::string("nan")) << '\n';
  }
}

void WriteJson(const std::filesystem::path& path, const json& value) {
  WriteTextFile(path, value.dump(2) + "\n");
}

json ReadJson(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": byte " + std::to_string(e.byte) +
                     ": " + e.what());
  }
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  auto out = OpenOutput(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace conformal_sets
