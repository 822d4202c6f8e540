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

#include "conformal_sets/cli.h"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "conformal_sets/calibration.h"
#include "conformal_sets/core.h"
#include "conformal_sets/errors.h"
#include "conformal_sets/io.h"
#include "conformal_sets/metrics.h"
#include "conformal_sets/prediction.h"
#include "conformal_sets/scores.h"
#include "conformal_sets/synthgen.h"

namespace conformal_sets {
namespace {

namespace fs = std::filesystem;

struct ScoreFlags {
  std::string kind = "aps";
  double lambda = 0.0;
  std::size_t k_reg = 1;
  bool no_randomize = false;
  std::uint64_t seed = 0;

  // `seed_flag` differs where the subcommand already has a world --seed.
  void Register(CLI::App* cmd, bool seed_required,
                const std::string& seed_flag = "--seed") {
    cmd->add_option("--score", kind, "Nonconformity score")
        ->check(CLI::IsMember({"aps", "raps", "hps"}, CLI::ignore_case));
    cmd->add_option("--lambda", lambda, "RAPS regularization weight");
    cmd->add_option("--kreg", k_reg, "RAPS regularization rank");
    cmd->add_flag("--no-randomize", no_randomize,
                  "Use u = 1 instead of random tie-breaking");
    auto* opt = cmd->add_option(seed_flag, seed, "Seed for tie-breaking draws");
    if (seed_required) opt->required();
  }

  ScoreConfig ToConfig() const {
    ScoreConfig cfg;
    cfg.kind = ParseScoreKind(kind);
    cfg.lambda = lambda;
    cfg.k_reg = k_reg;
    cfg.randomize = !no_randomize;
    cfg.seed = seed;
    return cfg;
  }
};

struct CalibrateArgs {
  std::string probs;
  std::string labels;
  double alpha = 0.1;
  double g = 0.0;
  std::string method;
  int option = 2;
  std::vector<std::size_t> k_hat;
  std::vector<double> alpha_hat;
  ScoreFlags score;
  std::string out;
};

struct PredictArgs {
  std::string model;
  std::string probs;
  std::string out;
};

struct EvaluateArgs {
  std::string sets;
  std::string labels;
  double alpha = 0.1;
  std::size_t classes = 0;
  std::string out;
  std::string csv;
  std::string probs;
};

struct DiagnoseArgs {
  std::string rc3p;
  std::string ccp;
  std::string probs;
  std::string labels;
  std::string out;
  std::string sigma_csv;
  std::string rank_csv;
};

struct WorldFlags {
  std::size_t classes = 0;
  std::string decay = "exp";
  double rho = 1.0;
  std::size_t n_train = 0;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
  double temperature = 3.0;
  double noise = 0.0;
  double spread = 0.0;
  std::uint64_t seed = 0;

  void Register(CLI::App* cmd, bool imbalance_required) {
    cmd->add_option("--classes", classes, "Number of classes K")->required();
    auto* decay_opt =
        cmd->add_option("--decay", decay, "Training imbalance profile")
            ->check(CLI::IsMember({"exp", "poly", "maj"}, CLI::ignore_case));
    auto* rho_opt = cmd->add_option("--rho", rho, "Imbalance ratio in (0, 1]");
    auto* train_opt =
        cmd->add_option("--n-train", n_train, "Training budget n_tr");
    if (imbalance_required) {
      decay_opt->required();
      rho_opt->required();
      train_opt->required();
    }
    cmd->add_option("--n-cal", n_cal, "Calibration examples per class")
        ->required();
    cmd->add_option("--n-test", n_test, "Test examples per class")->required();
    cmd->add_option("--temperature", temperature, "True-class logit boost");
    cmd->add_option("--noise", noise, "Mixing weight towards uniform rows");
    cmd->add_option("--spread", spread,
                    "Log-normal spread of per-example confidence");
    cmd->add_option("--seed", seed, "World seed")->required();
  }

  // World whose per-class sharpness follows the training profile (all 1
  // when n_train is 0).
  SyntheticWorld ToWorld(std::vector<std::size_t>* train_counts) const {
    SyntheticWorld world =
        SyntheticWorld::Balanced(classes, temperature, noise, seed);
    world.spread = spread;
    if (n_train > 0) {
      DecaySpec spec{ParseDecayKind(decay), rho, n_train, classes};
      std::vector<std::size_t> counts = DecayCounts(spec);
      world.class_sharpness = SharpnessFromCounts(counts);
      if (train_counts != nullptr) *train_counts = std::move(counts);
    }
    world.Validate();
    return world;
  }
};

struct SynthArgs {
  WorldFlags world;
  std::string out_dir;
  std::string format = "csv";
};

struct VerifyArgs {
  WorldFlags world;
  std::size_t replications = 1;
  double alpha = 0.1;
  double g = 0.0;
  std::string method = "ccp";
  int option = 2;
  ScoreFlags score;
  std::string out;
};

RankOption ToOption(int option) {
  if (option == 1) return RankOption::kOptionI;
  if (option == 2) return RankOption::kOptionII;
  throw ConfigError("--option must be 1 or 2");
}

int Calibrate(const CalibrateArgs& args, std::ostream& out) {
  const ProbabilityMatrix probs = ReadProbabilityMatrix(args.probs);
  const LabelVector labels = ReadLabels(args.labels);
  CheckPaired(probs, labels);
  const Method method = ParseMethod(args.method);
  const RankOption option = ToOption(args.option);

  std::optional<RankOverrides> overrides;
  if (!args.k_hat.empty() || !args.alpha_hat.empty()) {
    if (method != Method::kRc3p) {
      throw ConfigError("--khat/--alpha-hat only apply to --method rc3p");
    }
    overrides.emplace();
    for (std::size_t k : args.k_hat) overrides->k_hat.emplace_back(k);
    for (double a : args.alpha_hat) overrides->alpha_hat.emplace_back(a);
  }
  const CalibrationModel model =
      conformal_sets::Calibrate(method, probs, labels, args.score.ToConfig(),
                                args.alpha, args.g, option,
                                overrides ? &*overrides : nullptr);
  SaveModel(args.out, model);
  out << "calibrated " << MethodName(model.method) << " model (K="
      << model.num_classes << ", n=" << labels.size() << ") -> " << args.out
      << '\n';
  return kExitOk;
}

int Predict(const PredictArgs& args, std::ostream& out) {
  const CalibrationModel model = LoadModel(args.model);
  const ProbabilityMatrix probs = ReadProbabilityMatrix(args.probs);
  const PredictionBatch batch = conformal_sets::Predict(model, probs);
  WritePredictionSets(fs::path(args.out), batch);
  out << "wrote " << batch.sets.size() << " prediction sets (model "
      << batch.model_fingerprint << ") -> " << args.out << '\n';
  return kExitOk;
}

int Evaluate(const EvaluateArgs& args, std::ostream& out) {
  const PredictionBatch batch = ReadPredictionSets(args.sets);
  const LabelVector labels = ReadLabels(args.labels);
  MetricsReport report;
  report.coverage = conformal_sets::Evaluate(batch, labels, args.alpha,
                                             args.classes);
  if (!args.probs.empty()) {
    const ProbabilityMatrix probs = ReadProbabilityMatrix(args.probs);
    if (probs.num_classes() != args.classes) {
      throw InputError("--classes is " + std::to_string(args.classes) +
                       " but the probability matrix has K=" +
                       std::to_string(probs.num_classes()));
    }
    report.rank_freq = ComputeRankFrequency(batch, probs);
  }
  WriteJson(args.out, MetricsReportToJson(report));
  if (!args.csv.empty()) {
    std::ostringstream csv;
    WriteMetricsCsv(csv, report.coverage);
    WriteTextFile(args.csv, csv.str());
  }
  out << "UCR=" << FormatDouble(report.coverage.ucr)
      << " APSS=" << FormatDouble(report.coverage.apss)
      << " UCG=" << FormatDouble(report.coverage.ucg) << '\n';
  return kExitOk;
}

int Diagnose(const DiagnoseArgs& args, std::ostream& out) {
  const CalibrationModel rc3p = LoadModel(args.rc3p);
  const CalibrationModel ccp = LoadModel(args.ccp);
  const ProbabilityMatrix probs = ReadProbabilityMatrix(args.probs);
  const LabelVector labels = ReadLabels(args.labels);

  const auto sigma = SigmaCondition(rc3p, ccp, probs, labels);
  nlohmann::json report;
  report["sigma"] = SigmaToJson(sigma);
  if (rc3p.score.kind != ScoreKind::kHps) {
    report["thm2"] = Theorem2ToJson(Theorem2Check(rc3p, ccp, probs, labels));
  } else {
    report["thm2"] = nullptr;
  }
  const RankFrequency rc3p_freq =
      ComputeRankFrequency(conformal_sets::Predict(rc3p, probs), probs);
  const RankFrequency ccp_freq =
      ComputeRankFrequency(conformal_sets::Predict(ccp, probs), probs);
  report["rank_freq"] = {{"rc3p", RankFrequencyToJson(rc3p_freq)},
                         {"ccp", RankFrequencyToJson(ccp_freq)}};
  WriteJson(args.out, report);

  if (!args.sigma_csv.empty()) {
    std::ostringstream csv;
    WriteSigmaCsv(csv, sigma);
    WriteTextFile(args.sigma_csv, csv.str());
  }
  if (!args.rank_csv.empty()) {
    std::ostringstream csv;
    csv << "rank,rc3p,ccp\n";
    for (std::size_t k = 0; k < rc3p_freq.p.size(); ++k) {
      csv << k + 1 << ',' << FormatDouble(rc3p_freq.p[k]) << ','
          << FormatDouble(ccp_freq.p[k]) << '\n';
    }
    WriteTextFile(args.rank_csv, csv.str());
  }

  std::size_t above_one = 0;
  for (const SigmaEntry& s : sigma) {
    if (s.defined && s.sigma > 1.0) ++above_one;
  }
  out << "classes with sigma > 1: " << above_one << " of " << sigma.size()
      << '\n';
  return kExitOk;
}

int Synth(const SynthArgs& args, std::ostream& out) {
  std::vector<std::size_t> train_counts;
  const SyntheticWorld world = args.world.ToWorld(&train_counts);
  const std::vector<std::size_t> cal_counts(world.num_classes,
                                            args.world.n_cal);
  const std::vector<std::size_t> test_counts(world.num_classes,
                                             args.world.n_test);
  const SyntheticSample cal = SampleWorld(world, cal_counts, 1);
  const SyntheticSample test = SampleWorld(world, test_counts, 2);

  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  const std::string ext = args.format == "rcm" ? ".rcm" : ".csv";
  WriteProbabilityMatrix(dir / ("cal_probs" + ext), cal.probs);
  WriteLabels(dir / "cal_labels.txt", cal.labels);
  WriteProbabilityMatrix(dir / ("test_probs" + ext), test.probs);
  WriteLabels(dir / "test_labels.txt", test.labels);

  nlohmann::json meta = {{"K", world.num_classes},
                         {"temperature", world.temperature},
                         {"noise", world.noise},
                         {"spread", world.spread},
                         {"seed", world.seed},
                         {"class_sharpness", world.class_sharpness},
                         {"n_cal_per_class", args.world.n_cal},
                         {"n_test_per_class", args.world.n_test}};
  if (!train_counts.empty()) {
    meta["decay"] = {{"kind", args.world.decay},
                     {"rho", args.world.rho},
                     {"n_train", args.world.n_train},
                     {"counts", train_counts}};
  }
  WriteJson(dir / "world.json", meta);
  out << "wrote synthetic calibration (" << cal.labels.size()
      << " rows) and test (" << test.labels.size() << " rows) data to "
      << dir.string() << '\n';
  return kExitOk;
}

int VerifyCoverage(const VerifyArgs& args, std::ostream& out) {
  const SyntheticWorld world = args.world.ToWorld(nullptr);
  const std::vector<std::size_t> cal_counts(world.num_classes,
                                            args.world.n_cal);
  const std::vector<std::size_t> test_counts(world.num_classes,
                                             args.world.n_test);
  OracleSettings settings;
  settings.method = ParseMethod(args.method);
  settings.score = args.score.ToConfig();
  settings.alpha = args.alpha;
  settings.g = args.g;
  settings.option = ToOption(args.option);
  settings.replications = args.replications;
  const CoverageSummary summary =
      OracleCoverage(world, cal_counts, test_counts, settings);

  nlohmann::json report = CoverageSummaryToJson(summary);
  report["method"] = args.method;
  report["alpha"] = args.alpha;
  report["g"] = args.g;
  report["score"] = ScoreKindName(settings.score.kind);
  WriteJson(args.out, report);

  double worst = 1.0;
  for (const MeanStd& c : summary.class_coverage) worst = std::min(worst, c.mean);
  out << "replications=" << summary.replications
      << " min class coverage=" << FormatDouble(worst)
      << " APSS=" << FormatDouble(summary.apss.mean) << '\n';
  return kExitOk;
}

const char* ErrorKind(const Error& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const InputError*>(&e)) return "input";
  if (dynamic_cast<const UnsupportedError*>(&e)) return "unsupported";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  return "error";
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Class-conditional conformal prediction sets", "conformal-sets"};
  app.require_subcommand(1);

  CalibrateArgs calibrate;
  auto* calibrate_cmd =
      app.add_subcommand("calibrate", "Calibrate a model on labelled data");
  calibrate_cmd->add_option("--probs", calibrate.probs, "Probability matrix")
      ->required();
  calibrate_cmd->add_option("--labels", calibrate.labels, "Label file")
      ->required();
  calibrate_cmd->add_option("--alpha", calibrate.alpha, "Target miscoverage")
      ->required();
  calibrate_cmd->add_option("--g", calibrate.g, "Coverage inflation g");
  calibrate_cmd->add_option("--method", calibrate.method, "Calibrator")
      ->required()
      ->check(CLI::IsMember({"marginal", "ccp", "rc3p"}, CLI::ignore_case));
  calibrate_cmd->add_option("--option", calibrate.option,
                            "RC3P rank configuration (1 or 2)")
      ->check(CLI::IsMember({1, 2}));
  calibrate_cmd->add_option("--khat", calibrate.k_hat,
                            "Option I ranks, one per class")
      ->delimiter(',');
  calibrate_cmd->add_option("--alpha-hat", calibrate.alpha_hat,
                            "Option I nominal levels, one per class")
      ->delimiter(',');
  calibrate.score.Register(calibrate_cmd, /*seed_required=*/true);
  calibrate_cmd->add_option("--out", calibrate.out, "Model JSON")->required();

  PredictArgs predict;
  auto* predict_cmd =
      app.add_subcommand("predict", "Build prediction sets from a model");
  predict_cmd->add_option("--model", predict.model, "Model JSON")->required();
  predict_cmd->add_option("--probs", predict.probs, "Probability matrix")
      ->required();
  predict_cmd->add_option("--out", predict.out, "Prediction-set CSV")
      ->required();

  EvaluateArgs evaluate;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Coverage and set-size metrics");
  evaluate_cmd->add_option("--sets", evaluate.sets, "Prediction-set CSV")
      ->required();
  evaluate_cmd->add_option("--labels", evaluate.labels, "Label file")
      ->required();
  evaluate_cmd->add_option("--alpha", evaluate.alpha, "Target miscoverage")
      ->required();
  evaluate_cmd->add_option("--classes", evaluate.classes, "Number of classes")
      ->required();
  evaluate_cmd->add_option("--out", evaluate.out, "Metrics JSON")->required();
  evaluate_cmd->add_option("--csv", evaluate.csv, "Optional metrics CSV");
  evaluate_cmd->add_option("--probs", evaluate.probs,
                           "Optional matrix for the rank-frequency histogram");

  DiagnoseArgs diagnose;
  auto* diagnose_cmd = app.add_subcommand(
      "diagnose", "Condition numbers, efficiency check and rank frequency");
  diagnose_cmd->add_option("--rc3p", diagnose.rc3p, "RC3P model JSON")
      ->required();
  diagnose_cmd->add_option("--ccp", diagnose.ccp, "CCP model JSON")
      ->required();
  diagnose_cmd->add_option("--probs", diagnose.probs, "Probability matrix")
      ->required();
  diagnose_cmd->add_option("--labels", diagnose.labels, "Label file")
      ->required();
  diagnose_cmd->add_option("--out", diagnose.out, "Diagnostics JSON")
      ->required();
  diagnose_cmd->add_option("--sigma-csv", diagnose.sigma_csv,
                           "Optional per-class condition number CSV");
  diagnose_cmd->add_option("--rank-csv", diagnose.rank_csv,
                           "Optional rank-frequency CSV");

  SynthArgs synth;
  auto* synth_cmd =
      app.add_subcommand("synth", "Generate synthetic classifier outputs");
  synth.world.Register(synth_cmd, /*imbalance_required=*/true);
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")
      ->required();
  synth_cmd->add_option("--format", synth.format, "Matrix format")
      ->check(CLI::IsMember({"csv", "rcm"}));

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand(
      "verify-coverage", "Monte-Carlo coverage check on synthetic data");
  verify.world.Register(verify_cmd, /*imbalance_required=*/false);
  verify_cmd->add_option("--replications", verify.replications,
                         "Monte-Carlo replications")
      ->required();
  verify_cmd->add_option("--alpha", verify.alpha, "Target miscoverage");
  verify_cmd->add_option("--g", verify.g, "Coverage inflation g");
  verify_cmd->add_option("--method", verify.method, "Calibrator")
      ->check(CLI::IsMember({"marginal", "ccp", "rc3p"}, CLI::ignore_case));
  verify_cmd->add_option("--option", verify.option, "RC3P option (1 or 2)")
      ->check(CLI::IsMember({1, 2}));
  verify.score.Register(verify_cmd, /*seed_required=*/false, "--score-seed");
  verify_cmd->add_option("--out", verify.out, "Report JSON")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*calibrate_cmd) return Calibrate(calibrate, out);
    if (*predict_cmd) return Predict(predict, out);
    if (*evaluate_cmd) return Evaluate(evaluate, out);
    if (*diagnose_cmd) return Diagnose(diagnose, out);
    if (*synth_cmd) return Synth(synth, out);
    if (*verify_cmd) return VerifyCoverage(verify, out);
  } catch (const Error& e) {
    err << "error: " << ErrorKind(e) << ": " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: io: " << e.what() << '\n';
    return kExitDataError;
  }
  err << "usage error: no subcommand\n";
  return kExitUsage;
}

}  // namespace conformal_sets
