/*
 * Copyright 2026 The Validity Lab Authors.
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

// Command implementations behind the validity_lab executable. Argument parsing
// lives in tools/; everything here takes already-parsed options so it can be
// driven from tests.

#ifndef VALIDITY_LAB_CLI_HPP_
#define VALIDITY_LAB_CLI_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "validity_lab/dataset.hpp"
#include "validity_lab/ecosim.hpp"
#include "validity_lab/ecosystem.hpp"
#include "validity_lab/envelope.hpp"
#include "validity_lab/predictors.hpp"
#include "validity_lab/report.hpp"
#include "validity_lab/scaling.hpp"
#include "validity_lab/scenarios.hpp"
#include "validity_lab/scoring.hpp"
#include "validity_lab/unpredictability.hpp"

namespace validity_lab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

struct Options {
  std::string command;   // simulate|fit|assess|envelope|pareto|scaling|report|suite
  std::string scenario;  // suite only
  std::filesystem::path config;
  std::filesystem::path input;
  std::filesystem::path predictor;
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
  std::string rule = "brier";
};

namespace internal {

// Effective run settings: the config document plus the seed and rule it runs
// under. The hash covers the command, config and rule; the seed is recorded
// next to it.
struct Run {
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  ScoringRule rule = ScoringRule::Brier();
  Provenance provenance;
};

inline Run Prepare(const Options& options) {
  Run run;
  if (!options.config.empty()) {
    run.config = ReadJsonFile(options.config);
    if (!run.config.is_object()) throw ValidationError("config must be a JSON object");
  }
  run.rule = ParseScoringRule(options.rule);
  if (options.seed) {
    run.seed = *options.seed;
  } else if (run.config.contains("seed")) {
    if (!run.config["seed"].is_number_unsigned()) {
      throw ValidationError("config seed must be a non-negative integer");
    }
    run.seed = run.config["seed"].get<std::uint64_t>();
  }
  nlohmann::json hashed = {{"command", options.command},
                           {"config", run.config},
                           {"rule", std::string(ToString(run.rule.kind))}};
  if (options.command == "suite") hashed["scenario"] = options.scenario;
  run.provenance = Provenance::Of(hashed, run.seed);
  return run;
}

template <typename T>
T Get(const nlohmann::json& config, const char* key, T fallback) {
  try {
    return config.contains(key) && !config[key].is_null() ? config[key].get<T>()
                                                          : fallback;
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config field '") + key + "' has the wrong type");
  }
}

inline std::optional<int> HistoryWindow(const nlohmann::json& config) {
  if (!config.contains("history_window") || config["history_window"].is_null()) {
    return std::nullopt;
  }
  const int w = Get<int>(config, "history_window", 0);
  if (w < 0) throw ValidationError("history_window must be >= 0");
  return w;
}

inline DatasetOptions DatasetOptionsFrom(const nlohmann::json& config) {
  DatasetOptions out;
  out.mode = ParseFeatureMode(Get<std::string>(config, "mode", "anticipative"));
  out.history_window = HistoryWindow(config);
  out.horizon = Get<int>(config, "horizon", 0);
  return out;
}

// Binary unless some validity is strictly between 0 and 1, or the config says
// otherwise.
inline EcosystemHistory LoadHistory(const std::filesystem::path& path,
                                    const nlohmann::json& config) {
  if (path.empty()) throw ValidationError("--input is required");
  std::istringstream in(ReadTextFile(path));
  if (config.contains("validity_kind")) {
    const auto kind = ParseValidityKind(Get<std::string>(config, "validity_kind", ""));
    return LoadHistoryCsv(in, kind, path.stem().string());
  }
  auto history = LoadHistoryCsv(in, ValidityKind::kGraded, path.stem().string());
  for (const auto& r : history.records()) {
    if (r.validity != 0.0 && r.validity != 1.0) return history;
  }
  return EcosystemHistory({history.records().begin(), history.records().end()},
                          {path.stem().string(), ValidityKind::kBinary});
}

inline Predictor LoadPredictor(const std::filesystem::path& path) {
  if (path.empty()) throw ValidationError("--predictor is required");
  const auto doc = ReadJsonFile(path);
  return Predictor::FromJson(doc.contains("predictor") ? doc["predictor"] : doc);
}

inline std::vector<std::string> StringList(const nlohmann::json& config,
                                           const char* key) {
  return Get<std::vector<std::string>>(config, key, {});
}

inline std::string WithComment(const Provenance& prov, const std::string& body) {
  return prov.CsvComment() + body;
}

inline std::string SvgNote(const Provenance& prov) {
  return "config_hash=" + prov.config_hash + " seed=" + std::to_string(prov.seed);
}

// ---------------------------------------------------------------------------

inline void Simulate(const Options& options, const Run& run, std::ostream& log) {
  if (!run.config.contains("generator")) {
    throw ValidationError("simulate needs a config with a 'generator' field");
  }
  const auto history = GenerateFromConfig(run.config, run.seed);
  std::ostringstream csv;
  SaveHistoryCsv(history, csv);
  WriteTextFile(options.out / "interactions.csv", WithComment(run.provenance, csv.str()));
  nlohmann::json summary = {
      {"command", "simulate"},
      {"generator", run.config["generator"]},
      {"records", history.size()},
      {"timesteps", history.Timesteps().size()},
      {"validity_kind", std::string(ToString(history.metadata().validity_kind))},
      {"expected_validity", history.empty() ? 0.0 : ExpectedValidity(history)}};
  run.provenance.Stamp(summary);
  WriteJsonFile(options.out / "run.json", summary);
  log << "simulate: " << history.size() << " records -> "
      << (options.out / "interactions.csv").string() << '\n';
}

inline void Fit(const Options& options, const Run& run, std::ostream& log) {
  const auto history = LoadHistory(options.input, run.config);
  const auto data = MakeDataset(history, DatasetOptionsFrom(run.config));
  const auto kind = ParsePredictorKind(Get<std::string>(run.config, "predictor", "logistic"));
  const auto features = StringList(run.config, "features");
  Predictor predictor;
  switch (kind) {
    case PredictorKind::kConstant: predictor = FitConstant(data); break;
    case PredictorKind::kLogistic: predictor = FitLogistic(data, features); break;
    case PredictorKind::kTree:
      predictor = FitTree(data, Get<int>(run.config, "leaf_budget", 4), features);
      break;
    case PredictorKind::kSelfEstimation: predictor = SelfEstimationAdapter(); break;
    case PredictorKind::kPreRecorded:
      throw ValidationError("pre_recorded predictors are not fitted");
  }
  nlohmann::json doc = {{"predictor", predictor.ToJson()},
                        {"train_records", data.size()},
                        {"train_score", MeanScore(run.rule, predictor, data)},
                        {"rule", std::string(ToString(run.rule.kind))}};
  run.provenance.Stamp(doc);
  WriteJsonFile(options.out / "predictor.json", doc);
  std::ostringstream calibration;
  WriteCalibrationCsv(CalibrationTable(predictor, data, 10), calibration);
  WriteTextFile(options.out / "calibration.csv",
                WithComment(run.provenance, calibration.str()));
  log << "fit: " << ToString(kind) << " on " << data.size() << " records, train "
      << ToString(run.rule.kind) << ' ' << FormatReal(doc["train_score"].get<double>())
      << '\n';
}

inline FamilySpec FamilyFrom(const nlohmann::json& config) {
  FamilySpec family;
  family.kind = ParsePredictorKind(Get<std::string>(config, "family", "logistic"));
  if (family.kind == PredictorKind::kSelfEstimation ||
      family.kind == PredictorKind::kPreRecorded) {
    throw ValidationError("family must be constant, logistic or tree");
  }
  family.budget = Get<int>(config, "budget", family.kind == PredictorKind::kTree ? 4 : 1);
  if (family.budget < 0) throw ValidationError("budget must be >= 0");
  family.feature_pool = StringList(config, "features");
  family.candidate_subsets =
      Get<std::vector<std::vector<std::string>>>(config, "candidates", {});
  return family;
}

inline void Assess(const Options& options, const Run& run, std::ostream& log) {
  const auto history = LoadHistory(options.input, run.config);
  const auto family = FamilyFrom(run.config);
  QProtocol protocol;
  protocol.seed = run.seed;
  protocol.rule = run.rule;
  const auto dataset_options = DatasetOptionsFrom(run.config);
  protocol.mode = dataset_options.mode;
  protocol.history_window = dataset_options.history_window;
  protocol.horizon = dataset_options.horizon;
  if (run.config.contains("split")) {
    const auto& s = run.config["split"];
    protocol.split = {Get<double>(s, "train", 0.5), Get<double>(s, "validation", 0.2),
                      Get<double>(s, "test", 0.3)};
  }
  const auto report = EstimateQ(history, family, protocol);

  auto doc = QReportToJson(report);
  doc["rule"] = std::string(ToString(run.rule.kind));
  doc["expected_validity"] = ExpectedValidity(history);
  std::set<std::string> systems;
  for (const auto& r : history.records()) systems.insert(r.system_id);
  doc["system_ids"] = std::vector<std::string>(systems.begin(), systems.end());
  if (run.config.contains("label")) doc["label"] = run.config["label"];
  if (run.config.contains("group_by")) {
    const auto group_by = ParseGroupBy(Get<std::string>(run.config, "group_by", "all"));
    const auto data = MakeDataset(history, dataset_options);
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : AggregatePredictions(report.best_predictor, data, group_by)) {
      groups.push_back({{"key", g.key}, {"predicted_mean", g.predicted_mean},
                        {"observed_mean", g.observed_mean}, {"count", g.count}});
    }
    doc["groups"] = std::move(groups);
  }
  run.provenance.Stamp(doc);
  WriteJsonFile(options.out / "q_report.json", doc);
  std::ostringstream candidates;
  WriteCandidateCsv(report, candidates);
  WriteTextFile(options.out / "candidates.csv",
                WithComment(run.provenance, candidates.str()));
  nlohmann::json best = {{"predictor", report.best_predictor.ToJson()}};
  run.provenance.Stamp(best);
  WriteJsonFile(options.out / "best_predictor.json", best);
  log << "assess: Q = " << FormatReal(report.q_value) << " (" << report.best_description
      << ", " << report.candidates.size() << " candidates)\n";
}

inline void Envelope(const Options& options, const Run& run, std::ostream& log) {
  const auto history = LoadHistory(options.input, run.config);
  const auto predictor = LoadPredictor(options.predictor);
  const auto data = MakeDataset(history, DatasetOptionsFrom(run.config));
  EnvelopeSpec spec;
  spec.omega = Get<double>(run.config, "omega", 0.0);
  spec.sigma = Get<double>(run.config, "sigma", std::numeric_limits<double>::infinity());
  if (run.config.contains("tau") && !run.config["tau"].is_null()) {
    spec.tau = Get<double>(run.config, "tau", 0.0);
  }
  const auto report = ComputeEnvelope(predictor, data, spec, run.rule);
  const auto curve = RejectionCurve(predictor, data);
  auto doc = EnvelopeToJson(report);
  doc["omega"] = spec.omega;
  doc["sigma"] = std::isfinite(spec.sigma) ? nlohmann::json(spec.sigma) : nlohmann::json(nullptr);
  doc["aurc"] = Aurc(curve);
  doc["rule"] = std::string(ToString(run.rule.kind));
  run.provenance.Stamp(doc);
  WriteJsonFile(options.out / "envelope.json", doc);
  std::ostringstream csv;
  WriteCurveCsv(curve, csv);
  WriteTextFile(options.out / "rejection_curve.csv", WithComment(run.provenance, csv.str()));
  PlotSeries series{"accepted validity", {}};
  for (const auto& p : curve) series.points.emplace_back(p.rejection_rate, p.accepted_validity);
  WriteTextFile(options.out / "rejection_curve.svg",
                LinePlotSvg({series}, "Accuracy-rejection curve", "rejection rate",
                            "accepted validity", SvgNote(run.provenance)));
  log << "envelope: tau " << FormatReal(report.tau_used) << ", coverage "
      << FormatReal(report.coverage) << (report.satisfied ? ", satisfied" : ", not satisfied")
      << '\n';
}

inline ParetoPoint PointFromReport(const std::filesystem::path& path) {
  const auto doc = ReadJsonFile(path);
  try {
    ParetoPoint p;
    if (doc.contains("label")) {
      p.system_id = doc["label"].get<std::string>();
    } else {
      for (const auto& id : doc.at("system_ids")) {
        if (!p.system_id.empty()) p.system_id += '+';
        p.system_id += id.get<std::string>();
      }
    }
    p.v = doc.at("expected_validity").get<double>();
    p.q = doc.at("q_value").get<double>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": not a q_report: " + e.what());
  }
}

inline void Pareto(const Options& options, const Run& run, std::ostream& log) {
  std::vector<ParetoPoint> points;
  if (run.config.contains("points")) {
    for (const auto& p : run.config["points"]) {
      points.push_back({Get<std::string>(p, "system_id", ""), Get<double>(p, "v", 0.0),
                        Get<double>(p, "q", 0.0), false});
    }
  }
  const auto base = options.config.empty() ? std::filesystem::path(".")
                                           : options.config.parent_path();
  for (const auto& report : StringList(run.config, "reports")) {
    std::filesystem::path path(report);
    points.push_back(PointFromReport(path.is_absolute() ? path : base / path));
  }
  if (points.empty()) throw ValidationError("pareto needs 'points' or 'reports'");
  const auto frontier = ParetoFrontier(points);
  std::ostringstream csv;
  WriteParetoCsv(points, csv);
  WriteTextFile(options.out / "pareto.csv", WithComment(run.provenance, csv.str()));
  nlohmann::json doc = {{"frontier", nlohmann::json::array()}};
  for (const auto& p : frontier) doc["frontier"].push_back(p.system_id);
  run.provenance.Stamp(doc);
  WriteJsonFile(options.out / "pareto.json", doc);
  std::vector<ScatterMark> marks;
  for (const auto& p : points) marks.push_back({p.system_id, p.q, p.v, !p.dominated});
  WriteTextFile(options.out / "pareto.svg",
                ScatterPlotSvg(marks, "Validity vs unpredictability", "Q",
                               "expected validity", SvgNote(run.provenance)));
  log << "pareto: " << frontier.size() << " of " << points.size()
      << " points on the frontier\n";
}

inline void Scaling(const Options& options, const Run& run, std::ostream& log) {
  if (options.input.empty()) throw ValidationError("--input is required");
  std::istringstream in(ReadTextFile(options.input));
  const auto points = LoadScalePointsCsv(in);
  const auto model = FitPowerLaw(points);
  nlohmann::json doc = {{"model", ScalingModelToJson(model)},
                        {"predictions", nlohmann::json::array()}};
  for (double x : Get<std::vector<double>>(run.config, "query_x", {})) {
    const auto h = PredictHypothetical(model, x);
    doc["predictions"].push_back({{"x", x}, {"estimate", h.estimate},
                                  {"band_low", h.band_low}, {"band_high", h.band_high},
                                  {"extrapolated", h.extrapolated}});
  }
  run.provenance.Stamp(doc);
  WriteJsonFile(options.out / "scaling_model.json", doc);
  WriteTextFile(options.out / "scaling_fit.svg",
                ScalingFitSvg(model, points, SvgNote(run.provenance)));
  log << "scaling: exponent " << FormatReal(model.exponent) << ", scale "
      << FormatReal(model.scale) << '\n';
}

inline std::string FileDigest(const std::string& bytes) {
  // Same FNV-1a as the config hash, over raw bytes.
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

// Runs every scenario (or the ones listed under "scenarios") into
// out/<name>/ and writes an index of the produced files.
inline void Report(const Options& options, const Run& run, std::ostream& log) {
  auto names = StringList(run.config, "scenarios");
  if (names.empty()) names = ScenarioNames();
  nlohmann::json index = {{"scenarios", nlohmann::json::object()},
                          {"files", nlohmann::json::array()}};
  for (const auto& name : names) {
    index["scenarios"][name] = WriteScenario(name, options.out / name, run.seed);
  }
  std::vector<std::filesystem::path> files;
  for (const auto& name : names) {
    for (const auto& entry : std::filesystem::directory_iterator(options.out / name)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const auto bytes = ReadTextFile(file);
    index["files"].push_back(
        {{"path", std::filesystem::relative(file, options.out).generic_string()},
         {"bytes", bytes.size()},
         {"fnv1a", FileDigest(bytes)}});
  }
  run.provenance.Stamp(index);
  WriteJsonFile(options.out / "index.json", index);
  log << "report: " << names.size() << " scenarios, " << files.size() << " files -> "
      << (options.out / "index.json").string() << '\n';
}

inline void Suite(const Options& options, const Run& run, std::ostream& log) {
  const auto& names = ScenarioNames();
  if (std::find(names.begin(), names.end(), options.scenario) == names.end()) {
    throw ValidationError("unknown scenario '" + options.scenario + "'");
  }
  WriteScenario(options.scenario, options.out, run.seed);
  log << "suite " << options.scenario << " -> " << options.out.string() << '\n';
}

}  // namespace internal

// Runs one command. Errors are reported on `err` and mapped to exit codes.
inline int Run(const Options& options, std::ostream& log, std::ostream& err) {
  try {
    const auto run = internal::Prepare(options);
    if (options.command == "simulate") {
      internal::Simulate(options, run, log);
    } else if (options.command == "fit") {
      internal::Fit(options, run, log);
    } else if (options.command == "assess") {
      internal::Assess(options, run, log);
    } else if (options.command == "envelope") {
      internal::Envelope(options, run, log);
    } else if (options.command == "pareto") {
      internal::Pareto(options, run, log);
    } else if (options.command == "scaling") {
      internal::Scaling(options, run, log);
    } else if (options.command == "report") {
      internal::Report(options, run, log);
    } else if (options.command == "suite") {
      internal::Suite(options, run, log);
    } else {
      throw ValidationError("unknown command '" + options.command + "'");
    }
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.kind() == ErrorKind::kIo ? kExitIo : kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace validity_lab::cli

#endif  // VALIDITY_LAB_CLI_HPP_
