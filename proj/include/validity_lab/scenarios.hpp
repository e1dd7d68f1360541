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

// Canned pipelines (generator -> fits -> analytics -> artifacts) with fixed
// parameters. The Run* functions return the numbers; WriteScenario() also
// emits the CSV/JSON/SVG artifacts.

#ifndef VALIDITY_LAB_SCENARIOS_HPP_
#define VALIDITY_LAB_SCENARIOS_HPP_

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "validity_lab/dataset.hpp"
#include "validity_lab/ecosim.hpp"
#include "validity_lab/envelope.hpp"
#include "validity_lab/predictors.hpp"
#include "validity_lab/report.hpp"
#include "validity_lab/scaling.hpp"
#include "validity_lab/scoring.hpp"
#include "validity_lab/unpredictability.hpp"

namespace validity_lab {

inline const std::vector<std::string>& ScenarioNames() {
  static const std::vector<std::string> names = {"fig1", "coin", "ladder",
                                                 "tradeoff", "scaling"};
  return names;
}

// ---------------------------------------------------------------------------
// fig1: six grid systems, Q under one- and two-feature logistic families.

inline constexpr int kFig1EpisodesPerCell = 625;

struct Fig1Row {
  std::string system_id;
  double v = 0.0;
  double q_f1_wind = 0.0;  // logistic on windingness only
  double q_f1_fog = 0.0;   // logistic on fogginess only
  double q_f1_best = 0.0;  // validation-selected one-feature logistic
  double q_f2 = 0.0;       // validation-selected logistic on <= 2 features
};

struct Fig1Result {
  std::vector<Fig1Row> rows;
  std::vector<ParetoPoint> points;  // (v, q_f2) with dominance marked
  std::vector<ParetoPoint> frontier;
};

inline Fig1Result RunFig1(std::uint64_t seed,
                          int episodes_per_cell = kFig1EpisodesPerCell) {
  Fig1Result result;
  const std::vector<std::string> pool = {"i_windingness", "i_fogginess"};
  for (std::size_t k = 0; k < GridSystems().size(); ++k) {
    const auto& system = GridSystems()[k];
    const auto history = GridEcosystem({system, episodes_per_cell, DeriveSeed(seed, k)});
    FamilySpec f2;
    f2.kind = PredictorKind::kLogistic;
    f2.budget = 2;
    f2.feature_pool = pool;
    QProtocol protocol;
    protocol.seed = seed;
    // Candidates {}, {fog}, {wind}, {fog, wind} share one split, so the
    // one-feature families are read off the same report.
    const auto report = EstimateQ(history, f2, protocol);
    Fig1Row row;
    row.system_id = system;
    row.v = ExpectedValidity(history);
    row.q_f2 = report.q_value;
    const CandidateScore* best_f1 = nullptr;
    for (const auto& c : report.candidates) {
      if (c.description == "logistic{i_windingness}") row.q_f1_wind = c.test_score;
      if (c.description == "logistic{i_fogginess}") row.q_f1_fog = c.test_score;
      if (c.description.find(',') == std::string::npos &&
          (!best_f1 || c.validation_score < best_f1->validation_score)) {
        best_f1 = &c;
      }
    }
    row.q_f1_best = best_f1->test_score;
    result.rows.push_back(row);
    result.points.push_back({system, row.v, row.q_f2, false});
  }
  result.frontier = ParetoFrontier(result.points);
  return result;
}

// ---------------------------------------------------------------------------
// coin: aleatoric floor of a 0.7-biased coin.

struct CoinResult {
  double q_brier_constant = 0.0;
  double q_brier_logistic = 0.0;  // logistic family over the dummy feature
  double best_constant_log_loss = 0.0;
  double empirical_rate = 0.0;
};

inline FamilySpec Family(PredictorKind kind, int budget = 0) {
  FamilySpec family;
  family.kind = kind;
  family.budget = budget;
  return family;
}

inline CoinResult RunCoin(std::uint64_t seed, double q = 0.7,
                          std::int64_t n = 100000) {
  const auto history = CoinEcosystem(q, n, seed);
  QProtocol protocol;
  protocol.seed = seed;
  CoinResult result;
  result.empirical_rate = ExpectedValidity(history);
  result.q_brier_constant =
      EstimateQ(history, Family(PredictorKind::kConstant), protocol).q_value;
  result.q_brier_logistic =
      EstimateQ(history, Family(PredictorKind::kLogistic, 1), protocol).q_value;
  protocol.rule = ScoringRule::LogLoss();
  result.best_constant_log_loss =
      EstimateQ(history, Family(PredictorKind::kConstant), protocol).q_value;
  return result;
}

// ---------------------------------------------------------------------------
// ladder: majority class > global accuracy > per-agent accuracy > feature
// model, on held-out tasks.

struct LadderResult {
  double majority = 0.0;
  double global_accuracy = 0.0;
  double per_agent_accuracy = 0.0;
  double feature_model = 0.0;      // relevant task features + agent id
  double decoy_model = 0.0;        // decoy features + agent id
  double self_estimation = 0.0;    // logged confidences
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  Predictor assessor;              // the feature model
};

inline constexpr double kLadderTrainFraction = 0.7;

struct LadderSplit {
  Dataset train;
  Dataset test;
};

// Tasks before the cut go to training; agents see every task.
inline LadderSplit SplitAgentTasks(const EcosystemHistory& history, int n_tasks) {
  const auto data = MakeDataset(history);
  const auto cut = static_cast<std::int64_t>(std::llround(kLadderTrainFraction * n_tasks));
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (data.row(i).t < cut ? train_rows : test_rows).push_back(i);
  }
  return {data.Subset(train_rows), data.Subset(test_rows)};
}

inline std::vector<std::string> AgentColumns(const Dataset& data) {
  std::vector<std::string> out;
  for (const auto& c : data.columns()) {
    if (c.starts_with("s_id_")) out.push_back(c);
  }
  return out;
}

inline LadderResult RunLadder(std::uint64_t seed, AgentTaskSpec spec = {}) {
  spec.seed = seed;
  const auto history = AgentTaskEcosystem(spec);
  const auto [train, test] = SplitAgentTasks(history, spec.n_tasks);
  const auto rule = ScoringRule::Brier();
  LadderResult result;
  result.n_train = train.size();
  result.n_test = test.size();

  const auto global = FitConstant(train);
  std::map<std::string, double> majority, per_agent;
  std::map<std::string, std::pair<double, double>> agent_sums;
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto& s = agent_sums[train.row(i).system_id];
    s.first += train.validity(i);
    s.second += 1.0;
  }
  const double majority_class = global.constant_value() >= 0.5 ? 1.0 : 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& row = test.row(i);
    majority[row.key] = majority_class;
    auto it = agent_sums.find(row.system_id);
    per_agent[row.key] = it == agent_sums.end() ? global.constant_value()
                                                : it->second.first / it->second.second;
  }
  result.majority = MeanScore(rule, PreRecordedAdapter(majority), test);
  result.global_accuracy = MeanScore(rule, global, test);
  result.per_agent_accuracy = MeanScore(rule, PreRecordedAdapter(per_agent), test);

  const auto agents = AgentColumns(train);
  std::vector<std::string> relevant = {"i_reward_size", "i_distance", "i_y_position"};
  relevant.insert(relevant.end(), agents.begin(), agents.end());
  result.assessor = FitLogistic(train, relevant);
  result.feature_model = MeanScore(rule, result.assessor, test);

  std::vector<std::string> decoys = {"i_decoy_a", "i_decoy_b"};
  decoys.insert(decoys.end(), agents.begin(), agents.end());
  result.decoy_model = MeanScore(rule, FitLogistic(train, decoys), test);
  result.self_estimation = MeanScore(rule, SelfEstimationAdapter(), test);
  return result;
}

// ---------------------------------------------------------------------------
// tradeoff: rejection curves on grid D and threshold rejection with a
// calibrated assessor.

struct NamedCurve {
  std::string name;
  std::vector<CurvePoint> curve;
  double aurc = 0.0;
};

struct TradeoffResult {
  std::vector<NamedCurve> grid_curves;  // oracle, calibrated, constant
  double baseline_validity = 0.0;       // tau = 0
  double thresholded_validity = 0.0;    // tau = 0.01
  double threshold_coverage = 0.0;
  double rejected_correct_fraction = 0.0;
  double avoided_failure_fraction = 0.0;
};

inline constexpr double kRejectionThreshold = 0.01;

// Grid-D predictors keyed by record: exact cell outcome, per-windingness
// success rate (calibrated, coarse), and the global rate.
inline std::vector<std::pair<std::string, Predictor>> GridDPredictors(
    const Dataset& grid_d) {
  std::map<std::string, double> oracle, calibrated, constant;
  std::map<double, std::pair<double, double>> by_wind;
  const auto wind = *grid_d.ColumnIndex("i_windingness");
  double total = 0.0;
  for (std::size_t i = 0; i < grid_d.size(); ++i) {
    auto& s = by_wind[grid_d.value(i, wind)];
    s.first += grid_d.validity(i);
    s.second += 1.0;
    total += grid_d.validity(i);
  }
  for (std::size_t i = 0; i < grid_d.size(); ++i) {
    const auto& key = grid_d.row(i).key;
    oracle[key] = grid_d.validity(i);
    const auto& s = by_wind[grid_d.value(i, wind)];
    calibrated[key] = s.first / s.second;
    constant[key] = total / static_cast<double>(grid_d.size());
  }
  return {{"oracle", PreRecordedAdapter(oracle)},
          {"calibrated", PreRecordedAdapter(calibrated)},
          {"constant", PreRecordedAdapter(constant)}};
}

inline TradeoffResult RunTradeoff(std::uint64_t seed) {
  TradeoffResult result;
  const auto grid_d = MakeDataset(GridEcosystem({"D", 1, seed}));
  for (auto& [name, predictor] : GridDPredictors(grid_d)) {
    auto curve = RejectionCurve(predictor, grid_d);
    const double area = Aurc(curve);
    result.grid_curves.push_back({name, std::move(curve), area});
  }

  const auto ladder = RunLadder(seed);
  AgentTaskSpec spec;
  spec.seed = seed;
  const auto split = SplitAgentTasks(AgentTaskEcosystem(spec), spec.n_tasks);
  const auto rule = ScoringRule::Brier();
  const auto base = ComputeEnvelope(ladder.assessor, split.test, {0.0, std::numeric_limits<double>::infinity(), 0.0}, rule);
  const auto kept = ComputeEnvelope(ladder.assessor, split.test,
                                    {0.0, std::numeric_limits<double>::infinity(), kRejectionThreshold}, rule);
  result.baseline_validity = *base.accepted_validity;
  result.thresholded_validity = kept.accepted_validity.value_or(0.0);
  result.threshold_coverage = kept.coverage;
  const auto predictions = ladder.assessor.Predict(split.test);
  double correct = 0, rejected_correct = 0, failures = 0, avoided = 0;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    const bool rejected = predictions[i] < kRejectionThreshold;
    if (split.test.validity(i) == 1.0) {
      ++correct;
      if (rejected) ++rejected_correct;
    } else {
      ++failures;
      if (rejected) ++avoided;
    }
  }
  result.rejected_correct_fraction = correct > 0 ? rejected_correct / correct : 0.0;
  result.avoided_failure_fraction = failures > 0 ? avoided / failures : 0.0;
  return result;
}

// ---------------------------------------------------------------------------
// scaling: exponent recovery from noisy power-law samples.

struct ScalingRecoveryResult {
  int trials = 0;
  int recovered = 0;  // |alpha_hat - alpha| <= tolerance
  double true_exponent = -0.05;
  double tolerance = 0.005;
  ScalingLawModel example;
  std::vector<ScalePoint> example_points;
  HypotheticalPrediction hypothetical;  // at x = 1e12
};

inline constexpr double kScalingScale = 3.0;
inline constexpr double kScalingExponent = -0.05;
inline constexpr double kScalingLogNoise = 0.01;
inline constexpr double kScalingXLow = 1e3;
inline constexpr double kScalingXHigh = 1e9;
inline constexpr double kScalingHypotheticalX = 1e12;

inline ScalingRecoveryResult RunScalingRecovery(std::uint64_t seed, int trials = 100,
                                                std::size_t n_points = 50) {
  ScalingRecoveryResult result;
  result.trials = trials;
  for (int k = 0; k < trials; ++k) {
    const auto points =
        SyntheticScalingPoints(n_points, kScalingScale, kScalingExponent,
                               kScalingLogNoise, kScalingXLow, kScalingXHigh,
                               DeriveSeed(seed, static_cast<std::uint64_t>(k)));
    const auto model = FitPowerLaw(points);
    if (std::abs(model.exponent - kScalingExponent) <= result.tolerance) {
      ++result.recovered;
    }
    if (k == 0) {
      result.example = model;
      result.example_points = points;
    }
  }
  result.hypothetical = PredictHypothetical(result.example, kScalingHypotheticalX);
  return result;
}

// ---------------------------------------------------------------------------
// Artifact emission.

inline nlohmann::json ScenarioConfig(const std::string& name, std::uint64_t seed) {
  return {{"scenario", name}, {"seed", seed}};
}

inline std::string ScalingFitSvg(const ScalingLawModel& model,
                                 const std::vector<ScalePoint>& points,
                                 const std::string& provenance) {
  PlotSeries observed{"observed (log-log)", {}};
  PlotSeries fitted{"fitted power law", {}};
  for (const auto& p : points) {
    observed.points.emplace_back(std::log10(p.x), std::log10(p.y));
    fitted.points.emplace_back(std::log10(p.x), std::log10(model.Evaluate(p.x)));
  }
  return LinePlotSvg({observed, fitted}, "Power-law fit", "log10 x", "log10 y",
                     provenance);
}

// Runs scenario `name` and writes its artifacts under out_dir. Returns the
// summary JSON (also written to out_dir/summary.json).
inline nlohmann::json WriteScenario(const std::string& name,
                                    const std::filesystem::path& out_dir,
                                    std::uint64_t seed) {
  const auto config = ScenarioConfig(name, seed);
  const auto prov = Provenance::Of(config, seed);
  const std::string svg_note = "config_hash=" + prov.config_hash +
                               " seed=" + std::to_string(seed);
  nlohmann::json summary = {{"scenario", name}};
  prov.Stamp(summary);

  if (name == "fig1") {
    const auto result = RunFig1(seed);
    std::ostringstream table;
    table << prov.CsvComment() << "system_id,v,q_f1_wind,q_f1_fog,q_f1_best,q_f2\n";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : result.rows) {
      table << r.system_id << ',' << FormatReal(r.v) << ',' << FormatReal(r.q_f1_wind)
            << ',' << FormatReal(r.q_f1_fog) << ',' << FormatReal(r.q_f1_best) << ','
            << FormatReal(r.q_f2) << '\n';
      rows.push_back({{"system_id", r.system_id}, {"v", r.v}, {"q_f1_wind", r.q_f1_wind},
                      {"q_f1_fog", r.q_f1_fog}, {"q_f1_best", r.q_f1_best},
                      {"q_f2", r.q_f2}});
    }
    WriteTextFile(out_dir / "fig1_q_table.csv", table.str());
    std::ostringstream frontier;
    frontier << prov.CsvComment();
    WriteParetoCsv(result.points, frontier);
    WriteTextFile(out_dir / "pareto.csv", frontier.str());
    std::vector<ScatterMark> marks;
    for (const auto& p : result.points) marks.push_back({p.system_id, p.q, p.v, !p.dominated});
    WriteTextFile(out_dir / "pareto.svg",
                  ScatterPlotSvg(marks, "Validity vs unpredictability (logistic, 2 features)",
                                 "Q (Brier)", "expected validity", svg_note));
    summary["systems"] = std::move(rows);
    nlohmann::json front = nlohmann::json::array();
    for (const auto& p : result.frontier) front.push_back(p.system_id);
    summary["frontier"] = std::move(front);
  } else if (name == "coin") {
    const auto result = RunCoin(seed);
    summary["empirical_rate"] = result.empirical_rate;
    summary["q_brier_constant"] = result.q_brier_constant;
    summary["q_brier_logistic"] = result.q_brier_logistic;
    summary["best_constant_log_loss"] = result.best_constant_log_loss;
    summary["analytic_brier_floor"] = 0.21;
    summary["analytic_log_loss_floor"] = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
    summary["within_floor_band"] =
        result.q_brier_constant >= 0.19 && result.q_brier_constant <= 0.23;
  } else if (name == "ladder") {
    const auto result = RunLadder(seed);
    std::ostringstream table;
    table << prov.CsvComment() << "method,brier\n"
          << "majority," << FormatReal(result.majority) << '\n'
          << "global_accuracy," << FormatReal(result.global_accuracy) << '\n'
          << "per_agent_accuracy," << FormatReal(result.per_agent_accuracy) << '\n'
          << "feature_model," << FormatReal(result.feature_model) << '\n';
    WriteTextFile(out_dir / "ladder.csv", table.str());
    summary["majority"] = result.majority;
    summary["global_accuracy"] = result.global_accuracy;
    summary["per_agent_accuracy"] = result.per_agent_accuracy;
    summary["feature_model"] = result.feature_model;
    summary["decoy_model"] = result.decoy_model;
    summary["self_estimation"] = result.self_estimation;
    summary["n_train"] = result.n_train;
    summary["n_test"] = result.n_test;
    WriteJsonFile(out_dir / "assessor.json", result.assessor.ToJson());
  } else if (name == "tradeoff") {
    const auto result = RunTradeoff(seed);
    std::ostringstream table;
    table << prov.CsvComment() << "predictor,aurc\n";
    std::vector<PlotSeries> series;
    nlohmann::json aurc;
    for (const auto& c : result.grid_curves) {
      table << c.name << ',' << FormatReal(c.aurc) << '\n';
      aurc[c.name] = c.aurc;
      std::ostringstream curve;
      curve << prov.CsvComment();
      WriteCurveCsv(c.curve, curve);
      WriteTextFile(out_dir / ("rejection_curve_" + c.name + ".csv"), curve.str());
      PlotSeries s{c.name, {}};
      for (const auto& p : c.curve) s.points.emplace_back(p.rejection_rate, p.accepted_validity);
      series.push_back(std::move(s));
    }
    WriteTextFile(out_dir / "aurc.csv", table.str());
    WriteTextFile(out_dir / "rejection_curves.svg",
                  LinePlotSvg(series, "Accuracy-rejection curves (grid D)",
                              "rejection rate", "accepted validity", svg_note));
    summary["aurc"] = std::move(aurc);
    summary["threshold"] = {
        {"tau", kRejectionThreshold},
        {"baseline_validity", result.baseline_validity},
        {"thresholded_validity", result.thresholded_validity},
        {"coverage", result.threshold_coverage},
        {"rejected_correct_fraction", result.rejected_correct_fraction},
        {"avoided_failure_fraction", result.avoided_failure_fraction}};
  } else if (name == "scaling") {
    const auto result = RunScalingRecovery(seed);
    summary["trials"] = result.trials;
    summary["recovered"] = result.recovered;
    summary["true_exponent"] = result.true_exponent;
    summary["tolerance"] = result.tolerance;
    summary["example_model"] = ScalingModelToJson(result.example);
    summary["hypothetical"] = {{"x", kScalingHypotheticalX},
                               {"estimate", result.hypothetical.estimate},
                               {"band_low", result.hypothetical.band_low},
                               {"band_high", result.hypothetical.band_high},
                               {"extrapolated", result.hypothetical.extrapolated}};
    WriteTextFile(out_dir / "scaling_fit.svg",
                  ScalingFitSvg(result.example, result.example_points, svg_note));
  } else {
    throw ValidationError("unknown scenario '" + name + "'");
  }
  WriteJsonFile(out_dir / "summary.json", summary);
  return summary;
}

}  // namespace validity_lab

#endif  // VALIDITY_LAB_SCENARIOS_HPP_
