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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <string>

#include "validity_lab/ecosim.hpp"
#include "validity_lab/scenarios.hpp"
#include "validity_lab/unpredictability.hpp"

namespace validity_lab {
namespace {

const ScoringRule kBrier = ScoringRule::Brier();

double Cell(const EcosystemHistory& h, std::size_t i, const char* name) {
  return *h.records()[i].instance_features.Find(name);
}

TEST(Grid, SixteenCellsAtTheSharedMean) {
  for (const auto& system : GridSystems()) {
    const auto history = GridEcosystem({system, 1, 0});
    EXPECT_EQ(history.size(), 16u);
    if (system != "F") {
      EXPECT_EQ(ExpectedValidity(history), 0.625) << system;
    }
  }
  EXPECT_EQ(GridEcosystem({"A", 1, 0}).metadata().validity_kind, ValidityKind::kGraded);
  EXPECT_EQ(GridEcosystem({"D", 1, 0}).metadata().validity_kind, ValidityKind::kBinary);
}

TEST(Grid, SystemARule) {
  const auto history = GridEcosystem({"A", 2, 0});
  const double by_wind[] = {1, 1, 0.5, 0};
  for (std::size_t i = 0; i < history.size(); ++i) {
    EXPECT_EQ(history.records()[i].validity,
              by_wind[static_cast<int>(Cell(history, i, "i_windingness"))]);
  }
}

TEST(Grid, SystemDRule) {
  const auto history = GridEcosystem({"D", 3, 0});
  int valid_cells = 0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double w = Cell(history, i, "i_windingness");
    const double f = Cell(history, i, "i_fogginess");
    EXPECT_EQ(history.records()[i].validity, std::abs(w - f) <= 1 ? 1.0 : 0.0);
    if (i < 16 && history.records()[i].validity == 1.0) ++valid_cells;
  }
  EXPECT_EQ(valid_cells, 10);
}

TEST(Grid, SystemEResistsLogisticFits) {
  EXPECT_GE(internal::BestLogisticGridBrier(GridCellTable("E")), kGridEMinLogisticBrier);
}

TEST(Grid, SystemFPerCellRate) {
  const auto history = GridEcosystem({"F", 10000, 6});
  std::map<std::string, std::pair<double, double>> cells;
  for (const auto& r : history.records()) {
    const auto cell = r.instance_id.substr(0, r.instance_id.rfind('_'));
    cells[cell].first += r.validity;
    cells[cell].second += 1;
  }
  ASSERT_EQ(cells.size(), 16u);
  for (const auto& [cell, s] : cells) EXPECT_NEAR(s.first / s.second, 0.625, 0.02) << cell;
}

TEST(Grid, DeterministicPerSeed) {
  const auto a = GridEcosystem({"F", 5, 1});
  const auto b = GridEcosystem({"F", 5, 1});
  const auto c = GridEcosystem({"F", 5, 2});
  EXPECT_TRUE(std::equal(a.records().begin(), a.records().end(), b.records().begin()));
  EXPECT_FALSE(std::equal(a.records().begin(), a.records().end(), c.records().begin()));
}

TEST(Grid, RejectsUnknownSystemAndBadEpisodes) {
  EXPECT_THROW(GridEcosystem({"G", 1, 0}), Error);
  EXPECT_THROW(GridEcosystem({"A", 0, 0}), Error);
}

TEST(Coin, RatesAndDegenerateCoins) {
  EXPECT_NEAR(ExpectedValidity(CoinEcosystem(0.7, 100000, 1)), 0.7, 0.005);
  const auto heads = CoinEcosystem(1.0, 200, 1);
  for (const auto& r : heads.records()) EXPECT_EQ(r.validity, 1.0);
  const auto tails = CoinEcosystem(0.0, 200, 1);
  for (const auto& r : tails.records()) EXPECT_EQ(r.validity, 0.0);
  EXPECT_THROW(CoinEcosystem(1.5, 10, 1), Error);
}

TEST(AgentTask, ShapeAndConfidences) {
  const auto history = AgentTaskEcosystem({5, 100, 2, false});
  EXPECT_EQ(history.size(), 500u);
  for (const auto& r : history.records()) {
    ASSERT_TRUE(r.self_confidence.has_value());
    EXPECT_GT(*r.self_confidence, 0.0);
    EXPECT_LT(*r.self_confidence, 1.0);
  }
}

TEST(AgentTask, SharedSkillRemovesAgentSignal) {
  AgentTaskSpec spec;
  spec.shared_skill = true;
  const auto ladder = RunLadder(3, spec);
  EXPECT_NEAR(ladder.per_agent_accuracy, ladder.global_accuracy, 0.005);
}

TEST(AgentTask, DecoysAddNothingBeyondAgentIdentity) {
  const auto ladder = RunLadder(3);
  EXPECT_NEAR(ladder.decoy_model, ladder.per_agent_accuracy, 0.01);
  EXPECT_LT(ladder.feature_model, ladder.decoy_model);
}

double DriftQ(const DriftEcosystemSpec& spec, std::optional<int> window) {
  QProtocol protocol;
  protocol.seed = spec.seed;
  protocol.horizon = 1;
  protocol.history_window = window;
  FamilySpec family;
  family.kind = PredictorKind::kLogistic;
  family.budget = 3;
  return EstimateQ(DriftEcosystem(spec), family, protocol).q_value;
}

TEST(Drift, NoFeedbackMeansNoHistorySignal) {
  DriftEcosystemSpec spec;
  spec.success_boost = 0.0;
  spec.failure_drop = 0.0;
  spec.seed = 8;
  EXPECT_NEAR(DriftQ(spec, 1), DriftQ(spec, std::nullopt), 0.01);
}

TEST(Drift, FeedbackMakesHistoryInformative) {
  DriftEcosystemSpec spec;
  spec.seed = 8;
  EXPECT_LT(DriftQ(spec, 1), DriftQ(spec, std::nullopt));
}

TEST(Drift, EmptyAndBounds) {
  EXPECT_TRUE(DriftEcosystem({.n_steps = 0}).empty());
  EXPECT_THROW(DriftEcosystem({.n_steps = -1}), Error);
}

double ReactiveGap(double leak, FeatureMode mode) {
  const auto history = OutputOracleEcosystem(4000, leak, 12);
  QProtocol protocol;
  protocol.seed = 12;
  protocol.mode = mode;
  FamilySpec family;
  family.kind = PredictorKind::kTree;
  family.budget = 2;
  return EstimateQ(history, family, protocol).q_value;
}

TEST(OutputOracle, LeakLevels) {
  EXPECT_EQ(ReactiveGap(1.0, FeatureMode::kReactive), 0.0);
  EXPECT_EQ(ReactiveGap(0.0, FeatureMode::kReactive), 0.0);
  EXPECT_NEAR(ReactiveGap(1.0, FeatureMode::kAnticipative), 0.25, 0.02);
  EXPECT_NEAR(ReactiveGap(0.5, FeatureMode::kReactive),
              ReactiveGap(0.5, FeatureMode::kAnticipative), 0.01);
}

TEST(GenerateFromConfig, DispatchAndErrors) {
  const auto grid = GenerateFromConfig({{"generator", "grid"}, {"system_id", "C"}}, 0);
  EXPECT_EQ(grid.size(), 16u);
  const auto drift = GenerateFromConfig({{"generator", "drift"}, {"n_steps", 30}}, 2);
  EXPECT_EQ(drift.size(), 30u);
  EXPECT_THROW(GenerateFromConfig({{"generator", "volcano"}}, 0), Error);
  EXPECT_THROW(GenerateFromConfig({{"system_id", "A"}}, 0), Error);
  EXPECT_THROW(GenerateFromConfig({{"generator", "coin"}, {"q", "high"}}, 0), Error);
}

}  // namespace
}  // namespace validity_lab
