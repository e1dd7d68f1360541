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

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "validity_lab/ecosim.hpp"
#include "validity_lab/unpredictability.hpp"

namespace validity_lab {
namespace {

FamilySpec Family(PredictorKind kind, int budget = 0,
                  std::vector<std::string> pool = {}) {
  FamilySpec family;
  family.kind = kind;
  family.budget = budget;
  family.feature_pool = std::move(pool);
  return family;
}

QProtocol Protocol(std::uint64_t seed = 1) {
  QProtocol protocol;
  protocol.seed = seed;
  return protocol;
}

TEST(EstimateQ, DegenerateHistoriesAreFullyPredictable) {
  for (double v : {0.0, 1.0}) {
    const auto history = testing::Sequence(std::vector<double>(40, v));
    EXPECT_EQ(EstimateQ(history, Family(PredictorKind::kConstant), Protocol()).q_value, 0.0);
    // The logistic intercept is clamped just inside (0, 1).
    EXPECT_LE(EstimateQ(history, Family(PredictorKind::kLogistic, 1), Protocol()).q_value,
              1e-20);
  }
}

TEST(EstimateQ, BiasedCoinFloor) {
  const auto history = CoinEcosystem(0.7, 10000, 3);
  for (const auto& family : {Family(PredictorKind::kConstant),
                             Family(PredictorKind::kLogistic, 1),
                             Family(PredictorKind::kTree, 4)}) {
    EXPECT_NEAR(EstimateQ(history, family, Protocol()).q_value, 0.21, 0.02)
        << ToString(family.kind);
  }
  auto protocol = Protocol();
  protocol.rule = ScoringRule::LogLoss();
  EXPECT_NEAR(EstimateQ(history, Family(PredictorKind::kConstant), protocol).q_value,
              0.6109, 0.02);
}

TEST(EstimateQ, GridAWindingnessVersusFogginess) {
  const auto history = GridEcosystem({"A", 20, 1});
  const auto wind = EstimateQ(
      history, Family(PredictorKind::kLogistic, 1, {"i_windingness"}), Protocol());
  const auto fog = EstimateQ(
      history, Family(PredictorKind::kLogistic, 1, {"i_fogginess"}), Protocol());
  EXPECT_LE(wind.q_value, 0.02);
  EXPECT_LT(wind.q_value, fog.q_value);
  // Fogginess carries no signal for A, so the fog family sits at the variance
  // of A's graded cell table.
  EXPECT_NEAR(fog.q_value, 0.171875, 0.02);
}

TEST(EstimateQ, TreeSeparatesGridD) {
  const auto history = GridEcosystem({"D", 20, 2});
  EXPECT_LE(EstimateQ(history, Family(PredictorKind::kTree, 16), Protocol()).q_value,
            0.02);
}

TEST(EstimateQ, GridFAtAleatoricFloorForEveryFamily) {
  const auto history = GridEcosystem({"F", 100, 4});
  for (const auto& family : {Family(PredictorKind::kConstant),
                             Family(PredictorKind::kLogistic, 2,
                                    {"i_windingness", "i_fogginess"}),
                             Family(PredictorKind::kTree, 8,
                                    {"i_windingness", "i_fogginess"})}) {
    EXPECT_NEAR(EstimateQ(history, family, Protocol()).q_value, 0.234375, 0.02)
        << ToString(family.kind);
  }
}

TEST(EstimateQ, Preconditions) {
  EXPECT_THROW(EstimateQ(testing::Sequence({1, 0, 1, 0, 1}),
                         Family(PredictorKind::kConstant), Protocol()),
               Error);
  // Every grid record sits at t = 0 with one episode.
  auto temporal = Protocol();
  temporal.horizon = 1;
  EXPECT_THROW(EstimateQ(GridEcosystem({"D", 1, 0}), Family(PredictorKind::kConstant),
                         temporal),
               Error);
  auto bad_split = Protocol();
  bad_split.split = {0.5, 0.5, 0.5};
  EXPECT_THROW(EstimateQ(GridEcosystem({"D", 4, 0}), Family(PredictorKind::kConstant),
                         bad_split),
               Error);
}

TEST(EstimateQ, TooFewRecordsMessageNamesMinimum) {
  try {
    EstimateQ(testing::Sequence({1, 0, 1, 0, 1}), Family(PredictorKind::kConstant),
              Protocol());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(std::to_string(kMinRecordsForQ)),
              std::string::npos);
  }
}

TEST(EstimateQ, SplitSizes) {
  const auto report = EstimateQ(GridEcosystem({"D", 10, 0}),
                                Family(PredictorKind::kConstant), Protocol());
  EXPECT_EQ(report.n_train, 80u);
  EXPECT_EQ(report.n_validation, 32u);
  EXPECT_EQ(report.n_test, 48u);
  EXPECT_FALSE(report.temporal_split);
}

TEST(EstimateQ, EnumeratesSubsetsUpToBudget) {
  const auto history = AgentTaskEcosystem({5, 100, 1, false});
  const auto report = EstimateQ(
      history,
      Family(PredictorKind::kLogistic, 2, {"i_reward_size", "i_distance", "i_y_position"}),
      Protocol());
  ASSERT_EQ(report.candidates.size(), 7u);  // 1 + 3 + 3
  EXPECT_TRUE(std::is_sorted(report.candidates.begin(), report.candidates.end(),
                             [](const auto& a, const auto& b) {
                               return a.description < b.description;
                             }));
  const auto best = std::min_element(
      report.candidates.begin(), report.candidates.end(),
      [](const auto& a, const auto& b) { return a.validation_score < b.validation_score; });
  EXPECT_EQ(report.best_description, best->description);
  EXPECT_EQ(report.q_value, best->test_score);
}

// Larger budgets can only lower the best validation loss.
TEST(EstimateQ, NestedFamiliesOnValidation) {
  const auto history = AgentTaskEcosystem({5, 200, 2, false});
  const std::vector<std::string> pool = {"i_reward_size", "i_distance", "i_y_position",
                                         "i_decoy_a"};
  double previous = 1e9;
  for (int budget = 0; budget <= 3; ++budget) {
    const auto report =
        EstimateQ(history, Family(PredictorKind::kLogistic, budget, pool), Protocol(9));
    double best = 1e9;
    for (const auto& c : report.candidates) best = std::min(best, c.validation_score);
    EXPECT_LE(best, previous + 1e-15) << budget;
    previous = best;
  }
}

TEST(EstimateQ, DeterministicAcrossRunsAndThreadCounts) {
  const auto history = AgentTaskEcosystem({5, 200, 4, false});
  const auto family = Family(PredictorKind::kLogistic, 2,
                             {"i_reward_size", "i_distance", "i_y_position"});
  auto one = Protocol(5);
  one.threads = 1;
  auto four = Protocol(5);
  four.threads = 4;
  const auto a = QReportToJson(EstimateQ(history, family, one)).dump();
  const auto b = QReportToJson(EstimateQ(history, family, four)).dump();
  const auto c = QReportToJson(EstimateQ(history, family, one)).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(EstimateQ, HorizonUsesTemporalSplit) {
  const auto history = DriftEcosystem({.n_steps = 400, .seed = 3});
  auto protocol = Protocol();
  protocol.horizon = 1;
  const auto report = EstimateQ(history, Family(PredictorKind::kLogistic, 1), protocol);
  EXPECT_TRUE(report.temporal_split);
  EXPECT_EQ(report.n_train + report.n_validation + report.n_test, 399u);
}

TEST(EstimateQ, MemorylessDropsHistoryAndHorizon) {
  const auto history = DriftEcosystem({.n_steps = 400, .seed = 3});
  auto protocol = Protocol();
  protocol.horizon = 2;
  protocol.history_window = 3;
  const auto report =
      EstimateQMemoryless(history, Family(PredictorKind::kLogistic, 1), protocol);
  EXPECT_FALSE(report.temporal_split);
  EXPECT_EQ(report.n_train + report.n_validation + report.n_test, 400u);
  for (const auto& c : report.candidates) {
    EXPECT_EQ(c.description.find("h_"), std::string::npos);
  }
}

TEST(Aggregate, ConstantGroupAll) {
  const auto data = MakeDataset(GridEcosystem({"D", 1, 0}));
  const auto groups = AggregatePredictions(FitConstant(data), data, GroupBy::kAll);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_DOUBLE_EQ(groups[0].predicted_mean, 0.625);
  EXPECT_EQ(groups[0].count, 16u);
}

TEST(Aggregate, PerfectPredictorMatchesEveryGroup) {
  const auto data = MakeDataset(AgentTaskEcosystem({5, 50, 3, false}));
  std::map<std::string, double> truth;
  for (std::size_t i = 0; i < data.size(); ++i) truth[data.row(i).key] = data.validity(i);
  for (auto group_by : {GroupBy::kInstance, GroupBy::kSystem, GroupBy::kUser, GroupBy::kAll}) {
    for (const auto& g : AggregatePredictions(PreRecordedAdapter(truth), data, group_by)) {
      EXPECT_DOUBLE_EQ(g.predicted_mean, g.observed_mean) << g.key;
    }
  }
  EXPECT_EQ(AggregatePredictions(PreRecordedAdapter(truth), data, GroupBy::kSystem).size(),
            5u);
}

TEST(Aggregate, GridAOracleBySystem) {
  const auto data = MakeDataset(GridEcosystem({"A", 1, 0}));
  const std::vector<std::string> wind = {"i_windingness"};
  const auto oracle = FitTree(data, 4, wind);
  ASSERT_EQ(MeanScore(ScoringRule::Brier(), oracle, data), 0.0);
  const auto groups = AggregatePredictions(oracle, data, GroupBy::kSystem);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].key, "A");
  EXPECT_DOUBLE_EQ(groups[0].predicted_mean, 0.625);
  EXPECT_DOUBLE_EQ(groups[0].observed_mean, 0.625);
}

TEST(Aggregate, UnknownGroupByThrows) { EXPECT_THROW(ParseGroupBy("planet"), Error); }

}  // namespace
}  // namespace validity_lab
