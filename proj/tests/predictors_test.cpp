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

#include <map>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "validity_lab/dataset.hpp"
#include "validity_lab/ecosim.hpp"
#include "validity_lab/predictors.hpp"

namespace validity_lab {
namespace {

const ScoringRule kBrier = ScoringRule::Brier();

Dataset Grid(const std::string& system, int episodes = 1, std::uint64_t seed = 0,
             FeatureMode mode = FeatureMode::kAnticipative) {
  return MakeDataset(GridEcosystem({system, episodes, seed}), {.mode = mode});
}

TEST(FitConstant, MeanOfTrainingValidity) {
  EXPECT_EQ(FitConstant(MakeDataset(testing::Sequence({1, 1, 1}))).constant_value(), 1.0);
  EXPECT_EQ(FitConstant(MakeDataset(testing::Sequence({0, 0}))).constant_value(), 0.0);
  EXPECT_DOUBLE_EQ(FitConstant(Grid("D")).constant_value(), 0.625);
  EXPECT_THROW(FitConstant(Dataset()), Error);
}

TEST(FitConstant, ZeroLossOnDegenerateData) {
  const auto data = MakeDataset(testing::Sequence({1, 1, 1, 1}));
  EXPECT_EQ(MeanScore(kBrier, FitConstant(data), data), 0.0);
}

TEST(FitLogistic, WindingnessExplainsGridA) {
  const auto train = Grid("A", 4, 1);
  const auto held_out = Grid("A", 1, 2);
  const std::vector<std::string> wind = {"i_windingness"};
  EXPECT_LE(MeanScore(kBrier, FitLogistic(train, wind), held_out), 0.02);
}

TEST(FitLogistic, FogginessIsUninformativeForGridA) {
  const auto train = Grid("A", 4, 1);
  const auto held_out = Grid("A", 1, 2);
  const std::vector<std::string> fog = {"i_fogginess"};
  // The best any fog-only model can do is the variance of the cell table,
  // mean(v^2) - mean(v)^2 over {1, 1, 0.5, 0}.
  const double floor = (1 + 1 + 0.25 + 0) / 4.0 - 0.625 * 0.625;
  EXPECT_NEAR(floor, 0.171875, 1e-15);
  EXPECT_NEAR(MeanScore(kBrier, FitLogistic(train, fog), held_out), floor, 0.02);
}

TEST(FitLogistic, EmptySubsetMatchesConstant) {
  for (const auto& system : {"A", "D", "F"}) {
    const auto data = Grid(system, 3, 5);
    const auto logistic = FitLogistic(data, {});
    const auto constant = FitConstant(data);
    const auto a = logistic.Predict(data);
    const auto b = constant.Predict(data);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
  }
}

TEST(FitLogistic, LossTraceNeverIncreases) {
  const auto data = MakeDataset(AgentTaskEcosystem({5, 300, 8, false}));
  const std::vector<std::string> features = {"i_reward_size", "i_distance",
                                             "i_y_position", "s_id_agent00"};
  for (double rate : {0.5, 5.0, 50.0}) {
    std::vector<double> trace;
    LogisticOptions options;
    options.learning_rate = rate;
    FitLogistic(data, features, options, &trace);
    ASSERT_GE(trace.size(), 2u);
    for (std::size_t k = 1; k < trace.size(); ++k) {
      EXPECT_LE(trace[k], trace[k - 1]) << "rate " << rate << " step " << k;
    }
  }
}

TEST(FitLogistic, Deterministic) {
  const auto data = Grid("C", 2, 3);
  const std::vector<std::string> features = {"i_windingness", "i_fogginess"};
  EXPECT_EQ(FitLogistic(data, features), FitLogistic(data, features));
}

TEST(FitLogistic, UnknownFeatureThrows) {
  const std::vector<std::string> features = {"i_missing"};
  EXPECT_THROW(FitLogistic(Grid("A"), features), Error);
}

TEST(FitTree, SeparatesGridD) {
  const auto data = Grid("D");
  for (int budget : {10, 16, 40}) {
    EXPECT_EQ(MeanScore(kBrier, FitTree(data, budget), data), 0.0) << budget;
  }
}

TEST(FitTree, SingleLeafEqualsConstant) {
  for (const auto& system : {"A", "D", "F"}) {
    const auto data = Grid(system, 2, 4);
    EXPECT_EQ(FitTree(data, 1).Predict(data), FitConstant(data).Predict(data));
  }
}

TEST(FitTree, PureDataStaysOneLeaf) {
  const auto data = MakeDataset(testing::Sequence({1, 1, 1, 1, 1}));
  for (int budget : {1, 2, 8}) {
    const auto tree = FitTree(data, budget);
    EXPECT_EQ(tree.leaf_count(), 1u);
    EXPECT_EQ(tree.Predict(data)[0], 1.0);
  }
}

TEST(FitTree, TrainingLossMonotoneInBudget) {
  const auto data = MakeDataset(AgentTaskEcosystem({5, 200, 6, false}));
  double previous = 1e9;
  for (int budget = 1; budget <= 12; ++budget) {
    const auto tree = FitTree(data, budget);
    EXPECT_LE(tree.leaf_count(), static_cast<std::size_t>(budget));
    const double loss = MeanScore(kBrier, tree, data);
    EXPECT_LE(loss, previous + 1e-12) << budget;
    previous = loss;
  }
}

TEST(FitTree, RejectsBadBudget) { EXPECT_THROW(FitTree(Grid("A"), 0), Error); }

EcosystemHistory WithConfidences(const std::vector<double>& validities,
                                 const std::vector<double>& confidences) {
  std::vector<InteractionRecord> records;
  for (std::size_t k = 0; k < validities.size(); ++k) {
    auto r = testing::MakeRecord(static_cast<std::int64_t>(k), "r" + std::to_string(k),
                                 validities[k]);
    r.self_confidence = confidences[k];
    records.push_back(r);
  }
  return EcosystemHistory(std::move(records), {"conf", ValidityKind::kBinary});
}

TEST(SelfEstimation, CalibratedSystemHitsAleatoricFloor) {
  Rng rng(17);
  std::vector<double> v, c;
  for (int k = 0; k < 40000; ++k) {
    v.push_back(rng.Bernoulli(0.7) ? 1.0 : 0.0);
    c.push_back(0.7);
  }
  const auto data = MakeDataset(WithConfidences(v, c));
  EXPECT_NEAR(MeanScore(kBrier, SelfEstimationAdapter(), data), 0.21, 0.01);
}

TEST(SelfEstimation, PerfectSelfKnowledge) {
  const std::vector<double> v = {1, 0, 0, 1, 1};
  const auto data = MakeDataset(WithConfidences(v, v));
  EXPECT_EQ(MeanScore(kBrier, SelfEstimationAdapter(), data), 0.0);
}

TEST(SelfEstimation, OverconfidenceLosesToAssessor) {
  const auto history = GridEcosystem({"D", 1, 0});
  std::vector<double> v;
  for (const auto& r : history.records()) v.push_back(r.validity);
  const auto data = MakeDataset(WithConfidences(v, std::vector<double>(v.size(), 1.0)));
  const double self = MeanScore(kBrier, SelfEstimationAdapter(), data);
  EXPECT_NEAR(self, 0.375, 1e-12);
  const auto grid = MakeDataset(history);
  EXPECT_LT(MeanScore(kBrier, FitTree(grid, 4), grid), self);
}

TEST(SelfEstimation, MissingConfidenceThrows) {
  EXPECT_THROW(SelfEstimationAdapter().Predict(Grid("D")), Error);
}

TEST(Reactive, OutputOracleSeparatesOnlyWithOutputs) {
  const auto history = OutputOracleEcosystem(400, 1.0, 5);
  const auto reactive = MakeDataset(history, {.mode = FeatureMode::kReactive});
  const auto anticipative = MakeDataset(history);
  EXPECT_EQ(MeanScore(kBrier, FitTree(reactive, 2), reactive), 0.0);
  EXPECT_GT(MeanScore(kBrier, FitTree(anticipative, 2), anticipative), 0.0);
  EXPECT_FALSE(anticipative.ColumnIndex("o_flag").has_value());
}

TEST(Reactive, WrapperOverConstantIgnoresFeatures) {
  const auto history = OutputOracleEcosystem(50, 1.0, 5);
  const auto reactive = MakeDataset(history, {.mode = FeatureMode::kReactive});
  const auto constant = FitConstant(reactive);
  EXPECT_EQ(MakeReactive(constant).Predict(reactive), constant.Predict(reactive));
}

TEST(Reactive, NeedsOutputFeaturesAtPredictTime) {
  const auto history = OutputOracleEcosystem(50, 1.0, 5);
  const auto reactive = MakeDataset(history, {.mode = FeatureMode::kReactive});
  const auto tree = FitTree(reactive, 2);
  EXPECT_EQ(tree.mode(), FeatureMode::kReactive);
  EXPECT_THROW(tree.Predict(MakeDataset(history)), Error);
}

TEST(PreRecorded, Identities) {
  const auto valid = MakeDataset(testing::Sequence({1, 1, 1}));
  std::map<std::string, double> ones, halves;
  for (std::size_t i = 0; i < valid.size(); ++i) ones[valid.row(i).key] = 1.0;
  EXPECT_EQ(MeanScore(kBrier, PreRecordedAdapter(ones), valid), 0.0);

  const auto mixed = Grid("D");
  for (std::size_t i = 0; i < mixed.size(); ++i) halves[mixed.row(i).key] = 0.5;
  EXPECT_DOUBLE_EQ(MeanScore(kBrier, PreRecordedAdapter(halves), mixed), 0.25);
}

TEST(PreRecorded, TrueRatesOnGridFReachFloor) {
  const auto data = Grid("F", 625, 3);
  std::map<std::string, double> rates;
  for (std::size_t i = 0; i < data.size(); ++i) rates[data.row(i).key] = 0.625;
  // Expected Brier of the true rate p under Bernoulli(p) is p(1-p).
  EXPECT_NEAR(MeanScore(kBrier, PreRecordedAdapter(rates), data), 0.625 * 0.375, 0.005);
}

TEST(PreRecorded, MissingKeyNamesRecord) {
  const auto data = Grid("D");
  try {
    PreRecordedAdapter({}).Predict(data);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(data.row(0).key), std::string::npos);
  }
  EXPECT_THROW(PreRecordedAdapter({{"k", 1.5}}), Error);
}

TEST(Predictor, SchemaMismatchListsMissingNames) {
  const std::vector<std::string> features = {"i_windingness", "i_fogginess"};
  const auto model = FitLogistic(Grid("C"), features);
  const auto other = MakeDataset(CoinEcosystem(0.5, 20, 1));
  try {
    model.Predict(other);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string message = e.what();
    EXPECT_NE(message.find("i_windingness"), std::string::npos);
    EXPECT_NE(message.find("i_fogginess"), std::string::npos);
  }
}

TEST(Predictor, JsonRoundTripForEveryKind) {
  const auto data = Grid("C", 2, 1);
  const std::vector<std::string> features = {"i_windingness", "i_fogginess"};
  const std::vector<Predictor> predictors = {
      FitConstant(data), FitLogistic(data, features), FitTree(data, 6),
      SelfEstimationAdapter(), PreRecordedAdapter({{"a", 0.25}, {"b", 1.0}}),
      MakeReactive(FitConstant(data))};
  for (const auto& p : predictors) {
    const auto text = p.ToJson().dump();
    EXPECT_EQ(Predictor::FromJson(nlohmann::json::parse(text)), p) << text;
  }
}

TEST(Predictor, PredictionsStayInUnitInterval) {
  const auto data = MakeDataset(AgentTaskEcosystem({5, 200, 2, false}));
  const std::vector<std::string> features = {"i_reward_size", "i_distance"};
  for (const auto& p : {FitLogistic(data, features), FitTree(data, 8)}) {
    for (double value : p.Predict(data)) {
      EXPECT_GE(value, 0.0);
      EXPECT_LE(value, 1.0);
    }
  }
}

}  // namespace
}  // namespace validity_lab
