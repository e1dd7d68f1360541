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

// Unpredictability Q: the smallest held-out expected score reachable by a
// budgeted predictor family.
//
// The minimum over the family is taken on a validation split and Q is reported
// on a disjoint test split, so a family is never rewarded for memorizing its
// own training rows. Data with temporal structure (history features or a
// horizon) is split by time prefix; memoryless data by a seeded shuffle.

#ifndef VALIDITY_LAB_UNPREDICTABILITY_HPP_
#define VALIDITY_LAB_UNPREDICTABILITY_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "validity_lab/common.hpp"
#include "validity_lab/dataset.hpp"
#include "validity_lab/ecosystem.hpp"
#include "validity_lab/predictors.hpp"
#include "validity_lab/scoring.hpp"

namespace validity_lab {

// Declares a family F_b. Budget counts input features for logistic families
// and leaves for trees; constant families ignore it.
struct FamilySpec {
  PredictorKind kind = PredictorKind::kConstant;
  int budget = 0;
  // Explicit candidates. When empty, logistic families enumerate every subset
  // of `feature_pool` (all dataset columns when the pool is empty) of size
  // <= budget, and tree families use one candidate over the pool.
  std::vector<std::vector<std::string>> candidate_subsets;
  std::vector<std::string> feature_pool;
  LogisticOptions logistic;
};

struct SplitFractions {
  double train = 0.5;
  double validation = 0.2;
  double test = 0.3;
};

struct QProtocol {
  SplitFractions split;
  std::uint64_t seed = 0;
  ScoringRule rule = ScoringRule::Brier();
  int horizon = 0;
  FeatureMode mode = FeatureMode::kAnticipative;
  std::optional<int> history_window;
  unsigned threads = 0;  // 0 means WorkerThreads()
};

struct CandidateScore {
  std::string description;
  double validation_score = 0.0;
  double test_score = 0.0;
};

struct QReport {
  double q_value = 0.0;
  std::string best_description;
  Predictor best_predictor;
  std::vector<CandidateScore> candidates;  // sorted by description
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
  bool temporal_split = false;
};

inline constexpr std::size_t kMinRecordsForQ = 10;

namespace internal {

inline std::string DescribeCandidate(PredictorKind kind, int budget,
                                     std::vector<std::string> features) {
  std::sort(features.begin(), features.end());
  std::string out(ToString(kind));
  if (kind == PredictorKind::kTree) out += "[leaves=" + std::to_string(budget) + "]";
  if (kind == PredictorKind::kConstant) return out;
  out += "{";
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (k) out += ",";
    out += features[k];
  }
  return out + "}";
}

inline void EnumerateSubsets(const std::vector<std::string>& pool,
                             std::size_t max_size, std::size_t start,
                             std::vector<std::string>& current,
                             std::vector<std::vector<std::string>>& out) {
  out.push_back(current);
  if (current.size() == max_size) return;
  for (std::size_t k = start; k < pool.size(); ++k) {
    current.push_back(pool[k]);
    EnumerateSubsets(pool, max_size, k + 1, current, out);
    current.pop_back();
  }
}

struct Candidate {
  std::string description;
  std::vector<std::string> features;
};

inline std::vector<Candidate> EnumerateCandidates(const FamilySpec& family,
                                                  const Dataset& data) {
  if (family.budget < 0) throw ValidationError("family budget must be >= 0");
  std::vector<std::string> pool = family.feature_pool;
  if (pool.empty()) pool = data.columns();
  for (const auto& name : pool) {
    if (!data.ColumnIndex(name)) {
      throw ValidationError("feature '" + name + "' not in dataset schema");
    }
  }
  std::vector<std::vector<std::string>> subsets = family.candidate_subsets;
  std::vector<Candidate> out;
  switch (family.kind) {
    case PredictorKind::kConstant:
      out.push_back({"constant", {}});
      break;
    case PredictorKind::kLogistic:
      if (subsets.empty()) {
        std::vector<std::string> current;
        EnumerateSubsets(pool, static_cast<std::size_t>(family.budget), 0,
                         current, subsets);
      }
      for (auto& subset : subsets) {
        if (subset.size() > static_cast<std::size_t>(family.budget)) {
          throw ValidationError("candidate subset exceeds the feature budget");
        }
        out.push_back({DescribeCandidate(family.kind, family.budget, subset),
                       subset});
      }
      break;
    case PredictorKind::kTree:
      if (family.budget < 1) throw ValidationError("tree budget must be >= 1");
      if (subsets.empty()) subsets.push_back(pool);
      for (auto& subset : subsets) {
        out.push_back({DescribeCandidate(family.kind, family.budget, subset),
                       subset});
      }
      break;
    case PredictorKind::kSelfEstimation:
      out.push_back({"self_estimation", {}});
      break;
    case PredictorKind::kPreRecorded:
      throw ValidationError(
          "pre-recorded predictions are scored directly, not fitted");
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    return a.description < b.description;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Candidate& a, const Candidate& b) {
                          return a.description == b.description;
                        }),
            out.end());
  return out;
}

inline Predictor FitCandidate(const FamilySpec& family, const Candidate& candidate,
                              const Dataset& train) {
  switch (family.kind) {
    case PredictorKind::kConstant:
      return FitConstant(train);
    case PredictorKind::kLogistic:
      return FitLogistic(train, candidate.features, family.logistic);
    case PredictorKind::kTree:
      return FitTree(train, family.budget, candidate.features);
    case PredictorKind::kSelfEstimation: {
      Predictor p = SelfEstimationAdapter();
      return train.mode() == FeatureMode::kReactive ? MakeReactive(p) : p;
    }
    default:
      throw ValidationError("unsupported family");
  }
}

}  // namespace internal

// Estimates Q for `family` over `history` under `protocol`.
inline QReport EstimateQ(const EcosystemHistory& history,
                         const FamilySpec& family, const QProtocol& protocol) {
  const auto& split = protocol.split;
  if (!(split.train > 0 && split.validation > 0 && split.test > 0) ||
      std::abs(split.train + split.validation + split.test - 1.0) > 1e-9) {
    throw ValidationError("split fractions must be positive and sum to 1");
  }
  if (protocol.horizon < 0) throw ValidationError("horizon must be >= 0");

  const bool temporal =
      protocol.horizon > 0 ||
      (protocol.history_window && *protocol.history_window > 0);
  if (temporal && history.Timesteps().size() < 2) {
    throw ValidationError("temporal protocol requires more than one timestep");
  }
  const Dataset data =
      MakeDataset(history, {protocol.mode, protocol.history_window, protocol.horizon});
  if (data.size() < kMinRecordsForQ) {
    throw ValidationError("too few records for the split: need at least " +
                          std::to_string(kMinRecordsForQ) + ", have " +
                          std::to_string(data.size()));
  }

  const std::size_t n = data.size();
  const auto n_train = static_cast<std::size_t>(std::llround(split.train * n));
  const auto n_validation =
      static_cast<std::size_t>(std::llround(split.validation * n));
  if (n_train == 0 || n_validation == 0 || n_train + n_validation >= n) {
    throw ValidationError("split leaves an empty partition");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (temporal) {
    // Rows are already in time order; keep it.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return data.row(a).t < data.row(b).t;
    });
  } else {
    Rng rng(DeriveSeed(protocol.seed, 0x51u));
    rng.Shuffle(order);
  }
  const std::vector<std::size_t> train_rows(order.begin(), order.begin() + n_train);
  const std::vector<std::size_t> validation_rows(
      order.begin() + n_train, order.begin() + n_train + n_validation);
  const std::vector<std::size_t> test_rows(order.begin() + n_train + n_validation,
                                           order.end());
  const Dataset train = data.Subset(train_rows);
  const Dataset validation = data.Subset(validation_rows);
  const Dataset test = data.Subset(test_rows);

  const auto candidates = internal::EnumerateCandidates(family, data);
  std::vector<std::optional<Predictor>> fitted(candidates.size());
  std::vector<CandidateScore> scores(candidates.size());
  ParallelFor(candidates.size(),
              protocol.threads ? protocol.threads : WorkerThreads(),
              [&](std::size_t k) {
                Predictor p = internal::FitCandidate(family, candidates[k], train);
                scores[k] = {candidates[k].description,
                             MeanScore(protocol.rule, p, validation),
                             MeanScore(protocol.rule, p, test)};
                fitted[k] = std::move(p);
              });

  // Candidates are sorted by description, so the first minimum is the
  // lexicographic tie-break.
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k].validation_score < scores[best].validation_score) best = k;
  }
  QReport report;
  report.q_value = scores[best].test_score;
  report.best_description = scores[best].description;
  report.best_predictor = *fitted[best];
  report.candidates = std::move(scores);
  report.n_train = train.size();
  report.n_validation = validation.size();
  report.n_test = test.size();
  report.temporal_split = temporal;
  return report;
}

// Memoryless simplification: i.i.d. tuples, shuffled split, no history
// features, horizon 0.
inline QReport EstimateQMemoryless(const EcosystemHistory& history,
                                   const FamilySpec& family,
                                   QProtocol protocol) {
  protocol.horizon = 0;
  protocol.history_window.reset();
  return EstimateQ(history, family, protocol);
}

inline nlohmann::json QReportToJson(const QReport& report) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : report.candidates) {
    candidates.push_back({{"candidate", c.description},
                          {"val_score", c.validation_score},
                          {"test_score", c.test_score}});
  }
  return {{"q_value", report.q_value},
          {"best_candidate", report.best_description},
          {"best_predictor", report.best_predictor.ToJson()},
          {"candidates", std::move(candidates)},
          {"n_train", report.n_train},
          {"n_validation", report.n_validation},
          {"n_test", report.n_test},
          {"temporal_split", report.temporal_split}};
}

inline void WriteCandidateCsv(const QReport& report, std::ostream& out) {
  out << "candidate,val_score,test_score\n";
  for (const auto& c : report.candidates) {
    out << internal::QuoteCsv(c.description) << ','
        << FormatReal(c.validation_score) << ',' << FormatReal(c.test_score)
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Granularity: instance-level predictions rolled up to groups.

enum class GroupBy { kInstance, kSystem, kUser, kAll };

inline GroupBy ParseGroupBy(std::string_view text) {
  if (text == "instance") return GroupBy::kInstance;
  if (text == "system") return GroupBy::kSystem;
  if (text == "user") return GroupBy::kUser;
  if (text == "all") return GroupBy::kAll;
  throw ValidationError("unknown group_by '" + std::string(text) + "'");
}

struct GroupAggregate {
  std::string key;
  double predicted_mean = 0.0;
  double observed_mean = 0.0;
  std::size_t count = 0;
};

// Per-group mean of p_hat and of observed validity, sorted by group key.
inline std::vector<GroupAggregate> AggregatePredictions(const Predictor& predictor,
                                                        const Dataset& data,
                                                        GroupBy group_by) {
  const auto predictions = predictor.Predict(data);
  std::map<std::string, GroupAggregate> groups;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& row = data.row(i);
    std::string key;
    switch (group_by) {
      case GroupBy::kInstance: key = row.instance_id; break;
      case GroupBy::kSystem: key = row.system_id; break;
      case GroupBy::kUser: key = row.user_id; break;
      case GroupBy::kAll: key = "all"; break;
    }
    auto& g = groups[key];
    g.key = key;
    g.predicted_mean += predictions[i];
    g.observed_mean += row.validity;
    ++g.count;
  }
  std::vector<GroupAggregate> out;
  for (auto& [key, g] : groups) {
    g.predicted_mean /= static_cast<double>(g.count);
    g.observed_mean /= static_cast<double>(g.count);
    out.push_back(g);
  }
  return out;
}

}  // namespace validity_lab

#endif  // VALIDITY_LAB_UNPREDICTABILITY_HPP_
