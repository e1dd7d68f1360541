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

// Proper scoring rules and validity aggregates.

#ifndef VALIDITY_LAB_SCORING_HPP_
#define VALIDITY_LAB_SCORING_HPP_

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "validity_lab/common.hpp"
#include "validity_lab/ecosystem.hpp"

namespace validity_lab {

enum class ScoringKind { kBrier, kLogLoss };

// Brier is the squared error (p_hat - v)^2, which also covers graded validity.
// Log loss uses the natural logarithm and is defined for binary v only.
struct ScoringRule {
  ScoringKind kind = ScoringKind::kBrier;
  double epsilon = 1e-15;

  static ScoringRule Brier() { return {ScoringKind::kBrier, 1e-15}; }
  static ScoringRule LogLoss(double epsilon = 1e-15) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
      throw ValidationError("log-loss epsilon must lie in (0, 0.5)");
    }
    return {ScoringKind::kLogLoss, epsilon};
  }
};

inline std::string_view ToString(ScoringKind kind) {
  return kind == ScoringKind::kBrier ? "brier" : "logloss";
}

inline ScoringRule ParseScoringRule(std::string_view name) {
  if (name == "brier") return ScoringRule::Brier();
  if (name == "logloss" || name == "log_loss") return ScoringRule::LogLoss();
  throw ValidationError("unknown scoring rule '" + std::string(name) + "'");
}

// Estimated probability that V = 1 (binary) or expected validity (graded).
class ValidityEstimate {
 public:
  explicit ValidityEstimate(double p_hat) : p_hat_(p_hat) {
    if (!(p_hat >= 0.0 && p_hat <= 1.0)) {
      throw ValidationError("p_hat " + FormatReal(p_hat) + " outside [0, 1]");
    }
  }
  double value() const { return p_hat_; }

 private:
  double p_hat_;
};

// Loss of `estimate` against observed validity v. Lower is better.
inline double Score(const ScoringRule& rule, ValidityEstimate estimate,
                    double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError("validity " + FormatReal(v) + " outside [0, 1]");
  }
  const double p = estimate.value();
  if (rule.kind == ScoringKind::kBrier) return (p - v) * (p - v);
  if (v != 0.0 && v != 1.0) {
    throw ValidationError("log loss is undefined for graded validity " +
                          FormatReal(v));
  }
  const double clipped = std::clamp(p, rule.epsilon, 1.0 - rule.epsilon);
  return v == 1.0 ? -std::log(clipped) : -std::log(1.0 - clipped);
}

inline double Score(const ScoringRule& rule, double p_hat, double v) {
  return Score(rule, ValidityEstimate(p_hat), v);
}

// Empirical expected validity: the mean validity over all records.
inline double ExpectedValidity(const EcosystemHistory& history) {
  if (history.empty()) {
    throw ValidationError("expected validity of an empty history");
  }
  double sum = 0.0;
  for (const auto& record : history.records()) sum += record.validity;
  return sum / static_cast<double>(history.size());
}

inline double MeanScore(const ScoringRule& rule,
                        std::span<const double> predictions,
                        std::span<const double> validities) {
  if (predictions.size() != validities.size()) {
    throw ValidationError("prediction/validity length mismatch");
  }
  if (predictions.empty()) throw ValidationError("mean score of an empty set");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    sum += Score(rule, predictions[i], validities[i]);
  }
  return sum / static_cast<double>(predictions.size());
}

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean_p = 0.0;  // 0 for empty bins
  double mean_v = 0.0;
  std::size_t count = 0;
};

// Equal-width reliability bins over [0, 1]. Bin k holds p in [k/B, (k+1)/B);
// the last bin also holds p = 1.
inline std::vector<CalibrationBin> CalibrationTable(
    std::span<const double> predictions, std::span<const double> validities,
    int bins) {
  if (bins < 2) throw ValidationError("calibration table needs >= 2 bins");
  if (predictions.size() != validities.size()) {
    throw ValidationError("prediction/validity length mismatch");
  }
  std::vector<CalibrationBin> table(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) {
    table[k].lo = static_cast<double>(k) / bins;
    table[k].hi = static_cast<double>(k + 1) / bins;
  }
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    int k = static_cast<int>(std::floor(predictions[i] * bins));
    k = std::clamp(k, 0, bins - 1);
    table[k].mean_p += predictions[i];
    table[k].mean_v += validities[i];
    ++table[k].count;
  }
  for (auto& bin : table) {
    if (bin.count > 0) {
      bin.mean_p /= static_cast<double>(bin.count);
      bin.mean_v /= static_cast<double>(bin.count);
    }
  }
  return table;
}

inline void WriteCalibrationCsv(const std::vector<CalibrationBin>& table,
                                std::ostream& out) {
  out << "bin_lo,bin_hi,mean_p,mean_v,count\n";
  for (const auto& bin : table) {
    out << FormatReal(bin.lo) << ',' << FormatReal(bin.hi) << ','
        << FormatReal(bin.mean_p) << ',' << FormatReal(bin.mean_v) << ','
        << bin.count << '\n';
  }
}

}  // namespace validity_lab

#endif  // VALIDITY_LAB_SCORING_HPP_
