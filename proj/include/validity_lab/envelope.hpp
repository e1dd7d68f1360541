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

// Validity envelopes, accuracy-rejection curves, and the validity vs.
// predictability Pareto frontier.

#ifndef VALIDITY_LAB_ENVELOPE_HPP_
#define VALIDITY_LAB_ENVELOPE_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "validity_lab/common.hpp"
#include "validity_lab/dataset.hpp"
#include "validity_lab/predictors.hpp"
#include "validity_lab/scoring.hpp"

namespace validity_lab {

struct EnvelopeSpec {
  double omega = 0.0;  // minimum accepted expected validity
  double sigma = std::numeric_limits<double>::infinity();  // maximum loss
  std::optional<double> tau;  // acceptance threshold on p_hat; swept if unset

  void Validate() const {
    if (!(omega >= 0.0 && omega <= 1.0)) {
      throw ValidationError("omega must lie in [0, 1]");
    }
    if (!(sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
    if (tau && !(*tau >= 0.0 && *tau <= 1.0)) {
      throw ValidationError("tau must lie in [0, 1]");
    }
  }
};

struct EnvelopeReport {
  double tau_used = 0.0;
  double coverage = 0.0;
  std::size_t accepted = 0;
  std::optional<double> accepted_validity;  // absent when coverage is 0
  std::optional<double> accepted_loss;
  bool satisfied = false;
};

// Envelope at a fixed threshold over precomputed predictions.
inline EnvelopeReport EnvelopeAt(std::span<const double> predictions,
                                 std::span<const double> validities,
                                 const ScoringRule& rule, double omega,
                                 double sigma, double tau) {
  EnvelopeReport report;
  report.tau_used = tau;
  double validity_sum = 0.0;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] < tau) continue;
    ++report.accepted;
    validity_sum += validities[i];
    loss_sum += Score(rule, predictions[i], validities[i]);
  }
  report.coverage = static_cast<double>(report.accepted) /
                    static_cast<double>(predictions.size());
  if (report.accepted > 0) {
    report.accepted_validity = validity_sum / static_cast<double>(report.accepted);
    report.accepted_loss = loss_sum / static_cast<double>(report.accepted);
    report.satisfied = *report.accepted_validity >= omega &&
                       *report.accepted_loss <= sigma;
  }
  return report;
}

// Thresholds swept when tau is not given: every distinct p_hat plus 0 and 1.
inline std::vector<double> TauGrid(std::span<const double> predictions) {
  std::set<double> grid(predictions.begin(), predictions.end());
  grid.insert(0.0);
  grid.insert(1.0);
  return {grid.begin(), grid.end()};
}

// Accepts records with p_hat >= tau. Without tau, returns the smallest grid
// threshold meeting both constraints (largest coverage) or, if none does, the
// failing report with the largest coverage.
inline EnvelopeReport ComputeEnvelope(const Predictor& predictor,
                                      const Dataset& data,
                                      const EnvelopeSpec& spec,
                                      const ScoringRule& rule) {
  spec.Validate();
  if (data.empty()) throw ValidationError("envelope of an empty dataset");
  const auto predictions = predictor.Predict(data);
  const auto validities = data.validities();
  if (spec.tau) {
    return EnvelopeAt(predictions, validities, rule, spec.omega, spec.sigma,
                      *spec.tau);
  }
  std::optional<EnvelopeReport> best_failure;
  for (double tau : TauGrid(predictions)) {
    auto report =
        EnvelopeAt(predictions, validities, rule, spec.omega, spec.sigma, tau);
    if (report.satisfied) return report;
    if (!best_failure || report.coverage > best_failure->coverage) {
      best_failure = report;
    }
  }
  return *best_failure;
}

inline nlohmann::json EnvelopeToJson(const EnvelopeReport& report) {
  auto optional = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"tau_used", report.tau_used},
          {"coverage", report.coverage},
          {"accepted", report.accepted},
          {"accepted_validity", optional(report.accepted_validity)},
          {"accepted_loss", optional(report.accepted_loss)},
          {"satisfied", report.satisfied}};
}

// ---------------------------------------------------------------------------
// Accuracy-rejection curve.

struct CurvePoint {
  double rejection_rate = 0.0;
  double accepted_validity = 0.0;
};

// Accepted validity at full rejection, by convention.
inline constexpr double kFullRejectionValidity = 1.0;

// Rejects the k lowest predictions for k = 0..n (ties in record order) and
// reports the mean validity of the rest. Returns n + 1 points.
inline std::vector<CurvePoint> RejectionCurve(std::span<const double> predictions,
                                              std::span<const double> validities) {
  if (predictions.size() != validities.size()) {
    throw ValidationError("prediction/validity length mismatch");
  }
  if (predictions.empty()) throw ValidationError("rejection curve of an empty set");
  const std::size_t n = predictions.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a] < predictions[b];
  });
  // Suffix sums over the rejection order.
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) suffix[k] = suffix[k + 1] + validities[order[k]];
  std::vector<CurvePoint> curve;
  curve.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double rate = static_cast<double>(k) / static_cast<double>(n);
    const double accepted = k == n ? kFullRejectionValidity
                                   : suffix[k] / static_cast<double>(n - k);
    curve.push_back({rate, accepted});
  }
  return curve;
}

inline std::vector<CurvePoint> RejectionCurve(const Predictor& predictor,
                                              const Dataset& data) {
  const auto predictions = predictor.Predict(data);
  const auto validities = data.validities();
  return RejectionCurve(predictions, validities);
}

// Trapezoidal area under accepted validity over rejection rate.
inline double Aurc(std::span<const CurvePoint> curve) {
  if (curve.size() < 2) throw ValidationError("AURC needs at least 2 points");
  double area = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    area += (curve[k].rejection_rate - curve[k - 1].rejection_rate) *
            (curve[k].accepted_validity + curve[k - 1].accepted_validity) / 2.0;
  }
  return area;
}

inline void WriteCurveCsv(std::span<const CurvePoint> curve, std::ostream& out) {
  out << "rejection_rate,accepted_validity\n";
  for (const auto& point : curve) {
    out << FormatReal(point.rejection_rate) << ','
        << FormatReal(point.accepted_validity) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Pareto frontier over (expected validity, unpredictability).

struct ParetoPoint {
  std::string system_id;
  double v = 0.0;
  double q = 0.0;
  bool dominated = false;
};

// a dominates b: at least as valid, at most as unpredictable, strictly better
// in one of the two.
inline bool Dominates(const ParetoPoint& a, const ParetoPoint& b) {
  return a.v >= b.v && a.q <= b.q && (a.v > b.v || a.q < b.q);
}

// Marks dominance in place and returns the non-dominated points by ascending q
// (then descending v, then system id). Identical points are all kept.
inline std::vector<ParetoPoint> ParetoFrontier(std::vector<ParetoPoint>& points) {
  for (const auto& p : points) {
    if (!std::isfinite(p.v) || !std::isfinite(p.q)) {
      throw ValidationError("Pareto point '" + p.system_id + "' is not finite");
    }
  }
  for (auto& p : points) {
    p.dominated = std::any_of(points.begin(), points.end(),
                              [&](const ParetoPoint& other) { return Dominates(other, p); });
  }
  std::vector<ParetoPoint> frontier;
  for (const auto& p : points) {
    if (!p.dominated) frontier.push_back(p);
  }
  std::sort(frontier.begin(), frontier.end(),
            [](const ParetoPoint& a, const ParetoPoint& b) {
              if (a.q != b.q) return a.q < b.q;
              if (a.v != b.v) return a.v > b.v;
              return a.system_id < b.system_id;
            });
  return frontier;
}

inline std::vector<ParetoPoint> ParetoFrontier(std::vector<ParetoPoint>&& points) {
  std::vector<ParetoPoint> copy = std::move(points);
  return ParetoFrontier(copy);
}

inline void WriteParetoCsv(std::span<const ParetoPoint> points, std::ostream& out) {
  out << "system_id,v,q,dominated\n";
  for (const auto& p : points) {
    out << internal::QuoteCsv(p.system_id) << ',' << FormatReal(p.v) << ','
        << FormatReal(p.q) << ',' << (p.dominated ? "true" : "false") << '\n';
  }
}

}  // namespace validity_lab

#endif  // VALIDITY_LAB_ENVELOPE_HPP_
