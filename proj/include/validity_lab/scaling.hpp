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

// Power-law fits y = c * x^alpha for extrapolating an indicator to systems
// that have not been built.

#ifndef VALIDITY_LAB_SCALING_HPP_
#define VALIDITY_LAB_SCALING_HPP_

#include <algorithm>
#include <cmath>
#include <istream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "validity_lab/common.hpp"
#include "validity_lab/ecosystem.hpp"

namespace validity_lab {

struct ScalePoint {
  double x = 0.0;
  double y = 0.0;
};

struct ScalingLawModel {
  double exponent = 0.0;
  double scale = 1.0;
  double residual_std = 0.0;  // population std of ln-space residuals
  std::size_t n_points = 0;
  double x_min = 0.0;
  double x_max = 0.0;

  double Evaluate(double x) const { return scale * std::pow(x, exponent); }
};

// Ordinary least squares of ln y on ln x.
inline ScalingLawModel FitPowerLaw(std::span<const ScalePoint> points) {
  if (points.size() < 2) throw ValidationError("power-law fit needs >= 2 points");
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!(p.x > 0.0) || !(p.y > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError("power-law points must be finite and positive");
    }
    distinct.insert(p.x);
  }
  if (distinct.size() < 2) {
    throw ValidationError("power-law fit needs >= 2 distinct x values");
  }
  const double n = static_cast<double>(points.size());
  double mean_lx = 0.0, mean_ly = 0.0;
  for (const auto& p : points) {
    mean_lx += std::log(p.x);
    mean_ly += std::log(p.y);
  }
  mean_lx /= n;
  mean_ly /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.x) - mean_lx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.y) - mean_ly);
  }
  ScalingLawModel model;
  model.exponent = sxy / sxx;
  const double intercept = mean_ly - model.exponent * mean_lx;
  model.scale = std::exp(intercept);
  double ss = 0.0;
  for (const auto& p : points) {
    const double r = std::log(p.y) - (intercept + model.exponent * std::log(p.x));
    ss += r * r;
  }
  model.residual_std = std::sqrt(ss / n);
  model.n_points = points.size();
  model.x_min = *distinct.begin();
  model.x_max = *distinct.rbegin();
  return model;
}

struct HypotheticalPrediction {
  double estimate = 0.0;
  double band_low = 0.0;   // estimate * exp(-2 sigma)
  double band_high = 0.0;  // estimate * exp(+2 sigma)
  bool extrapolated = false;
};

inline HypotheticalPrediction PredictHypothetical(const ScalingLawModel& model,
                                                  double x) {
  if (!(x > 0.0)) throw ValidationError("hypothetical x must be positive");
  HypotheticalPrediction out;
  out.estimate = model.Evaluate(x);
  out.band_low = out.estimate * std::exp(-2.0 * model.residual_std);
  out.band_high = out.estimate * std::exp(2.0 * model.residual_std);
  out.extrapolated = x < model.x_min || x > model.x_max;
  return out;
}

inline nlohmann::json ScalingModelToJson(const ScalingLawModel& model) {
  return {{"exponent", model.exponent}, {"scale", model.scale},
          {"residual_std", model.residual_std}, {"n_points", model.n_points},
          {"x_min", model.x_min}, {"x_max", model.x_max}};
}

inline ScalingLawModel ScalingModelFromJson(const nlohmann::json& in) {
  try {
    ScalingLawModel model;
    model.exponent = in.at("exponent").get<double>();
    model.scale = in.at("scale").get<double>();
    model.residual_std = in.at("residual_std").get<double>();
    model.n_points = in.at("n_points").get<std::size_t>();
    model.x_min = in.at("x_min").get<double>();
    model.x_max = in.at("x_max").get<double>();
    if (!(model.scale > 0.0)) throw ValidationError("scale must be positive");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scaling model JSON: ") + e.what());
  }
}

// Reads an `x,y` CSV (header required, '#' comment lines skipped).
inline std::vector<ScalePoint> LoadScalePointsCsv(std::istream& in) {
  std::string line;
  bool header_seen = false;
  std::size_t row = 0;
  std::vector<ScalePoint> points;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "x,y") throw ParseError("scaling CSV header must be 'x,y'");
      header_seen = true;
      continue;
    }
    ++row;
    const auto fields = internal::SplitCsvLine(line, row);
    if (fields.size() != 2) {
      throw ParseError("row " + std::to_string(row) + ": expected 2 fields");
    }
    auto x = ParseReal(fields[0]);
    auto y = ParseReal(fields[1]);
    if (!x || !y) throw ParseError("row " + std::to_string(row) + ": bad number");
    points.push_back({*x, *y});
  }
  return points;
}

// Points y = scale * x^exponent * exp(N(0, log_noise)) on a log-spaced grid
// of x in [x_lo, x_hi].
inline std::vector<ScalePoint> SyntheticScalingPoints(std::size_t n, double scale,
                                                      double exponent,
                                                      double log_noise,
                                                      double x_lo, double x_hi,
                                                      std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, 0x5C));
  std::vector<ScalePoint> points;
  const double llo = std::log(x_lo);
  const double lhi = std::log(x_hi);
  for (std::size_t k = 0; k < n; ++k) {
    const double lx = n == 1 ? llo : llo + (lhi - llo) * k / static_cast<double>(n - 1);
    const double x = std::exp(lx);
    points.push_back({x, scale * std::pow(x, exponent) * std::exp(rng.Normal(0.0, log_noise))});
  }
  return points;
}

}  // namespace validity_lab

#endif  // VALIDITY_LAB_SCALING_HPP_
