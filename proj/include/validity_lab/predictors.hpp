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

// Validity predictors: budget-bounded families that map context features to
// an estimated validity p_hat in [0, 1].

#ifndef VALIDITY_LAB_PREDICTORS_HPP_
#define VALIDITY_LAB_PREDICTORS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "validity_lab/common.hpp"
#include "validity_lab/dataset.hpp"
#include "validity_lab/scoring.hpp"

namespace validity_lab {

enum class PredictorKind {
  kConstant,
  kLogistic,
  kTree,
  kSelfEstimation,
  kPreRecorded,
};

inline std::string_view ToString(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::kConstant: return "constant";
    case PredictorKind::kLogistic: return "logistic";
    case PredictorKind::kTree: return "tree";
    case PredictorKind::kSelfEstimation: return "self_estimation";
    case PredictorKind::kPreRecorded: return "pre_recorded";
  }
  return "unknown";
}

inline PredictorKind ParsePredictorKind(std::string_view text) {
  for (auto kind : {PredictorKind::kConstant, PredictorKind::kLogistic,
                    PredictorKind::kTree, PredictorKind::kSelfEstimation,
                    PredictorKind::kPreRecorded}) {
    if (ToString(kind) == text) return kind;
  }
  throw ValidationError("unknown predictor kind '" + std::string(text) + "'");
}

struct LogisticOptions {
  double learning_rate = 0.5;
  int max_iterations = 5000;
  double tolerance = 1e-9;  // stop when the loss improves by less than this
  double l2 = 1e-6;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;     // taken when x[feature] <= threshold
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// A fitted, immutable validity predictor. Predictions always lie in [0, 1] and
// only the columns listed in feature_names() are read.
class Predictor {
 public:
  PredictorKind kind() const { return kind_; }
  FeatureMode mode() const { return mode_; }
  const std::vector<std::string>& feature_names() const { return features_; }
  double training_loss() const { return training_loss_; }

  double constant_value() const { return constant_; }
  const std::vector<double>& weights() const { return weights_; }
  double intercept() const { return intercept_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(
        nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
  }

  std::vector<double> Predict(const Dataset& data) const {
    if (mode_ == FeatureMode::kReactive && !data.HasOutputFeatures()) {
      throw ValidationError(
          "reactive predictor applied to a dataset without output features");
    }
    const auto columns = ResolveColumns(data);
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      out[i] = PredictRow(data, i, columns);
    }
    return out;
  }

  friend bool operator==(const Predictor&, const Predictor&) = default;

  nlohmann::json ToJson() const {
    nlohmann::json out = {
        {"kind", std::string(ToString(kind_))},
        {"mode", std::string(ToString(mode_))},
        {"feature_names", features_},
        {"training_loss", training_loss_},
    };
    switch (kind_) {
      case PredictorKind::kConstant:
        out["value"] = constant_;
        break;
      case PredictorKind::kLogistic:
        out["weights"] = weights_;
        out["intercept"] = intercept_;
        out["means"] = means_;
        out["scales"] = scales_;
        break;
      case PredictorKind::kTree: {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& node : nodes_) {
          nodes.push_back({{"feature", node.feature},
                           {"threshold", node.threshold},
                           {"left", node.left},
                           {"right", node.right},
                           {"value", node.value}});
        }
        out["nodes"] = std::move(nodes);
        break;
      }
      case PredictorKind::kSelfEstimation:
        break;
      case PredictorKind::kPreRecorded:
        out["table"] = table_;
        break;
    }
    return out;
  }

  static Predictor FromJson(const nlohmann::json& in) {
    try {
      Predictor p;
      p.kind_ = ParsePredictorKind(in.at("kind").get<std::string>());
      p.mode_ = ParseFeatureMode(in.at("mode").get<std::string>());
      p.features_ = in.at("feature_names").get<std::vector<std::string>>();
      p.training_loss_ = in.value("training_loss", 0.0);
      switch (p.kind_) {
        case PredictorKind::kConstant:
          p.constant_ = in.at("value").get<double>();
          break;
        case PredictorKind::kLogistic:
          p.weights_ = in.at("weights").get<std::vector<double>>();
          p.intercept_ = in.at("intercept").get<double>();
          p.means_ = in.at("means").get<std::vector<double>>();
          p.scales_ = in.at("scales").get<std::vector<double>>();
          if (p.weights_.size() != p.features_.size() ||
              p.means_.size() != p.features_.size() ||
              p.scales_.size() != p.features_.size()) {
            throw ValidationError("logistic parameter sizes disagree");
          }
          break;
        case PredictorKind::kTree:
          for (const auto& node : in.at("nodes")) {
            p.nodes_.push_back({node.at("feature").get<int>(),
                                node.at("threshold").get<double>(),
                                node.at("left").get<int>(),
                                node.at("right").get<int>(),
                                node.at("value").get<double>()});
          }
          p.CheckTree();
          break;
        case PredictorKind::kSelfEstimation:
          break;
        case PredictorKind::kPreRecorded:
          p.table_ = in.at("table").get<std::map<std::string, double>>();
          break;
      }
      return p;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("predictor JSON: ") + e.what());
    }
  }

 private:
  friend Predictor FitConstant(const Dataset&);
  friend Predictor FitLogistic(const Dataset&, std::span<const std::string>,
                               const LogisticOptions&, std::vector<double>*);
  friend Predictor FitTree(const Dataset&, int,
                           std::span<const std::string>);
  friend Predictor SelfEstimationAdapter();
  friend Predictor PreRecordedAdapter(std::map<std::string, double>);
  friend Predictor MakeReactive(const Predictor&);

  std::vector<std::size_t> ResolveColumns(const Dataset& data) const {
    std::vector<std::size_t> columns;
    std::string missing;
    for (const auto& name : features_) {
      if (auto c = data.ColumnIndex(name)) {
        columns.push_back(*c);
      } else {
        missing += (missing.empty() ? "" : ", ") + name;
      }
    }
    if (!missing.empty()) {
      throw ValidationError("dataset schema lacks features: " + missing);
    }
    return columns;
  }

  double PredictRow(const Dataset& data, std::size_t i,
                    const std::vector<std::size_t>& columns) const {
    switch (kind_) {
      case PredictorKind::kConstant:
        return constant_;
      case PredictorKind::kLogistic: {
        double z = intercept_;
        for (std::size_t k = 0; k < columns.size(); ++k) {
          z += weights_[k] * (data.value(i, columns[k]) - means_[k]) / scales_[k];
        }
        return Sigmoid(z);
      }
      case PredictorKind::kTree: {
        int node = 0;
        while (!nodes_[node].is_leaf()) {
          const auto& n = nodes_[node];
          node = data.value(i, columns[n.feature]) <= n.threshold ? n.left : n.right;
        }
        return nodes_[node].value;
      }
      case PredictorKind::kSelfEstimation: {
        const auto& confidence = data.row(i).self_confidence;
        if (!confidence) {
          throw ValidationError("record '" + data.row(i).key +
                                "' carries no self_confidence");
        }
        return *confidence;
      }
      case PredictorKind::kPreRecorded: {
        auto it = table_.find(data.row(i).key);
        if (it == table_.end()) {
          throw ValidationError("no recorded prediction for record '" +
                                data.row(i).key + "'");
        }
        return it->second;
      }
    }
    return 0.0;
  }

  void CheckTree() const {
    if (nodes_.empty()) throw ValidationError("tree without nodes");
    const int n = static_cast<int>(nodes_.size());
    for (const auto& node : nodes_) {
      if (node.is_leaf()) continue;
      if (node.feature >= static_cast<int>(features_.size()) ||
          node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n) {
        throw ValidationError("malformed tree node");
      }
    }
  }

  PredictorKind kind_ = PredictorKind::kConstant;
  FeatureMode mode_ = FeatureMode::kAnticipative;
  std::vector<std::string> features_;
  double training_loss_ = 0.0;

  double constant_ = 0.0;
  std::vector<double> weights_;
  double intercept_ = 0.0;
  std::vector<double> means_;
  std::vector<double> scales_;
  std::vector<TreeNode> nodes_;
  std::map<std::string, double> table_;
};

// Mean training validity.
inline Predictor FitConstant(const Dataset& data) {
  if (data.empty()) throw ValidationError("cannot fit on an empty dataset");
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) sum += data.validity(i);
  Predictor p;
  p.kind_ = PredictorKind::kConstant;
  p.mode_ = data.mode();
  p.constant_ = sum / static_cast<double>(data.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    loss += (p.constant_ - data.validity(i)) * (p.constant_ - data.validity(i));
  }
  p.training_loss_ = loss / static_cast<double>(data.size());
  return p;
}

// sigmoid(w . standardize(x) + c) fitted by full-batch gradient descent on mean
// log loss (binary validity) or mean squared error (graded), plus an L2
// penalty on w. Starts from w = 0 and c = logit(mean validity). A step that
// would increase the objective is retried with half the learning rate, so the
// recorded per-iteration objective is non-increasing.
inline Predictor FitLogistic(const Dataset& data,
                             std::span<const std::string> feature_subset,
                             const LogisticOptions& options = {},
                             std::vector<double>* loss_trace = nullptr) {
  if (data.empty()) throw ValidationError("cannot fit on an empty dataset");
  std::vector<std::size_t> columns;
  for (const auto& name : feature_subset) {
    auto c = data.ColumnIndex(name);
    if (!c) throw ValidationError("feature '" + name + "' not in dataset schema");
    columns.push_back(*c);
  }
  const std::size_t n = data.size();
  const std::size_t d = columns.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool binary = data.validity_kind() == ValidityKind::kBinary;

  Predictor p;
  p.kind_ = PredictorKind::kLogistic;
  p.mode_ = data.mode();
  p.features_.assign(feature_subset.begin(), feature_subset.end());
  p.means_.assign(d, 0.0);
  p.scales_.assign(d, 1.0);

  // Standardized design matrix, row-major.
  std::vector<double> x(n * d);
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += data.value(i, columns[k]);
    mean *= inv_n;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = data.value(i, columns[k]) - mean;
      var += delta * delta;
    }
    const double stddev = std::sqrt(var * inv_n);
    p.means_[k] = mean;
    p.scales_[k] = stddev > 1e-12 ? stddev : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i * d + k] = (data.value(i, columns[k]) - mean) / p.scales_[k];
    }
  }
  const auto y = data.validities();

  auto objective = [&](const std::vector<double>& w, double c) {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = c;
      for (std::size_t k = 0; k < d; ++k) z += w[k] * x[i * d + k];
      if (binary) {
        // log(1 + exp(-z)) for y = 1, log(1 + exp(z)) for y = 0.
        const double s = y[i] == 1.0 ? -z : z;
        loss += s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
      } else {
        const double r = Sigmoid(z) - y[i];
        loss += r * r;
      }
    }
    double penalty = 0.0;
    for (double wk : w) penalty += wk * wk;
    return loss * inv_n + 0.5 * options.l2 * penalty;
  };

  double mean_y = std::accumulate(y.begin(), y.end(), 0.0) * inv_n;
  mean_y = std::clamp(mean_y, 1e-12, 1.0 - 1e-12);
  std::vector<double> w(d, 0.0);
  double c = std::log(mean_y / (1.0 - mean_y));
  double loss = objective(w, c);
  if (!std::isfinite(loss)) {
    throw ValidationError("non-finite loss at iteration 0");
  }
  if (loss_trace) {
    loss_trace->clear();
    loss_trace->push_back(loss);
  }

  std::vector<double> grad_w(d);
  std::vector<double> trial_w(d);
  for (int iteration = 1; iteration <= options.max_iterations; ++iteration) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = c;
      for (std::size_t k = 0; k < d; ++k) z += w[k] * x[i * d + k];
      const double s = Sigmoid(z);
      const double g = binary ? s - y[i] : 2.0 * (s - y[i]) * s * (1.0 - s);
      grad_c += g;
      for (std::size_t k = 0; k < d; ++k) grad_w[k] += g * x[i * d + k];
    }
    grad_c *= inv_n;
    for (std::size_t k = 0; k < d; ++k) {
      grad_w[k] = grad_w[k] * inv_n + options.l2 * w[k];
    }

    double rate = options.learning_rate;
    double trial_loss = loss;
    double trial_c = c;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      for (std::size_t k = 0; k < d; ++k) trial_w[k] = w[k] - rate * grad_w[k];
      trial_c = c - rate * grad_c;
      trial_loss = objective(trial_w, trial_c);
      if (!std::isfinite(trial_loss)) {
        throw ValidationError("non-finite loss at iteration " +
                              std::to_string(iteration));
      }
      if (trial_loss <= loss) {
        improved = true;
        break;
      }
      rate *= 0.5;
    }
    if (!improved) break;
    const double gain = loss - trial_loss;
    w = trial_w;
    c = trial_c;
    loss = trial_loss;
    if (loss_trace) loss_trace->push_back(loss);
    if (gain < options.tolerance) break;
  }

  p.weights_ = std::move(w);
  p.intercept_ = c;
  p.training_loss_ = loss;
  return p;
}

// Greedy regression tree on squared error, grown best-split-first until it has
// `leaf_budget` leaves or no split reduces the error. Ties go to the lowest
// feature index, then the lowest threshold, then the earliest leaf. An empty
// `features` span means every dataset column.
inline Predictor FitTree(const Dataset& data, int leaf_budget,
                         std::span<const std::string> features = {}) {
  if (data.empty()) throw ValidationError("cannot fit on an empty dataset");
  if (leaf_budget < 1) throw ValidationError("leaf budget must be >= 1");

  Predictor p;
  p.kind_ = PredictorKind::kTree;
  p.mode_ = data.mode();
  std::vector<std::size_t> columns;
  if (features.empty()) {
    p.features_ = data.columns();
    columns.resize(data.width());
    std::iota(columns.begin(), columns.end(), 0);
  } else {
    for (const auto& name : features) {
      auto c = data.ColumnIndex(name);
      if (!c) throw ValidationError("feature '" + name + "' not in dataset schema");
      columns.push_back(*c);
      p.features_.push_back(name);
    }
  }

  struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };
  struct Leaf {
    int node = 0;
    std::vector<std::size_t> rows;
    Split split;
  };

  auto mean_of = [&](const std::vector<std::size_t>& rows) {
    double sum = 0.0;
    for (auto i : rows) sum += data.validity(i);
    return sum / static_cast<double>(rows.size());
  };

  auto best_split = [&](const std::vector<std::size_t>& rows) {
    Split best;
    const double count = static_cast<double>(rows.size());
    double total = 0.0, total_sq = 0.0;
    for (auto i : rows) {
      total += data.validity(i);
      total_sq += data.validity(i) * data.validity(i);
    }
    const double parent_sse = total_sq - total * total / count;
    std::vector<std::size_t> order = rows;
    for (std::size_t f = 0; f < columns.size(); ++f) {
      const std::size_t col = columns[f];
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.value(a, col) < data.value(b, col);
      });
      double left = 0.0, left_sq = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const double v = data.validity(order[k]);
        left += v;
        left_sq += v * v;
        const double here = data.value(order[k], col);
        const double next = data.value(order[k + 1], col);
        if (!(here < next)) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = count - nl;
        const double right = total - left;
        const double right_sq = total_sq - left_sq;
        const double sse = (left_sq - left * left / nl) + (right_sq - right * right / nr);
        const double gain = parent_sse - sse;
        if (gain > best.gain + 1e-12) {
          best = {gain, static_cast<int>(f), here + (next - here) / 2.0};
        }
      }
    }
    return best;
  };

  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  p.nodes_.push_back({-1, 0.0, -1, -1, mean_of(all)});
  std::vector<Leaf> leaves;
  leaves.push_back({0, all, best_split(all)});

  while (static_cast<int>(leaves.size()) < leaf_budget) {
    std::size_t chosen = leaves.size();
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      if (leaves[l].split.feature < 0) continue;
      if (chosen == leaves.size() ||
          leaves[l].split.gain > leaves[chosen].split.gain + 1e-12) {
        chosen = l;
      }
    }
    if (chosen == leaves.size()) break;
    Leaf parent = std::move(leaves[chosen]);
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(chosen));
    const std::size_t col = columns[parent.split.feature];
    std::vector<std::size_t> left_rows, right_rows;
    for (auto i : parent.rows) {
      (data.value(i, col) <= parent.split.threshold ? left_rows : right_rows).push_back(i);
    }
    const int left_node = static_cast<int>(p.nodes_.size());
    p.nodes_.push_back({-1, 0.0, -1, -1, mean_of(left_rows)});
    const int right_node = static_cast<int>(p.nodes_.size());
    p.nodes_.push_back({-1, 0.0, -1, -1, mean_of(right_rows)});
    auto& node = p.nodes_[parent.node];
    node.feature = parent.split.feature;
    node.threshold = parent.split.threshold;
    node.left = left_node;
    node.right = right_node;
    // Keep leaves ordered by node index so ties resolve to the earliest leaf.
    Split left_split = best_split(left_rows);
    Split right_split = best_split(right_rows);
    leaves.push_back({left_node, std::move(left_rows), left_split});
    leaves.push_back({right_node, std::move(right_rows), right_split});
  }

  double sse = 0.0;
  const auto fitted = p.Predict(data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    sse += (fitted[i] - data.validity(i)) * (fitted[i] - data.validity(i));
  }
  p.training_loss_ = sse / static_cast<double>(data.size());
  return p;
}

// Replays each record's logged self_confidence as p_hat.
inline Predictor SelfEstimationAdapter() {
  Predictor p;
  p.kind_ = PredictorKind::kSelfEstimation;
  return p;
}

// Replays externally recorded judgments keyed by InteractionRecord::Key().
inline Predictor PreRecordedAdapter(std::map<std::string, double> predictions) {
  for (const auto& [key, value] : predictions) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw ValidationError("recorded prediction for '" + key +
                            "' outside [0, 1]");
    }
  }
  Predictor p;
  p.kind_ = PredictorKind::kPreRecorded;
  p.table_ = std::move(predictions);
  return p;
}

// Same predictor, applied after the base system has run: evaluation datasets
// must carry output features.
inline Predictor MakeReactive(const Predictor& base) {
  Predictor p = base;
  p.mode_ = FeatureMode::kReactive;
  return p;
}

inline double MeanScore(const ScoringRule& rule, const Predictor& predictor,
                        const Dataset& data) {
  if (data.empty()) throw ValidationError("mean score of an empty dataset");
  const auto predictions = predictor.Predict(data);
  const auto validities = data.validities();
  return MeanScore(rule, predictions, validities);
}

inline std::vector<CalibrationBin> CalibrationTable(const Predictor& predictor,
                                                    const Dataset& data,
                                                    int bins) {
  if (bins < 2) throw ValidationError("calibration table needs >= 2 bins");
  const auto predictions = predictor.Predict(data);
  const auto validities = data.validities();
  return CalibrationTable(predictions, validities, bins);
}

}  // namespace validity_lab

#endif  // VALIDITY_LAB_PREDICTORS_HPP_
