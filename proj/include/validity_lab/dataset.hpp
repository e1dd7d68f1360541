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

#ifndef VALIDITY_LAB_DATASET_HPP_
#define VALIDITY_LAB_DATASET_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "validity_lab/common.hpp"
#include "validity_lab/ecosystem.hpp"

namespace validity_lab {

struct DatasetOptions {
  FeatureMode mode = FeatureMode::kAnticipative;
  // Appends h_mean_validity / h_prior_count when set and > 0.
  std::optional<int> history_window;
  // Pairs features at t with the validity h records later in the same
  // (system, user) stream.
  int horizon = 0;
};

// Dense feature matrix (row-major) with targets and row metadata; the form
// predictors are fitted and evaluated on.
class Dataset {
 public:
  struct Row {
    std::int64_t t = 0;
    std::string key;
    std::string instance_id;
    std::string system_id;
    std::string user_id;
    double validity = 0.0;
    std::optional<double> self_confidence;
  };

  Dataset() = default;
  Dataset(std::vector<std::string> columns, ValidityKind kind, FeatureMode mode)
      : columns_(std::move(columns)), kind_(kind), mode_(mode) {}

  void AddRow(Row row, std::span<const double> features) {
    if (features.size() != columns_.size()) {
      throw ValidationError("row width does not match dataset schema");
    }
    values_.insert(values_.end(), features.begin(), features.end());
    rows_.push_back(std::move(row));
  }

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::size_t width() const { return columns_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  ValidityKind validity_kind() const { return kind_; }
  FeatureMode mode() const { return mode_; }

  const Row& row(std::size_t i) const { return rows_[i]; }
  double validity(std::size_t i) const { return rows_[i].validity; }
  std::span<const double> features(std::size_t i) const {
    return {values_.data() + i * columns_.size(), columns_.size()};
  }
  double value(std::size_t i, std::size_t column) const {
    return values_[i * columns_.size() + column];
  }

  std::vector<double> validities() const {
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r.validity);
    return out;
  }

  std::optional<std::size_t> ColumnIndex(std::string_view name) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (columns_[c] == name) return c;
    }
    return std::nullopt;
  }

  bool HasOutputFeatures() const {
    for (const auto& column : columns_) {
      if (column.starts_with("o_")) return true;
    }
    return false;
  }

  Dataset Subset(std::span<const std::size_t> indices) const {
    Dataset out(columns_, kind_, mode_);
    out.rows_.reserve(indices.size());
    out.values_.reserve(indices.size() * columns_.size());
    for (std::size_t i : indices) out.AddRow(rows_[i], features(i));
    return out;
  }

 private:
  std::vector<std::string> columns_;
  ValidityKind kind_ = ValidityKind::kGraded;
  FeatureMode mode_ = FeatureMode::kAnticipative;
  std::vector<Row> rows_;
  std::vector<double> values_;
};

// Builds the evaluation dataset for `history`.
//
// History features for a row summarize its system's outcomes strictly before
// the row's timestep when horizon == 0 (the target itself is unknown), and up
// to and including the row's timestep when horizon >= 1 (the interaction at t
// has completed when predicting t + h).
inline Dataset MakeDataset(const EcosystemHistory& history,
                           const DatasetOptions& options = {}) {
  if (options.horizon < 0) throw ValidationError("horizon must be >= 0");
  const auto records = history.records();
  const bool with_history = options.history_window && *options.history_window > 0;

  std::vector<FeatureVector> featurized(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    featurized[i] = Featurize(records[i], options.mode);
  }
  if (with_history) {
    SystemOutcomeTracker tracker(*options.history_window);
    std::size_t begin = 0;
    while (begin < records.size()) {
      std::size_t end = begin;
      while (end < records.size() && records[end].t == records[begin].t) ++end;
      if (options.horizon == 0) {
        for (std::size_t i = begin; i < end; ++i) {
          AppendHistoryFeatures(featurized[i],
                                tracker.Summary(records[i].system_id));
        }
      }
      for (std::size_t i = begin; i < end; ++i) {
        tracker.Observe(records[i].system_id, records[i].validity);
      }
      if (options.horizon > 0) {
        for (std::size_t i = begin; i < end; ++i) {
          AppendHistoryFeatures(featurized[i],
                                tracker.Summary(records[i].system_id));
        }
      }
      begin = end;
    }
  }

  // Source/target pairs.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (options.horizon == 0) {
    for (std::size_t i = 0; i < records.size(); ++i) pairs.emplace_back(i, i);
  } else {
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> streams;
    for (std::size_t i = 0; i < records.size(); ++i) {
      streams[{records[i].system_id, records[i].user_id}].push_back(i);
    }
    const auto h = static_cast<std::size_t>(options.horizon);
    for (const auto& [key, members] : streams) {
      for (std::size_t j = 0; j + h < members.size(); ++j) {
        pairs.emplace_back(members[j], members[j + h]);
      }
    }
    std::sort(pairs.begin(), pairs.end());
  }

  std::vector<std::string> columns;
  std::map<std::string, std::size_t> index;
  for (const auto& [source, target] : pairs) {
    for (const auto& entry : featurized[source].entries()) {
      if (index.emplace(entry.name, columns.size()).second) {
        columns.push_back(entry.name);
      }
    }
  }

  Dataset dataset(columns, history.metadata().validity_kind, options.mode);
  std::vector<double> values(columns.size());
  for (const auto& [source, target] : pairs) {
    const auto& features = featurized[source];
    if (features.size() != columns.size()) {
      std::string missing;
      for (const auto& name : columns) {
        if (!features.Find(name)) missing += (missing.empty() ? "" : ", ") + name;
      }
      throw ValidationError("record '" + records[source].Key() +
                            "' lacks features: " + missing);
    }
    for (const auto& entry : features.entries()) {
      values[index.at(entry.name)] = entry.value;
    }
    const auto& src = records[source];
    Dataset::Row row{src.t,         src.Key(),
                     src.instance_id, src.system_id,
                     src.user_id,   records[target].validity,
                     options.horizon == 0 ? src.self_confidence : std::nullopt};
    dataset.AddRow(std::move(row), values);
  }
  return dataset;
}

}  // namespace validity_lab

#endif  // VALIDITY_LAB_DATASET_HPP_
