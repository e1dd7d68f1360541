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

// Data model for logged AI ecosystems: interaction records, histories, CSV and
// JSON persistence, and featurization.

#ifndef VALIDITY_LAB_ECOSYSTEM_HPP_
#define VALIDITY_LAB_ECOSYSTEM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "validity_lab/common.hpp"

namespace validity_lab {

enum class ValidityKind { kBinary, kGraded };
enum class FeatureMode { kAnticipative, kReactive };

inline std::string_view ToString(ValidityKind kind) {
  return kind == ValidityKind::kBinary ? "binary" : "graded";
}
inline std::string_view ToString(FeatureMode mode) {
  return mode == FeatureMode::kAnticipative ? "anticipative" : "reactive";
}

inline ValidityKind ParseValidityKind(std::string_view text) {
  if (text == "binary") return ValidityKind::kBinary;
  if (text == "graded") return ValidityKind::kGraded;
  throw ValidationError("unknown validity kind '" + std::string(text) + "'");
}
inline FeatureMode ParseFeatureMode(std::string_view text) {
  if (text == "anticipative") return FeatureMode::kAnticipative;
  if (text == "reactive") return FeatureMode::kReactive;
  throw ValidationError("unknown feature mode '" + std::string(text) + "'");
}

struct Feature {
  std::string name;
  double value = 0.0;

  friend bool operator==(const Feature&, const Feature&) = default;
};

// Ordered named features. Names are unique and values finite.
class FeatureVector {
 public:
  FeatureVector() = default;
  FeatureVector(std::initializer_list<Feature> entries) {
    for (const auto& entry : entries) Add(entry.name, entry.value);
  }

  void Add(std::string name, double value) {
    if (!std::isfinite(value)) {
      throw ValidationError("feature '" + name + "' is not finite");
    }
    if (Find(name)) {
      throw ValidationError("duplicate feature name '" + name + "'");
    }
    entries_.push_back({std::move(name), value});
  }

  void Append(const FeatureVector& other) {
    for (const auto& entry : other.entries_) Add(entry.name, entry.value);
  }

  std::optional<double> Find(std::string_view name) const {
    for (const auto& entry : entries_) {
      if (entry.name == name) return entry.value;
    }
    return std::nullopt;
  }

  bool HasPrefix(std::string_view prefix) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const Feature& f) {
      return std::string_view(f.name).substr(0, prefix.size()) == prefix;
    });
  }

  std::span<const Feature> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<Feature> entries_;
};

struct InteractionRecord {
  std::int64_t t = 0;
  std::string instance_id;
  std::string system_id;
  std::string user_id;
  FeatureVector instance_features;
  FeatureVector system_features;
  FeatureVector user_features;
  FeatureVector output_features;
  double validity = 0.0;
  std::optional<double> self_confidence;

  // Identifies the record for replayed predictions.
  std::string Key() const {
    return std::to_string(t) + "|" + instance_id + "|" + system_id + "|" +
           user_id;
  }

  friend bool operator==(const InteractionRecord&,
                         const InteractionRecord&) = default;
};

struct HistoryMetadata {
  std::string name;
  ValidityKind validity_kind = ValidityKind::kGraded;

  friend bool operator==(const HistoryMetadata&,
                         const HistoryMetadata&) = default;
};

namespace internal {

inline void CheckFeatureRoles(const FeatureVector& features,
                              std::string_view prefix, std::size_t row) {
  for (const auto& entry : features.entries()) {
    if (std::string_view(entry.name).substr(0, prefix.size()) != prefix) {
      throw ValidationError("record " + std::to_string(row) + ": feature '" +
                            entry.name + "' must carry prefix '" +
                            std::string(prefix) + "'");
    }
  }
}

inline void ValidateRecord(const InteractionRecord& record, ValidityKind kind,
                           std::size_t row) {
  const std::string where = "record " + std::to_string(row);
  if (record.t < 0) throw ValidationError(where + ": negative timestep");
  if (!(record.validity >= 0.0 && record.validity <= 1.0)) {
    throw ValidationError(where + ": validity " + FormatReal(record.validity) +
                          " outside [0, 1]");
  }
  if (kind == ValidityKind::kBinary && record.validity != 0.0 &&
      record.validity != 1.0) {
    throw ValidationError(where + ": binary history with fractional validity " +
                          FormatReal(record.validity));
  }
  if (record.self_confidence &&
      !(*record.self_confidence >= 0.0 && *record.self_confidence <= 1.0)) {
    throw ValidationError(where + ": self_confidence outside [0, 1]");
  }
  CheckFeatureRoles(record.instance_features, "i_", row);
  CheckFeatureRoles(record.system_features, "s_", row);
  CheckFeatureRoles(record.user_features, "u_", row);
  CheckFeatureRoles(record.output_features, "o_", row);
}

}  // namespace internal

// Immutable, validated, time-ordered sequence of interaction records.
class EcosystemHistory {
 public:
  EcosystemHistory() = default;

  // Validates every record. Records must already be non-decreasing in t; the
  // order of records sharing a timestep is kept.
  EcosystemHistory(std::vector<InteractionRecord> records,
                   HistoryMetadata metadata)
      : records_(std::move(records)), metadata_(std::move(metadata)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      internal::ValidateRecord(records_[i], metadata_.validity_kind, i);
      if (i > 0 && records_[i].t < records_[i - 1].t) {
        throw ValidationError("record " + std::to_string(i) +
                              ": timestep decreases");
      }
    }
  }

  std::span<const InteractionRecord> records() const { return records_; }
  const HistoryMetadata& metadata() const { return metadata_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  std::vector<std::int64_t> Timesteps() const {
    std::vector<std::int64_t> steps;
    for (const auto& record : records_) {
      if (steps.empty() || steps.back() != record.t) steps.push_back(record.t);
    }
    return steps;
  }

  // Records sharing timestep t (the relation set of that step).
  std::span<const InteractionRecord> RelationSet(std::int64_t t) const {
    auto lo = std::lower_bound(
        records_.begin(), records_.end(), t,
        [](const InteractionRecord& r, std::int64_t value) { return r.t < value; });
    auto hi = std::upper_bound(
        lo, records_.end(), t,
        [](std::int64_t value, const InteractionRecord& r) { return value < r.t; });
    return {lo, hi};
  }

  friend bool operator==(const EcosystemHistory&,
                         const EcosystemHistory&) = default;

 private:
  std::vector<InteractionRecord> records_;
  HistoryMetadata metadata_;
};

// Records with timestep <= t. t beyond the last step returns the full history.
inline EcosystemHistory SliceHistory(const EcosystemHistory& history,
                                     std::int64_t t) {
  if (t < 0) throw ValidationError("slice timestep must be non-negative");
  std::vector<InteractionRecord> kept;
  for (const auto& record : history.records()) {
    if (record.t > t) break;
    kept.push_back(record);
  }
  return EcosystemHistory(std::move(kept), history.metadata());
}

// ---------------------------------------------------------------------------
// CSV persistence.

namespace internal {

inline const std::vector<std::string>& FixedColumns() {
  static const std::vector<std::string> columns = {
      "t", "instance_id", "system_id", "user_id", "validity", "self_confidence"};
  return columns;
}

inline std::string QuoteCsv(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

// Splits one CSV line (RFC 4180 quoting, no embedded newlines).
inline std::vector<std::string> SplitCsvLine(std::string_view line,
                                             std::size_t line_number) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  bool field_was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      if (!current.empty() || field_was_quoted) {
        throw ParseError("row " + std::to_string(line_number) +
                         ": stray quote");
      }
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
      field_was_quoted = false;
    } else {
      current += c;
    }
  }
  if (quoted) {
    throw ParseError("row " + std::to_string(line_number) +
                     ": unterminated quote");
  }
  fields.push_back(std::move(current));
  return fields;
}

inline int RoleOrder(std::string_view name) {
  if (name.starts_with("i_")) return 0;
  if (name.starts_with("s_")) return 1;
  if (name.starts_with("u_")) return 2;
  if (name.starts_with("o_")) return 3;
  return 4;
}

}  // namespace internal

// Feature columns in role order (i_, s_, u_, o_), first appearance within a
// role.
inline std::vector<std::string> FeatureColumns(const EcosystemHistory& history) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  auto collect = [&](const FeatureVector& features) {
    for (const auto& entry : features.entries()) {
      if (seen.insert(entry.name).second) names.push_back(entry.name);
    }
  };
  for (const auto& record : history.records()) {
    collect(record.instance_features);
    collect(record.system_features);
    collect(record.user_features);
    collect(record.output_features);
  }
  std::stable_sort(names.begin(), names.end(),
                   [](const std::string& a, const std::string& b) {
                     return internal::RoleOrder(a) < internal::RoleOrder(b);
                   });
  return names;
}

// Writes the interactions.csv layout. Absent optional values and absent
// features are empty cells.
inline void SaveHistoryCsv(const EcosystemHistory& history, std::ostream& out) {
  const auto features = FeatureColumns(history);
  bool first = true;
  for (const auto& column : internal::FixedColumns()) {
    if (!first) out << ',';
    out << column;
    first = false;
  }
  for (const auto& name : features) out << ',' << name;
  out << '\n';
  for (const auto& record : history.records()) {
    out << record.t << ',' << internal::QuoteCsv(record.instance_id) << ','
        << internal::QuoteCsv(record.system_id) << ','
        << internal::QuoteCsv(record.user_id) << ','
        << FormatReal(record.validity) << ',';
    if (record.self_confidence) out << FormatReal(*record.self_confidence);
    for (const auto& name : features) {
      out << ',';
      std::optional<double> value;
      switch (internal::RoleOrder(name)) {
        case 0: value = record.instance_features.Find(name); break;
        case 1: value = record.system_features.Find(name); break;
        case 2: value = record.user_features.Find(name); break;
        default: value = record.output_features.Find(name); break;
      }
      if (value) out << FormatReal(*value);
    }
    out << '\n';
  }
}

// Parses interactions.csv. Lines starting with '#' are comments. Row numbers
// in errors count data rows from 1.
inline EcosystemHistory LoadHistoryCsv(std::istream& in, ValidityKind kind,
                                       std::string name = "") {
  std::string line;
  std::vector<std::string> header;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    header = internal::SplitCsvLine(line, 0);
    break;
  }
  std::vector<InteractionRecord> records;
  if (header.empty()) {
    return EcosystemHistory({}, {std::move(name), kind});
  }
  const auto& fixed = internal::FixedColumns();
  if (header.size() < fixed.size() ||
      !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    throw ParseError("header must start with t,instance_id,system_id,user_id,"
                     "validity,self_confidence");
  }
  for (std::size_t c = fixed.size(); c < header.size(); ++c) {
    if (internal::RoleOrder(header[c]) > 3) {
      throw ParseError("feature column '" + header[c] +
                       "' lacks an i_/s_/u_/o_ prefix");
    }
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    ++row;
    const auto fields = internal::SplitCsvLine(line, row);
    const std::string where = "row " + std::to_string(row);
    if (fields.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    }
    InteractionRecord record;
    auto t = ParseInteger(fields[0]);
    if (!t) throw ParseError(where + ": bad timestep '" + fields[0] + "'");
    record.t = *t;
    record.instance_id = fields[1];
    record.system_id = fields[2];
    record.user_id = fields[3];
    auto validity = ParseReal(fields[4]);
    if (!validity) throw ParseError(where + ": bad validity '" + fields[4] + "'");
    record.validity = *validity;
    if (!fields[5].empty()) {
      auto confidence = ParseReal(fields[5]);
      if (!confidence) {
        throw ParseError(where + ": bad self_confidence '" + fields[5] + "'");
      }
      record.self_confidence = *confidence;
    }
    for (std::size_t c = fixed.size(); c < header.size(); ++c) {
      if (fields[c].empty()) continue;
      auto value = ParseReal(fields[c]);
      if (!value) {
        throw ParseError(where + ": bad value for '" + header[c] + "'");
      }
      try {
        switch (internal::RoleOrder(header[c])) {
          case 0: record.instance_features.Add(header[c], *value); break;
          case 1: record.system_features.Add(header[c], *value); break;
          case 2: record.user_features.Add(header[c], *value); break;
          default: record.output_features.Add(header[c], *value); break;
        }
      } catch (const Error& e) {
        throw ValidationError(where + ": " + e.what());
      }
    }
    try {
      internal::ValidateRecord(record, kind, row);
    } catch (const Error& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!records.empty() && record.t < records.back().t) {
      throw ValidationError(where + ": timestep decreases");
    }
    records.push_back(std::move(record));
  }
  return EcosystemHistory(std::move(records), {std::move(name), kind});
}

// ---------------------------------------------------------------------------
// JSON mirror (same field names as the CSV).

inline nlohmann::json FeaturesToJson(const FeatureVector& features) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& entry : features.entries()) {
    out.push_back({{"name", entry.name}, {"value", entry.value}});
  }
  return out;
}

inline FeatureVector FeaturesFromJson(const nlohmann::json& in) {
  FeatureVector features;
  for (const auto& entry : in) {
    features.Add(entry.at("name").get<std::string>(),
                 entry.at("value").get<double>());
  }
  return features;
}

inline nlohmann::json HistoryToJson(const EcosystemHistory& history) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& record : history.records()) {
    nlohmann::json row = {
        {"t", record.t},
        {"instance_id", record.instance_id},
        {"system_id", record.system_id},
        {"user_id", record.user_id},
        {"validity", record.validity},
        {"self_confidence", record.self_confidence
                                ? nlohmann::json(*record.self_confidence)
                                : nlohmann::json(nullptr)},
        {"instance_features", FeaturesToJson(record.instance_features)},
        {"system_features", FeaturesToJson(record.system_features)},
        {"user_features", FeaturesToJson(record.user_features)},
        {"output_features", FeaturesToJson(record.output_features)},
    };
    records.push_back(std::move(row));
  }
  return {{"name", history.metadata().name},
          {"validity_kind", std::string(ToString(history.metadata().validity_kind))},
          {"records", std::move(records)}};
}

inline EcosystemHistory HistoryFromJson(const nlohmann::json& in) {
  try {
    HistoryMetadata metadata{
        in.value("name", std::string()),
        ParseValidityKind(in.at("validity_kind").get<std::string>())};
    std::vector<InteractionRecord> records;
    for (const auto& row : in.at("records")) {
      InteractionRecord record;
      record.t = row.at("t").get<std::int64_t>();
      record.instance_id = row.at("instance_id").get<std::string>();
      record.system_id = row.at("system_id").get<std::string>();
      record.user_id = row.at("user_id").get<std::string>();
      record.validity = row.at("validity").get<double>();
      if (row.contains("self_confidence") && !row["self_confidence"].is_null()) {
        record.self_confidence = row["self_confidence"].get<double>();
      }
      record.instance_features = FeaturesFromJson(row.at("instance_features"));
      record.system_features = FeaturesFromJson(row.at("system_features"));
      record.user_features = FeaturesFromJson(row.at("user_features"));
      record.output_features = FeaturesFromJson(row.at("output_features"));
      records.push_back(std::move(record));
    }
    return EcosystemHistory(std::move(records), std::move(metadata));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("history JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Featurization.

inline constexpr std::string_view kHistoryMeanFeature = "h_mean_validity";
inline constexpr std::string_view kHistoryCountFeature = "h_prior_count";

// Context features of a single record: instance, system, and user features,
// plus output features in reactive mode.
inline FeatureVector Featurize(const InteractionRecord& record,
                               FeatureMode mode) {
  FeatureVector out;
  out.Append(record.instance_features);
  out.Append(record.system_features);
  out.Append(record.user_features);
  if (mode == FeatureMode::kReactive) {
    if (record.output_features.empty()) {
      throw ValidationError(
          "reactive featurization of record '" + record.Key() +
          "' without output features (dataset is anticipative-only)");
    }
    out.Append(record.output_features);
  }
  return out;
}

// One-hot features `<prefix><category>` over lexicographically ordered
// categories.
inline FeatureVector OneHot(std::string_view prefix,
                            std::vector<std::string> categories,
                            std::string_view value) {
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()),
                   categories.end());
  FeatureVector out;
  for (const auto& category : categories) {
    out.Add(std::string(prefix) + category, category == value ? 1.0 : 0.0);
  }
  return out;
}

// Summary of a system's earlier outcomes used as history features.
struct HistorySummary {
  double mean_validity = 0.5;  // 0.5 when nothing was observed yet
  double prior_count = 0.0;
};

// Tracks per-system outcomes while walking a history in order.
class SystemOutcomeTracker {
 public:
  explicit SystemOutcomeTracker(int window) : window_(window) {}

  HistorySummary Summary(const std::string& system_id) const {
    HistorySummary summary;
    auto it = streams_.find(system_id);
    if (it == streams_.end() || it->second.empty()) return summary;
    const auto& outcomes = it->second;
    const std::size_t take =
        std::min<std::size_t>(outcomes.size(), static_cast<std::size_t>(window_));
    double sum = 0.0;
    for (std::size_t k = outcomes.size() - take; k < outcomes.size(); ++k) {
      sum += outcomes[k];
    }
    summary.mean_validity = sum / static_cast<double>(take);
    summary.prior_count = static_cast<double>(outcomes.size());
    return summary;
  }

  void Observe(const std::string& system_id, double validity) {
    streams_[system_id].push_back(validity);
  }

 private:
  int window_;
  std::unordered_map<std::string, std::vector<double>> streams_;
};

inline void AppendHistoryFeatures(FeatureVector& features,
                                  const HistorySummary& summary) {
  features.Add(std::string(kHistoryMeanFeature), summary.mean_validity);
  features.Add(std::string(kHistoryCountFeature), summary.prior_count);
}

// Featurizes record `index` of `history`. With a history window w > 0, appends
// the mean validity of the same system over its previous w records at earlier
// timesteps (0.5 when none) and the count of those earlier interactions.
inline FeatureVector Featurize(const EcosystemHistory& history,
                               std::size_t index, FeatureMode mode,
                               std::optional<int> history_window) {
  const auto records = history.records();
  if (index >= records.size()) {
    throw ValidationError("record index out of range");
  }
  FeatureVector out = Featurize(records[index], mode);
  if (history_window && *history_window > 0) {
    SystemOutcomeTracker tracker(*history_window);
    const auto& target = records[index];
    for (std::size_t k = 0; k < index; ++k) {
      if (records[k].t >= target.t) break;
      tracker.Observe(records[k].system_id, records[k].validity);
    }
    AppendHistoryFeatures(out, tracker.Summary(target.system_id));
  }
  return out;
}

}  // namespace validity_lab

#endif  // VALIDITY_LAB_ECOSYSTEM_HPP_
