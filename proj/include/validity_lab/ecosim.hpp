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

// Seeded synthetic ecosystems. Each generator is a pure function of its spec;
// randomness comes from Rng streams derived from the seed with DeriveSeed().

#ifndef VALIDITY_LAB_ECOSIM_HPP_
#define VALIDITY_LAB_ECOSIM_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "validity_lab/common.hpp"
#include "validity_lab/dataset.hpp"
#include "validity_lab/ecosystem.hpp"
#include "validity_lab/predictors.hpp"
#include "validity_lab/scoring.hpp"

namespace validity_lab {

// ---------------------------------------------------------------------------
// Six-system driving grid. Windingness w and fogginess f range over 0..3 and
// every system has mean validity 0.625 over the 16 cells.

inline constexpr int kGridLevels = 4;
inline constexpr double kGridMeanValidity = 0.625;
inline constexpr double kGridBernoulliRate = 0.625;  // system F
inline constexpr std::uint64_t kGridESeed = 0xE5EED0E5ULL;
// No logistic model on (w, f) may reach this Brier score on system E's cells.
inline constexpr double kGridEMinLogisticBrier = 0.15;

struct GridEcosystemSpec {
  std::string system_id = "A";
  int episodes_per_cell = 1;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& GridSystems() {
  static const std::vector<std::string> systems = {"A", "B", "C", "D", "E", "F"};
  return systems;
}

using GridTable = std::array<std::array<double, kGridLevels>, kGridLevels>;  // [w][f]

namespace internal {

inline EcosystemHistory GridTableHistory(const GridTable& table,
                                         ValidityKind kind) {
  std::vector<InteractionRecord> records;
  for (int w = 0; w < kGridLevels; ++w) {
    for (int f = 0; f < kGridLevels; ++f) {
      InteractionRecord r;
      r.instance_id = "w" + std::to_string(w) + "_f" + std::to_string(f);
      r.system_id = "probe";
      r.user_id = "u0";
      r.instance_features = {{"i_windingness", static_cast<double>(w)},
                             {"i_fogginess", static_cast<double>(f)}};
      r.validity = table[w][f];
      records.push_back(std::move(r));
    }
  }
  return EcosystemHistory(std::move(records), {"grid-probe", kind});
}

// Best Brier over logistic models on every subset of {w, f}, fitted and scored
// on the 16 cells.
inline double BestLogisticGridBrier(const GridTable& table) {
  const auto data = MakeDataset(GridTableHistory(table, ValidityKind::kBinary));
  const std::vector<std::vector<std::string>> subsets = {
      {}, {"i_windingness"}, {"i_fogginess"}, {"i_windingness", "i_fogginess"}};
  double best = 1.0;
  for (const auto& subset : subsets) {
    const auto p = FitLogistic(data, subset);
    best = std::min(best, MeanScore(ScoringRule::Brier(), p, data));
  }
  return best;
}

inline GridTable DrawSystemETable() {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(DeriveSeed(kGridESeed, attempt));
    std::vector<int> cells(kGridLevels * kGridLevels);
    for (int k = 0; k < static_cast<int>(cells.size()); ++k) cells[k] = k;
    rng.Shuffle(cells);
    GridTable table{};
    for (int k = 0; k < 10; ++k) {
      table[cells[k] / kGridLevels][cells[k] % kGridLevels] = 1.0;
    }
    if (BestLogisticGridBrier(table) >= kGridEMinLogisticBrier) return table;
  }
}

}  // namespace internal

// Cell validity for the deterministic systems A-E. System F has no table.
inline GridTable GridCellTable(const std::string& system_id) {
  GridTable table{};
  for (int w = 0; w < kGridLevels; ++w) {
    for (int f = 0; f < kGridLevels; ++f) {
      static constexpr double kA[kGridLevels] = {1.0, 1.0, 0.5, 0.0};
      if (system_id == "A") {
        table[w][f] = kA[w];
      } else if (system_id == "B") {
        table[w][f] = kA[f];
      } else if (system_id == "C") {
        table[w][f] = w + f <= 3 ? 1.0 : 0.0;
      } else if (system_id == "D") {
        table[w][f] = std::abs(w - f) <= 1 ? 1.0 : 0.0;
      } else if (system_id != "E") {
        throw ValidationError("no cell table for grid system '" + system_id + "'");
      }
    }
  }
  if (system_id == "E") {
    static const GridTable e_table = internal::DrawSystemETable();
    table = e_table;
  }
  return table;
}

inline EcosystemHistory GridEcosystem(const GridEcosystemSpec& spec) {
  const auto& systems = GridSystems();
  if (std::find(systems.begin(), systems.end(), spec.system_id) == systems.end()) {
    throw ValidationError("unknown grid system '" + spec.system_id + "'");
  }
  if (spec.episodes_per_cell < 1) {
    throw ValidationError("episodes_per_cell must be positive");
  }
  const bool stochastic = spec.system_id == "F";
  const bool graded = spec.system_id == "A" || spec.system_id == "B";
  GridTable table{};
  if (!stochastic) {
    table = GridCellTable(spec.system_id);
    double sum = 0.0;
    for (const auto& row : table) {
      for (double v : row) sum += v;
    }
    if (sum / (kGridLevels * kGridLevels) != kGridMeanValidity) {
      throw ValidationError("grid table for '" + spec.system_id +
                            "' does not average 0.625");
    }
  }
  Rng rng(DeriveSeed(spec.seed, 0xF0));
  const FeatureVector system_features = OneHot("s_id_", systems, spec.system_id);
  std::vector<InteractionRecord> records;
  records.reserve(static_cast<std::size_t>(spec.episodes_per_cell) * 16);
  for (int e = 0; e < spec.episodes_per_cell; ++e) {
    for (int w = 0; w < kGridLevels; ++w) {
      for (int f = 0; f < kGridLevels; ++f) {
        InteractionRecord r;
        r.t = e;
        r.instance_id = "w" + std::to_string(w) + "_f" + std::to_string(f) +
                        "_e" + std::to_string(e);
        r.system_id = spec.system_id;
        r.user_id = "u0";
        r.instance_features = {{"i_windingness", static_cast<double>(w)},
                               {"i_fogginess", static_cast<double>(f)}};
        r.system_features = system_features;
        r.validity = stochastic ? (rng.Bernoulli(kGridBernoulliRate) ? 1.0 : 0.0)
                                : table[w][f];
        records.push_back(std::move(r));
      }
    }
  }
  return EcosystemHistory(
      std::move(records),
      {"grid-" + spec.system_id, graded ? ValidityKind::kGraded : ValidityKind::kBinary});
}

// ---------------------------------------------------------------------------
// Biased coin: one constant dummy feature, validity ~ Bernoulli(q).

inline EcosystemHistory CoinEcosystem(double q, std::int64_t n, std::uint64_t seed) {
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("coin bias must lie in [0, 1]");
  if (n < 1) throw ValidationError("coin ecosystem needs n >= 1");
  Rng rng(DeriveSeed(seed, 0xC0));
  std::vector<InteractionRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    InteractionRecord r;
    r.t = k;
    r.instance_id = "toss" + std::to_string(k);
    r.system_id = "coin";
    r.user_id = "u0";
    r.instance_features = {{"i_dummy", 1.0}};
    r.validity = rng.Bernoulli(q) ? 1.0 : 0.0;
    records.push_back(std::move(r));
  }
  return EcosystemHistory(std::move(records), {"coin", ValidityKind::kBinary});
}

// ---------------------------------------------------------------------------
// Multi-agent task bank. Tasks carry three relevant features and two decoys;
// agents differ by a latent skill; success ~ Bernoulli(sigmoid(skill -
// demand)) with demand linear in the relevant features. Each record logs the
// true success probability as a calibrated self_confidence.

struct AgentTaskSpec {
  int n_agents = 5;
  int n_tasks = 2000;
  std::uint64_t seed = 0;
  bool shared_skill = false;  // every agent gets the same skill
};

inline constexpr double kAgentSkillLow = -1.0;
inline constexpr double kAgentSkillHigh = 3.0;

inline double TaskDemand(double reward_size, double distance, double y_position) {
  return 4.0 * distance - 3.0 * reward_size + 2.0 * y_position - 0.5;
}

inline std::string AgentId(int k) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "agent%02d", k);
  return buffer;
}

inline EcosystemHistory AgentTaskEcosystem(const AgentTaskSpec& spec) {
  if (spec.n_agents < 2) throw ValidationError("need at least 2 agents");
  if (spec.n_tasks < 10) throw ValidationError("need at least 10 tasks");
  Rng task_rng(DeriveSeed(spec.seed, 0xA1));
  Rng outcome_rng(DeriveSeed(spec.seed, 0xA2));
  std::vector<std::string> agents;
  std::vector<double> skills;
  for (int k = 0; k < spec.n_agents; ++k) {
    agents.push_back(AgentId(k));
    skills.push_back(spec.shared_skill
                         ? (kAgentSkillLow + kAgentSkillHigh) / 2.0
                         : kAgentSkillLow + (kAgentSkillHigh - kAgentSkillLow) * k /
                                                (spec.n_agents - 1));
  }
  std::vector<InteractionRecord> records;
  records.reserve(static_cast<std::size_t>(spec.n_agents) * spec.n_tasks);
  for (int j = 0; j < spec.n_tasks; ++j) {
    const double reward = task_rng.Uniform();
    const double distance = task_rng.Uniform();
    const double y_position = task_rng.Uniform();
    const double decoy_a = task_rng.Uniform();
    const double decoy_b = task_rng.Uniform();
    const double demand = TaskDemand(reward, distance, y_position);
    for (int k = 0; k < spec.n_agents; ++k) {
      InteractionRecord r;
      r.t = j;
      r.instance_id = "task" + std::to_string(j);
      r.system_id = agents[k];
      r.user_id = "u0";
      r.instance_features = {{"i_reward_size", reward},
                             {"i_distance", distance},
                             {"i_y_position", y_position},
                             {"i_decoy_a", decoy_a},
                             {"i_decoy_b", decoy_b}};
      r.system_features = OneHot("s_id_", agents, agents[k]);
      const double p = Sigmoid(skills[k] - demand);
      r.self_confidence = p;
      r.validity = outcome_rng.Bernoulli(p) ? 1.0 : 0.0;
      records.push_back(std::move(r));
    }
  }
  return EcosystemHistory(std::move(records), {"agent-task", ValidityKind::kBinary});
}

// ---------------------------------------------------------------------------
// Request-difficulty drift. A single user raises the requested difficulty
// after a success and lowers it after a failure; difficulty stays in [0, 1].
// Success ~ Bernoulli(sigmoid(logit_scale * (capability - difficulty))). The
// logged request feature is the difficulty plus N(0, noise_scale) noise.

struct DriftEcosystemSpec {
  std::int64_t n_steps = 10000;
  double success_boost = 0.2;
  double failure_drop = 0.2;
  double base_difficulty = 0.5;
  double noise_scale = 0.1;
  double capability = 0.5;
  double logit_scale = 8.0;
  std::uint64_t seed = 0;
};

inline EcosystemHistory DriftEcosystem(const DriftEcosystemSpec& spec) {
  if (spec.n_steps < 0) throw ValidationError("n_steps must be >= 0");
  if (spec.noise_scale < 0) throw ValidationError("noise_scale must be >= 0");
  Rng rng(DeriveSeed(spec.seed, 0xD1));
  double difficulty = std::clamp(spec.base_difficulty, 0.0, 1.0);
  std::vector<InteractionRecord> records;
  records.reserve(static_cast<std::size_t>(spec.n_steps));
  for (std::int64_t t = 0; t < spec.n_steps; ++t) {
    InteractionRecord r;
    r.t = t;
    r.instance_id = "request" + std::to_string(t);
    r.system_id = "assistant";
    r.user_id = "u0";
    r.instance_features = {
        {"i_requested_difficulty", difficulty + rng.Normal(0.0, spec.noise_scale)}};
    const double p = Sigmoid(spec.logit_scale * (spec.capability - difficulty));
    const bool success = rng.Bernoulli(p);
    r.validity = success ? 1.0 : 0.0;
    records.push_back(std::move(r));
    difficulty += success ? spec.success_boost : -spec.failure_drop;
    difficulty = std::clamp(difficulty, 0.0, 1.0);
  }
  return EcosystemHistory(std::move(records), {"drift", ValidityKind::kBinary});
}

// ---------------------------------------------------------------------------
// Output oracle: validity ~ Bernoulli(0.5) independent of the inputs; the
// output flag o_flag equals validity with probability `leak`, else its
// negation.

inline EcosystemHistory OutputOracleEcosystem(std::int64_t n, double leak,
                                              std::uint64_t seed) {
  if (!(leak >= 0.0 && leak <= 1.0)) throw ValidationError("leak must lie in [0, 1]");
  if (n < 0) throw ValidationError("n must be >= 0");
  Rng rng(DeriveSeed(seed, 0x0F));
  std::vector<InteractionRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    InteractionRecord r;
    r.t = k;
    r.instance_id = "query" + std::to_string(k);
    r.system_id = "base";
    r.user_id = "u0";
    r.instance_features = {{"i_noise", rng.Uniform()}};
    const bool valid = rng.Bernoulli(0.5);
    const bool faithful = rng.Bernoulli(leak);
    r.validity = valid ? 1.0 : 0.0;
    r.output_features = {{"o_flag", (valid == faithful) ? 1.0 : 0.0}};
    records.push_back(std::move(r));
  }
  return EcosystemHistory(std::move(records), {"output-oracle", ValidityKind::kBinary});
}

// ---------------------------------------------------------------------------
// JSON generator configs: {"generator": "grid", "system_id": "A", ...}.

inline EcosystemHistory GenerateFromConfig(const nlohmann::json& config,
                                           std::uint64_t seed) {
  try {
    const auto generator = config.at("generator").get<std::string>();
    if (generator == "grid") {
      return GridEcosystem({config.value("system_id", std::string("A")),
                            config.value("episodes_per_cell", 1), seed});
    }
    if (generator == "coin") {
      return CoinEcosystem(config.value("q", 0.7), config.value("n", std::int64_t{1000}),
                           seed);
    }
    if (generator == "agent_task") {
      return AgentTaskEcosystem({config.value("n_agents", 5),
                                 config.value("n_tasks", 2000), seed,
                                 config.value("shared_skill", false)});
    }
    if (generator == "drift") {
      DriftEcosystemSpec spec;
      spec.n_steps = config.value("n_steps", spec.n_steps);
      spec.success_boost = config.value("success_boost", spec.success_boost);
      spec.failure_drop = config.value("failure_drop", spec.failure_drop);
      spec.base_difficulty = config.value("base_difficulty", spec.base_difficulty);
      spec.noise_scale = config.value("noise_scale", spec.noise_scale);
      spec.capability = config.value("capability", spec.capability);
      spec.logit_scale = config.value("logit_scale", spec.logit_scale);
      spec.seed = seed;
      return DriftEcosystem(spec);
    }
    if (generator == "output_oracle") {
      return OutputOracleEcosystem(config.value("n", std::int64_t{1000}),
                                   config.value("leak", 1.0), seed);
    }
    throw ValidationError("unknown generator '" + generator + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("generator config: ") + e.what());
  }
}

}  // namespace validity_lab

#endif  // VALIDITY_LAB_ECOSIM_HPP_
