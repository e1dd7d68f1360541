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

// Small history builders and brute-force reference computations shared by
// the tests. Nothing here calls into the code under test except for record
// and history types.

#ifndef VALIDITY_LAB_TESTS_TEST_SUPPORT_HPP_
#define VALIDITY_LAB_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "validity_lab/ecosystem.hpp"

namespace validity_lab::testing {

inline InteractionRecord MakeRecord(std::int64_t t, const std::string& instance,
                                    double validity,
                                    const std::string& system = "S") {
  InteractionRecord r;
  r.t = t;
  r.instance_id = instance;
  r.system_id = system;
  r.user_id = "u0";
  r.validity = validity;
  return r;
}

// One record per validity, t = index, a single feature i_x = index.
inline EcosystemHistory Sequence(const std::vector<double>& validities,
                                 ValidityKind kind = ValidityKind::kBinary) {
  std::vector<InteractionRecord> records;
  for (std::size_t k = 0; k < validities.size(); ++k) {
    auto r = MakeRecord(static_cast<std::int64_t>(k), "x" + std::to_string(k),
                        validities[k]);
    r.instance_features = {{"i_x", static_cast<double>(k)}};
    records.push_back(std::move(r));
  }
  return EcosystemHistory(std::move(records), {"seq", kind});
}

inline double BruteMeanBrier(const std::vector<double>& p, const std::vector<double>& v) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - v[i]) * (p[i] - v[i]);
  return total / static_cast<double>(p.size());
}

// Accepted validity after rejecting the k lowest predictions, ties broken by
// record order. Recomputed from scratch for each k.
inline double BruteAcceptedValidity(const std::vector<double>& p,
                                    const std::vector<double>& v, std::size_t k) {
  const std::size_t n = p.size();
  if (k == n) return 1.0;
  std::vector<bool> rejected(n, false);
  for (std::size_t r = 0; r < k; ++r) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (rejected[i]) continue;
      if (pick == n || p[i] < p[pick]) pick = i;
    }
    rejected[pick] = true;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!rejected[i]) sum += v[i];
  }
  return sum / static_cast<double>(n - k);
}

inline double BruteAurc(const std::vector<double>& p, const std::vector<double>& v) {
  const std::size_t n = p.size();
  double area = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double a = BruteAcceptedValidity(p, v, k - 1);
    const double b = BruteAcceptedValidity(p, v, k);
    area += (a + b) / 2.0 / static_cast<double>(n);
  }
  return area;
}

inline std::filesystem::path FreshDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("validity_lab_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace validity_lab::testing

#endif  // VALIDITY_LAB_TESTS_TEST_SUPPORT_HPP_
