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

// validity_lab command-line entry point.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "validity_lab/cli.hpp"

namespace {

namespace vcli = validity_lab::cli;

void AddCommon(CLI::App* sub, vcli::Options& options, std::uint64_t& seed) {
  sub->add_option("--config", options.config, "JSON config file");
  sub->add_option("--seed", seed, "RNG seed (overrides the config)");
  sub->add_option("--out", options.out, "output directory");
  sub->add_option("--rule", options.rule, "scoring rule")
      ->check(CLI::IsMember({"brier", "logloss"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"validity_lab: validity, predictability and envelope analysis"};
  app.require_subcommand(1);
  vcli::Options options;
  std::uint64_t seed = 0;

  struct Spec {
    const char* name;
    const char* help;
    bool input;
    bool predictor;
  };
  const Spec specs[] = {
      {"simulate", "generate an interaction history", false, false},
      {"fit", "fit a validity predictor", true, false},
      {"assess", "estimate unpredictability Q for a family", true, false},
      {"envelope", "validity envelope and rejection curve", true, true},
      {"pareto", "validity vs unpredictability frontier", false, false},
      {"scaling", "fit a power law to x,y points", true, false},
      {"report", "run every scenario and index the artifacts", false, false},
  };
  std::vector<CLI::App*> subs;
  for (const auto& spec : specs) {
    auto* sub = app.add_subcommand(spec.name, spec.help);
    AddCommon(sub, options, seed);
    if (spec.input) sub->add_option("--input", options.input, "input CSV");
    if (spec.predictor) {
      sub->add_option("--predictor", options.predictor, "predictor JSON");
    }
    subs.push_back(sub);
  }
  auto* suite = app.add_subcommand("suite", "run a canned scenario");
  AddCommon(suite, options, seed);
  suite->add_option("name", options.scenario, "fig1|coin|ladder|tradeoff|scaling")
      ->required();
  subs.push_back(suite);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : vcli::kExitValidation;
  }
  for (auto* sub : subs) {
    if (sub->parsed()) {
      options.command = sub->get_name();
      if (sub->count("--seed") > 0) options.seed = seed;
    }
  }
  return vcli::Run(options, std::cout, std::cerr);
}
