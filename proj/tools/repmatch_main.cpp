// Copyright 2026 The repmatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "repmatch/cli.hpp"

namespace {

// "--set key=value" overrides applied after the config file.
void apply_sets(repmatch::cli::RunConfig& config,
                const std::vector<std::string>& sets) {
  for (const std::string& item : sets) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + item);
    repmatch::cli::apply_override(config, item.substr(0, eq),
                                  item.substr(eq + 1));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"repmatch: representative matched samples via network flow"};
  app.require_subcommand(1);

  std::string config_path, input, output_dir, out_path;
  std::string pairs_path, cohort_path, grid_path;
  std::vector<std::string> sets;
  long long replicates_override = -1;
  long long seed_override = -1;

  CLI::App* match = app.add_subcommand("match", "construct matched pairs");
  match->add_option("--config", config_path, "config file")->required();
  match->add_option("--input", input, "cohort CSV (overrides config)");
  match->add_option("--output-dir", output_dir, "output directory");
  match->add_option("--set", sets, "override a config key (key=value)");

  CLI::App* simulate = app.add_subcommand("simulate", "run the bias experiment");
  simulate->add_option("--grid", grid_path, "grid config file")->required();
  simulate->add_option("--out", out_path, "bias report CSV path")
      ->default_val("bias_report.csv");
  simulate->add_option("--replicates", replicates_override,
                       "override replicate count");
  simulate->add_option("--seed", seed_override, "override master seed");

  CLI::App* balance = app.add_subcommand("balance",
                                         "recompute balance for a pairs file");
  balance->add_option("--pairs", pairs_path, "pairs.csv path")->required();
  balance->add_option("--cohort", cohort_path, "cohort CSV path")->required();
  balance->add_option("--config", config_path, "config file")->required();
  balance->add_option("--output-dir", output_dir, "output directory");
  balance->add_option("--set", sets, "override a config key (key=value)");

  CLI::App* dump = app.add_subcommand("dump-network",
                                      "write the match network as DIMACS");
  dump->add_option("--config", config_path, "config file")->required();
  dump->add_option("--input", input, "cohort CSV (overrides config)");
  dump->add_option("--out", out_path, "output path")->default_val("network.dimacs");
  dump->add_option("--set", sets, "override a config key (key=value)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (match->parsed()) {
      repmatch::cli::RunConfig config = repmatch::cli::parse_run_config(config_path);
      apply_sets(config, sets);
      if (!input.empty()) config.input = input;
      if (!output_dir.empty()) config.output_dir = output_dir;
      return repmatch::cli::cmd_match(config);
    }
    if (simulate->parsed()) {
      if (replicates_override < 0 && seed_override < 0)
        return repmatch::cli::cmd_simulate(grid_path, out_path);
      auto grid = repmatch::cli::parse_simulation_grid(grid_path);
      for (auto& cell : grid) {
        if (replicates_override >= 1) cell.replicates = int(replicates_override);
        if (seed_override >= 0) cell.master_seed = std::uint64_t(seed_override);
      }
      const repmatch::simlab::BiasReport report =
          repmatch::simlab::run_factorial(grid);
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write file: " + out_path);
      repmatch::simlab::write_bias_csv(report, out);
      return repmatch::cli::kExitOk;
    }
    if (balance->parsed()) {
      repmatch::cli::RunConfig config = repmatch::cli::parse_run_config(config_path);
      apply_sets(config, sets);
      if (!output_dir.empty()) config.output_dir = output_dir;
      return repmatch::cli::cmd_balance(pairs_path, cohort_path, config);
    }
    if (dump->parsed()) {
      repmatch::cli::RunConfig config = repmatch::cli::parse_run_config(config_path);
      apply_sets(config, sets);
      if (!input.empty()) config.input = input;
      return repmatch::cli::cmd_dump_network(config, out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return repmatch::cli::kExitError;
  }
  return repmatch::cli::kExitError;
}
