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

#ifndef REPMATCH_CLI_HPP
#define REPMATCH_CLI_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "repmatch/simlab.hpp"
#include "repmatch/statdist.hpp"
#include "repmatch/templatematch.hpp"

namespace repmatch::cli {

/// Exit codes of every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;       // usage / data error
constexpr int kExitInfeasible = 2;  // no feasible match

/// Full configuration of a match run. Populated from a flat
/// `key = value` config file plus command-line overrides.
struct RunConfig {
  std::string input;
  std::string output_dir = ".";
  std::string id_column = "id";
  std::string role_column = "role";
  std::vector<std::string> shared_covariates;
  std::vector<std::string> extended_covariates;
  int k = 1;
  double lambda = 100.0;  // large lambda prioritizes pairing quality
  std::string delta_kind = "participation_abs_diff";
  std::string Delta_kind = "robust_mahalanobis";
  templatematch::CaliperSpec delta_caliper;  // off unless configured
  templatematch::CaliperSpec Delta_caliper;  // hard 0.05 by default
  int sparsify = 0;
  std::vector<std::string> exact_match_columns;
  templatematch::FineBalanceSpec fine_balance;
  std::vector<std::string> forced_include_ids;
  double forced_include_penalty = 0.0;
  std::int64_t cost_scale = 100000;
  std::uint64_t seed = 1;

  RunConfig() {
    Delta_caliper.enabled = true;
    Delta_caliper.width = 0.05;
    Delta_caliper.mode = statdist::CaliperMode::Hard;
  }

  /// Categorical columns the loader must keep as strings.
  std::vector<std::string> categorical_columns() const;
};

/// Parses a flat `key = value` file ('#' starts a comment, list values
/// are comma-separated). Unknown keys are an error.
RunConfig parse_run_config(const std::string& path);

/// Applies `key=value` overrides on top of a parsed config (same keys as
/// the file).
void apply_override(RunConfig& config, const std::string& key,
                    const std::string& value);

/// Reads a cohort CSV (header required; roles template/treated/control).
/// Numeric covariates must parse as reals; extended covariates may be
/// empty on template rows only. Errors carry the 1-based line number.
statdist::CovariateTable load_units_csv(const std::string& path,
                                        const RunConfig& config);

/// Score fitting + distance construction per the configured kinds.
statdist::DistanceMatrices build_distances(const statdist::CovariateTable& table,
                                           const RunConfig& config);

templatematch::TemplateMatchSpec to_match_spec(const RunConfig& config);

/// Fits scores, builds and solves the template network, writes pairs.csv,
/// balance.csv and summary.txt into output_dir. Returns kExitOk or
/// kExitInfeasible.
int cmd_match(const RunConfig& config);

/// Runs the factorial simulation described by a grid config file and
/// writes the bias report CSV to out_path.
int cmd_simulate(const std::string& grid_path, const std::string& out_path);

/// Recomputes the balance tables for an existing pairs.csv.
int cmd_balance(const std::string& pairs_path, const std::string& cohort_path,
                const RunConfig& config);

/// Writes the configured match network as a DIMACS-min file.
int cmd_dump_network(const RunConfig& config, const std::string& out_path);

/// Grid-file parsing for cmd_simulate (exposed for tests): cartesian
/// product over d, theta, nu and effect lists.
std::vector<simlab::SimConfig> parse_simulation_grid(const std::string& path);

}  // namespace repmatch::cli

#endif  // REPMATCH_CLI_HPP
