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

#ifndef REPMATCH_SIMLAB_HPP
#define REPMATCH_SIMLAB_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "repmatch/statdist.hpp"
#include "repmatch/templatematch.hpp"

namespace repmatch::simlab {

enum class Effect { Constant, Mild, Strong };

std::string effect_name(Effect e);
Effect effect_from_name(const std::string& name);

/// One matching algorithm of the bias experiment: either the baseline
/// full-treated bipartite match or a template match with (k, lambda).
struct AlgorithmSpec {
  bool is_template = false;
  int k = 1;
  double lambda = 100.0;

  std::string name() const { return is_template ? "m_template" : "m_opt"; }
};

/// One cell of the factorial design. Defaults follow the experiment this
/// reproduces: 300 template / 1000 treated / 3000 control units, five
/// shared covariates, hard 0.05 propensity caliper for template matches
/// and a penalty-mode 0.05 caliper for the baseline.
struct SimConfig {
  int d = 10;           // covariate dimension (>= 5)
  double theta = 0.5;   // treated-vs-control mean shift of X1
  double nu = 0.0;      // every Y(0) mean coefficient
  Effect effect = Effect::Constant;
  int template_size = 300;
  int treated_size = 1000;
  int control_size = 3000;
  int replicates = 200;
  std::uint64_t master_seed = 1;
  std::vector<AlgorithmSpec> algorithms;
  double caliper_width = 0.05;
};

/// One generated replicate: the cohort plus both potential outcomes for
/// the observational units (role-local order).
struct Population {
  statdist::CovariateTable table;
  Eigen::VectorXd treated_y0, treated_y1;
  Eigen::VectorXd control_y0, control_y1;

  double observed_treated(int t) const { return treated_y1[t]; }
  double observed_control(int c) const { return control_y0[c]; }
};

/// Deterministic per-replicate stream seed: splitmix64 applied to
/// master_seed + golden-ratio * (replicate_index + 1). Fixed here so
/// parallel execution cannot change results.
std::uint64_t replicate_seed(std::uint64_t master_seed, int replicate_index);

/// Draws one replicate. Template: 5 shared covariates, X1 centered at
/// 0.25; treated/control: d covariates with X1 centered at theta * Z;
/// Y(0) = X'nu + standard normal noise, Y(1) = Y(0) + beta(X1).
Population generate_population(const SimConfig& cfg, int replicate_index);

/// Analytic target-population average treatment effect: 2, 1.95 or 1.75.
double ate_target(Effect effect);

/// Mean over matched pairs of (observed treated Y - observed control Y).
double difference_in_means(const templatematch::MatchedSample& sample,
                           const Population& pop);

struct BiasRow {
  int d = 0;
  double theta = 0;
  double nu = 0;
  Effect effect = Effect::Constant;
  AlgorithmSpec algorithm;
  int replicates = 0;  // successful replicates aggregated
  int infeasible = 0;
  double mean_estimate = 0;
  double ate = 0;
  double percent_bias = 0;  // 100 * (mean_estimate - ate) / ate
  double mc_se = 0;         // Monte-Carlo SE of percent_bias
};

struct BiasReport {
  std::vector<BiasRow> rows;
};

/// Runs every cell of the grid, sharing one generated population and one
/// set of distance matrices across the cell's algorithms per replicate.
/// Replicates run in parallel (REPMATCH_THREADS, default = hardware);
/// results are bit-identical regardless of thread count.
BiasReport run_factorial(const std::vector<SimConfig>& grid);

/// CSV serialization: a comment line describing the m_opt stand-in, a
/// header row, then one row per (cell, algorithm).
void write_bias_csv(const BiasReport& report, std::ostream& out);

}  // namespace repmatch::simlab

#endif  // REPMATCH_SIMLAB_HPP
