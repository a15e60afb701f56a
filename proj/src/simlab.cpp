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

#include "repmatch/simlab.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

#include "repmatch/pairmatch.hpp"

namespace repmatch::simlab {

using statdist::CovariateTable;
using statdist::DistanceMatrices;
using statdist::DistanceMatrix;
using statdist::Role;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Box-Muller on top of mt19937_64 keeps the draws bit-identical across
// standard libraries (std::normal_distribution is not pinned down).
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double uniform01() {  // strictly inside (0, 1)
    return (double(rng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform01()));
    const double angle = kTwoPi * uniform01();
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

double treatment_effect(Effect effect, double x1) {
  switch (effect) {
    case Effect::Constant: return 2.0;
    case Effect::Mild: return 2.0 - 0.2 * x1;
    case Effect::Strong: return 2.0 - x1;
  }
  return 0.0;
}

int thread_count() {
  if (const char* env = std::getenv("REPMATCH_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? int(hc) : 1;
}

}  // namespace

std::string effect_name(Effect e) {
  switch (e) {
    case Effect::Constant: return "constant";
    case Effect::Mild: return "mild";
    case Effect::Strong: return "strong";
  }
  return "?";
}

Effect effect_from_name(const std::string& name) {
  if (name == "constant") return Effect::Constant;
  if (name == "mild") return Effect::Mild;
  if (name == "strong") return Effect::Strong;
  throw std::invalid_argument("unknown effect: " + name);
}

std::uint64_t replicate_seed(std::uint64_t master_seed, int replicate_index) {
  // splitmix64 step of master_seed advanced by (replicate_index + 1).
  std::uint64_t z =
      master_seed + 0x9E3779B97F4A7C15ULL * (std::uint64_t(replicate_index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double ate_target(Effect effect) {
  // E[beta(X1)] with X1 ~ Normal(0.25, 1) in the target population.
  switch (effect) {
    case Effect::Constant: return 2.0;
    case Effect::Mild: return 1.95;
    case Effect::Strong: return 1.75;
  }
  return 0.0;
}

Population generate_population(const SimConfig& cfg, int replicate_index) {
  if (cfg.d < 5) throw std::invalid_argument("d must be at least 5");
  if (cfg.template_size < 1 || cfg.treated_size < 1 || cfg.control_size < 1)
    throw std::invalid_argument("cohort sizes must be positive");

  const int d1 = 5;
  const int d2 = cfg.d - d1;
  const int r = cfg.template_size;
  const int t = cfg.treated_size;
  const int c = cfg.control_size;
  const int n = r + t + c;

  NormalSampler rng(replicate_seed(cfg.master_seed, replicate_index));

  Population pop;
  CovariateTable& table = pop.table;
  table.unit_ids.reserve(std::size_t(n));
  table.roles.reserve(std::size_t(n));
  for (int i = 0; i < r; ++i) {
    table.unit_ids.push_back("tmpl_" + std::to_string(i + 1));
    table.roles.push_back(Role::Template);
  }
  for (int i = 0; i < t; ++i) {
    table.unit_ids.push_back("trt_" + std::to_string(i + 1));
    table.roles.push_back(Role::Treated);
  }
  for (int i = 0; i < c; ++i) {
    table.unit_ids.push_back("ctl_" + std::to_string(i + 1));
    table.roles.push_back(Role::Control);
  }
  for (int j = 0; j < cfg.d; ++j) {
    const std::string name = "X" + std::to_string(j + 1);
    (j < d1 ? table.shared_names : table.extended_names).push_back(name);
  }
  table.shared.resize(n, d1);
  table.extended = Eigen::MatrixXd::Constant(n, d2, kNaN);

  pop.treated_y0.resize(t);
  pop.treated_y1.resize(t);
  pop.control_y0.resize(c);
  pop.control_y1.resize(c);

  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < d1; ++j)
      table.shared(i, j) = rng.normal() + (j == 0 ? 0.25 : 0.0);
  }
  for (int i = 0; i < t + c; ++i) {
    const int row = r + i;
    const bool is_treated = i < t;
    double xnu = 0.0;
    for (int j = 0; j < cfg.d; ++j) {
      double x = rng.normal();
      if (j == 0 && is_treated) x += cfg.theta;
      if (j < d1)
        table.shared(row, j) = x;
      else
        table.extended(row, j - d1) = x;
      xnu += cfg.nu * x;
    }
    const double y0 = xnu + rng.normal();
    const double y1 = y0 + treatment_effect(cfg.effect, table.shared(row, 0));
    if (is_treated) {
      pop.treated_y0[i] = y0;
      pop.treated_y1[i] = y1;
    } else {
      pop.control_y0[i - t] = y0;
      pop.control_y1[i - t] = y1;
    }
  }
  return pop;
}

double difference_in_means(const templatematch::MatchedSample& sample,
                           const Population& pop) {
  if (!sample.feasible || sample.pairs.empty())
    throw std::invalid_argument("difference_in_means needs a non-empty match");
  double sum = 0.0;
  for (const auto& [t, c] : sample.pairs)
    sum += pop.observed_treated(t) - pop.observed_control(c);
  return sum / double(sample.pairs.size());
}

namespace {

// Runs every algorithm of one cell on one replicate; writes one estimate
// (or NaN) per algorithm.
void run_replicate(const SimConfig& cfg, int rep, double* estimates) {
  const Population pop = generate_population(cfg, rep);
  const CovariateTable& table = pop.table;
  const std::vector<int> tmpl_rows = table.rows_of(Role::Template);
  const std::vector<int> trt_rows = table.rows_of(Role::Treated);
  const std::vector<int> ctl_rows = table.rows_of(Role::Control);

  const Eigen::VectorXd participation = statdist::participation_scores(table);
  const Eigen::VectorXd propensity = statdist::propensity_scores(table);

  DistanceMatrices dist;
  dist.template_participation.resize(long(tmpl_rows.size()));
  for (std::size_t i = 0; i < tmpl_rows.size(); ++i)
    dist.template_participation[long(i)] = participation[tmpl_rows[i]];
  dist.treated_participation.resize(long(trt_rows.size()));
  for (std::size_t i = 0; i < trt_rows.size(); ++i)
    dist.treated_participation[long(i)] = participation[trt_rows[i]];
  dist.treated_propensity.resize(long(trt_rows.size()));
  for (std::size_t i = 0; i < trt_rows.size(); ++i)
    dist.treated_propensity[long(i)] = propensity[trt_rows[i]];
  dist.control_propensity.resize(long(ctl_rows.size()));
  for (std::size_t i = 0; i < ctl_rows.size(); ++i)
    dist.control_propensity[long(i)] = propensity[ctl_rows[i]];

  // delta: absolute participation-score gap, template x treated.
  Eigen::MatrixXd delta(long(tmpl_rows.size()), long(trt_rows.size()));
  for (long i = 0; i < delta.rows(); ++i)
    for (long j = 0; j < delta.cols(); ++j)
      delta(i, j) = std::abs(dist.template_participation[i] -
                             dist.treated_participation[j]);
  dist.delta = DistanceMatrix::dense(std::move(delta));

  // Delta: robust Mahalanobis on all covariates. The baseline gets the
  // penalty-mode caliper inside match_baseline_mopt_from; the template
  // algorithms share one hard-calipered copy.
  const Eigen::MatrixXd xt = table.observational_rows(trt_rows);
  const Eigen::MatrixXd xc = table.observational_rows(ctl_rows);
  Eigen::MatrixXd pool(xt.rows() + xc.rows(), xt.cols());
  pool << xt, xc;
  dist.Delta =
      DistanceMatrix::dense(statdist::robust_mahalanobis_matrix(xt, xc, pool));

  DistanceMatrices hard = dist;
  hard.Delta = statdist::apply_caliper(dist.Delta, dist.treated_propensity,
                                       dist.control_propensity,
                                       cfg.caliper_width,
                                       statdist::CaliperMode::Hard, 0.0)
                   .distances;

  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    const AlgorithmSpec& alg = cfg.algorithms[a];
    estimates[a] = kNaN;
    try {
      if (!alg.is_template) {
        const templatematch::MatchedSample sample =
            pairmatch::match_baseline_mopt_from(
                dist.Delta, dist.treated_propensity, dist.control_propensity,
                cfg.caliper_width);
        estimates[a] = difference_in_means(sample, pop);
      } else {
        templatematch::TemplateMatchSpec spec;
        spec.k = alg.k;
        spec.lambda = alg.lambda;
        const templatematch::TemplateNetwork tn =
            templatematch::build_template_network(table, hard, spec);
        const templatematch::MatchedSample sample =
            templatematch::solve_template_match(tn, spec);
        if (sample.feasible) estimates[a] = difference_in_means(sample, pop);
      }
    } catch (const std::exception&) {
      // recorded as an infeasible replicate for this row
    }
  }
}

}  // namespace

BiasReport run_factorial(const std::vector<SimConfig>& grid) {
  for (const SimConfig& cfg : grid) {
    if (cfg.algorithms.empty())
      throw std::invalid_argument("no algorithms configured");
    if (cfg.replicates < 1)
      throw std::invalid_argument("replicates must be positive");
  }

  // estimates[cell][alg * replicates + rep]
  std::vector<std::vector<double>> estimates(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g)
    estimates[g].assign(grid[g].algorithms.size() * grid[g].replicates, kNaN);

  struct Task {
    int cell;
    int rep;
  };
  std::vector<Task> tasks;
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (int rep = 0; rep < grid[g].replicates; ++rep)
      tasks.push_back({int(g), rep});

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    std::vector<double> local;
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const Task& task = tasks[i];
      const SimConfig& cfg = grid[std::size_t(task.cell)];
      local.assign(cfg.algorithms.size(), kNaN);
      try {
        run_replicate(cfg, task.rep, local.data());
      } catch (const std::exception&) {
        // whole replicate recorded as failed for every algorithm
      }
      for (std::size_t a = 0; a < cfg.algorithms.size(); ++a)
        estimates[std::size_t(task.cell)][a * std::size_t(cfg.replicates) +
                                          std::size_t(task.rep)] = local[a];
    }
  };
  const int threads = std::min<int>(thread_count(), int(tasks.size()));
  std::vector<std::thread> workers;
  for (int w = 1; w < threads; ++w) workers.emplace_back(worker);
  worker();
  for (std::thread& w : workers) w.join();

  BiasReport report;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const SimConfig& cfg = grid[g];
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      BiasRow row;
      row.d = cfg.d;
      row.theta = cfg.theta;
      row.nu = cfg.nu;
      row.effect = cfg.effect;
      row.algorithm = cfg.algorithms[a];
      row.ate = ate_target(cfg.effect);
      double sum = 0.0;
      int n = 0;
      for (int rep = 0; rep < cfg.replicates; ++rep) {
        const double est =
            estimates[g][a * std::size_t(cfg.replicates) + std::size_t(rep)];
        if (std::isnan(est)) continue;
        sum += est;
        ++n;
      }
      row.replicates = n;
      row.infeasible = cfg.replicates - n;
      if (n > 0) {
        row.mean_estimate = sum / double(n);
        double ss = 0.0;
        for (int rep = 0; rep < cfg.replicates; ++rep) {
          const double est =
              estimates[g][a * std::size_t(cfg.replicates) + std::size_t(rep)];
          if (std::isnan(est)) continue;
          ss += (est - row.mean_estimate) * (est - row.mean_estimate);
        }
        const double sd = n > 1 ? std::sqrt(ss / double(n - 1)) : 0.0;
        row.percent_bias = 100.0 * (row.mean_estimate - row.ate) / row.ate;
        row.mc_se = 100.0 * sd / std::sqrt(double(n)) / std::abs(row.ate);
      } else {
        row.mean_estimate = kNaN;
        row.percent_bias = kNaN;
        row.mc_se = kNaN;
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

void write_bias_csv(const BiasReport& report, std::ostream& out) {
  out << "# m_opt here is a penalized-caliper optimal bipartite match of all "
         "treated units (no earthmover balancing step)\n";
  out << "d,theta,nu,effect,algorithm,k,lambda,replicates,mean_estimate,"
         "ate_target,percent_bias,mc_se\n";
  char buf[256];
  for (const BiasRow& row : report.rows) {
    std::string k_col, lambda_col;
    if (row.algorithm.is_template) {
      k_col = std::to_string(row.algorithm.k);
      std::snprintf(buf, sizeof buf, "%.10g", row.algorithm.lambda);
      lambda_col = buf;
    }
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%s,%s,%s,%s,%d,%.10g,%.10g,%.6f,%.6f",
                  row.d, row.theta, row.nu, effect_name(row.effect).c_str(),
                  row.algorithm.name().c_str(), k_col.c_str(),
                  lambda_col.c_str(), row.replicates, row.mean_estimate,
                  row.ate, row.percent_bias, row.mc_se);
    out << buf << '\n';
  }
}

}  // namespace repmatch::simlab
