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
//
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the exit status is the number of failures.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "repmatch/cli.hpp"
#include "repmatch/flownet.hpp"
#include "repmatch/pairmatch.hpp"
#include "repmatch/simlab.hpp"
#include "repmatch/statdist.hpp"
#include "repmatch/templatematch.hpp"

namespace fs = std::filesystem;
using namespace repmatch;
using statdist::CovariateTable;
using statdist::DistanceMatrices;
using statdist::DistanceMatrix;
using statdist::Role;
using templatematch::MatchedSample;
using templatematch::TemplateMatchSpec;

namespace {

int failures = 0;

void report(int criterion, bool pass, double seconds,
            const std::string& detail) {
  std::printf("criterion %2d %s (%.2fs): %s\n", criterion,
              pass ? "PASS" : "FAIL", seconds, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void run(int criterion, const std::function<std::pair<bool, std::string>()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    auto [p, d] = f();
    pass = p;
    detail = d;
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  report(criterion, pass, std::chrono::duration<double>(t1 - t0).count(),
         detail);
}

CovariateTable plain_table(int r, int t, int c) {
  CovariateTable table;
  const int n = r + t + c;
  table.shared = Eigen::MatrixXd::Zero(n, 1);
  table.extended.resize(n, 0);
  table.shared_names = {"X1"};
  for (int i = 0; i < n; ++i) {
    const Role role = i < r             ? Role::Template
                      : i < r + t       ? Role::Treated
                                        : Role::Control;
    table.unit_ids.push_back("u" + std::to_string(i));
    table.roles.push_back(role);
  }
  return table;
}

DistanceMatrices random_distances(int r, int t, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd delta(r, t), Delta(t, c);
  for (long i = 0; i < delta.size(); ++i) delta.data()[i] = unif(rng);
  for (long i = 0; i < Delta.size(); ++i) Delta.data()[i] = unif(rng);
  DistanceMatrices dist;
  dist.delta = DistanceMatrix::dense(std::move(delta));
  dist.Delta = DistanceMatrix::dense(std::move(Delta));
  return dist;
}

flownet::FlowNetwork random_flow_network(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> node_count_d(2, 8);
  const int n = node_count_d(rng);
  std::uniform_int_distribution<int> arc_count_d(1, 14);
  const int m = arc_count_d(rng);
  std::uniform_int_distribution<int> node_d(0, n - 1);
  std::uniform_int_distribution<int> cap_d(0, 2);
  std::uniform_int_distribution<int> cost_d(0, 9);
  std::uniform_int_distribution<int> supply_d(0, 3);
  std::uniform_int_distribution<int> style_d(0, 2);
  std::vector<flownet::Arc> arcs;
  const int style = style_d(rng);
  for (int i = 0; i < m; ++i) {
    int tail = node_d(rng);
    int head = node_d(rng);
    if (style == 1 && i < n - 1) {
      tail = 0;
      head = 1 + i % (n - 1);
    }
    if (tail == head) head = (head + 1) % n;
    const std::int64_t cost = (style == 1 && tail == 0) ? 0 : cost_d(rng);
    arcs.push_back({tail, head, cap_d(rng), cost, 0});
  }
  return flownet::build_network(n, arcs, 0, n - 1, supply_d(rng));
}

// Shared-covariate SMD between two row groups of one table.
double smd_x1(const CovariateTable& table, const std::vector<int>& a,
              const std::vector<int>& b) {
  const auto rep = statdist::standardized_mean_differences(table, a, b, {"X1"},
                                                           "a", "b");
  return rep.records[0].smd;
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

int main() {
  // 1. Structural counts.
  run(1, [] {
    const CovariateTable table = plain_table(3, 4, 6);
    std::mt19937_64 rng(1);
    DistanceMatrices dist = random_distances(3, 4, 6, rng);
    TemplateMatchSpec spec;
    spec.k = 1;
    const auto tn = templatematch::build_template_network(table, dist, spec);
    bool ok = tn.net.node_count == 19 && tn.net.arcs.size() == 49;
    int checked = 0;
    for (int trial = 0; trial < 120 && ok; ++trial) {
      const int r = 1 + int(rng() % 5);
      const int t = r + int(rng() % (9 - r));
      const int c = t + int(rng() % (11 - t));
      const CovariateTable tab = plain_table(r, t, c);
      const DistanceMatrices d = random_distances(r, t, c, rng);
      TemplateMatchSpec s;
      s.k = 1;
      const auto net = templatematch::build_template_network(tab, d, s);
      ok = net.net.node_count == r + 2 * t + c + 2 &&
           int(net.net.arcs.size()) == r + r * t + t + t * c + c;
      ++checked;
    }
    return std::pair(ok, "toy 19 nodes / 49 arcs; formulas hold on " +
                             std::to_string(checked) + " random (R,T,C)");
  });

  // 2. Toy enumeration count.
  run(2, [] {
    const auto outcomes = templatematch::enumerate_matched_samples(3, 4, 6, 1);
    return std::pair(outcomes.size() == 480,
                     "distinct matched outcomes for R=3,T=4,C=6,k=1: " +
                         std::to_string(outcomes.size()) + " (want 480)");
  });

  // 3. Solver vs exhaustive oracle.
  run(3, [] {
    std::mt19937_64 rng(20260811);
    int agree = 0, feasible = 0;
    for (int trial = 0; trial < 250; ++trial) {
      const auto net = random_flow_network(rng);
      const auto fast = flownet::solve_min_cost_flow(net);
      const auto slow = flownet::brute_force_min_cost(net);
      if (fast.feasible != slow.feasible) break;
      if (fast.feasible) {
        if (fast.total_cost != slow.total_cost) break;
        ++feasible;
      }
      ++agree;
    }
    return std::pair(agree == 250,
                     std::to_string(agree) + "/250 networks agree (" +
                         std::to_string(feasible) + " feasible)");
  });

  // 4 + 5. Template-match optimality and the lambda trade-off.
  {
    std::mt19937_64 rng(77);
    bool optimal = true, tradeoff = true;
    int instances = 0;
    const auto t0 = std::chrono::steady_clock::now();
    std::string fail_detail;
    for (int trial = 0; trial < 110; ++trial) {
      const int r = 1 + int(rng() % 3);
      const int t = r + int(rng() % (6 - r));
      const int c = t + int(rng() % (7 - t));
      const int k = (t >= 2 * r && rng() % 4 == 0) ? 2 : 1;
      const CovariateTable table = plain_table(r, t, c);
      const DistanceMatrices dist = random_distances(r, t, c, rng);
      double prev_s1 = -1, prev_s2 = -1;
      for (const double lambda : {0.01, 1.0, 100.0}) {
        TemplateMatchSpec spec;
        spec.k = k;
        spec.lambda = lambda;
        spec.cost_scale = 1000000000;
        const MatchedSample got = templatematch::solve_template_match(
            templatematch::build_template_network(table, dist, spec), spec);
        double best = 0;
        bool any = false;
        for (const auto& cand :
             templatematch::enumerate_matched_samples(r, t, c, k)) {
          const auto eval =
              templatematch::evaluate_matched_sample(cand, table, dist, spec);
          if (!eval) continue;
          if (!any || eval->objective < best) {
            any = true;
            best = eval->objective;
          }
        }
        if (!got.feasible || !any ||
            std::abs(got.objective - best) >
                1e-9 * std::max(1.0, std::abs(best))) {
          optimal = false;
          fail_detail = "objective mismatch at instance " +
                        std::to_string(trial);
        }
        if (prev_s1 >= 0 && (got.s2_pairing_cost > prev_s2 + 1e-7 ||
                             got.s1_template_cost < prev_s1 - 1e-7)) {
          tradeoff = false;
          fail_detail = "trade-off violated at instance " +
                        std::to_string(trial);
        }
        prev_s1 = got.s1_template_cost;
        prev_s2 = got.s2_pairing_cost;
      }
      ++instances;
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    report(4, optimal, secs,
           optimal ? std::to_string(instances) +
                         " instances x {0.01, 1, 100} match the enumeration "
                         "optimum (rel 1e-9)"
                   : fail_detail);
    report(5, tradeoff, secs,
           tradeoff ? "s2 weakly decreasing / s1 weakly increasing in lambda "
                      "on every instance"
                    : fail_detail);
  }

  // 6. Simulation bias targets at the full design scale.
  run(6, [] {
    simlab::SimConfig strong;
    strong.d = 10;
    strong.theta = 0.5;
    strong.nu = 0.0;
    strong.effect = simlab::Effect::Strong;
    strong.replicates = 200;
    strong.master_seed = 20260811;
    strong.algorithms = {{false, 0, 0.0}, {true, 1, 0.01}};

    simlab::SimConfig constant = strong;
    constant.effect = simlab::Effect::Constant;
    constant.algorithms = {{false, 0, 0.0}, {true, 1, 0.01}, {true, 1, 1.0},
                           {true, 1, 100.0}, {true, 2, 0.01}, {true, 2, 1.0},
                           {true, 2, 100.0}};

    const simlab::BiasReport rep = simlab::run_factorial({strong, constant});
    double mopt_bias = 0, tmpl_bias = 0, worst_const = 0;
    bool all_const_ok = true;
    std::string details;
    for (const auto& row : rep.rows) {
      if (row.effect == simlab::Effect::Strong) {
        if (!row.algorithm.is_template) mopt_bias = row.percent_bias;
        else tmpl_bias = row.percent_bias;
      } else {
        worst_const = std::max(worst_const, std::abs(row.percent_bias));
        all_const_ok = all_const_ok && std::abs(row.percent_bias) < 2.0 &&
                       row.replicates == 200;
      }
    }
    const bool a = mopt_bias <= -10.0;
    const bool b = std::abs(tmpl_bias) <= 6.0;
    return std::pair(a && b && all_const_ok,
                     "m_opt " + fmt2(mopt_bias) + "% (<= -10); template k=1 "
                     "lambda=0.01 " + fmt2(tmpl_bias) + "% (|.| <= 6); worst "
                     "constant-cell |bias| " + fmt2(worst_const) + "% (< 2)");
  });

  // 7. Analytic target effects.
  run(7, [] {
    const bool ok = simlab::ate_target(simlab::Effect::Constant) == 2.0 &&
                    simlab::ate_target(simlab::Effect::Mild) == 1.95 &&
                    simlab::ate_target(simlab::Effect::Strong) == 1.75;
    return std::pair(ok, std::string("ate_target = 2 / 1.95 / 1.75"));
  });

  // 8. Robust-distance invariance, bit identical.
  run(8, [] {
    std::mt19937_64 rng(31415);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      const int na = 2 + int(rng() % 4), nb = 2 + int(rng() % 4);
      const int d = 1 + int(rng() % 3);
      Eigen::MatrixXd a(na, d), b(nb, d);
      for (long i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
      for (long i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
      Eigen::MatrixXd pool(na + nb, d);
      pool << a, b;
      const Eigen::MatrixXd base =
          statdist::robust_mahalanobis_matrix(a, b, pool);
      const int col = int(rng() % d);
      auto tf = [&](Eigen::MatrixXd m) {
        for (long i = 0; i < m.rows(); ++i)
          m(i, col) = std::pow(m(i, col), 3) + 1.5;
        return m;
      };
      const Eigen::MatrixXd ta = tf(a), tb = tf(b);
      Eigen::MatrixXd tpool(na + nb, d);
      tpool << ta, tb;
      const Eigen::MatrixXd moved =
          statdist::robust_mahalanobis_matrix(ta, tb, tpool);
      for (long i = 0; i < base.rows(); ++i)
        for (long j = 0; j < base.cols(); ++j)
          if (base(i, j) != moved(i, j))
            return std::pair(false, "bits differ at trial " +
                                        std::to_string(trial));
    }
    return std::pair(true, std::string() +
                     "50 monotone-transform trials, bit-identical matrices");
  });

  // 9. Logistic correctness.
  run(9, [] {
    std::mt19937_64 rng(2718);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 200, p = 1 + int(rng() % 5);
      Eigen::MatrixXd x(n, p);
      for (long i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
      Eigen::VectorXd truth(p + 1);
      for (int j = 0; j <= p; ++j) truth[j] = 0.8 * normal(rng);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        const double eta = truth[0] + x.row(i).dot(truth.tail(p));
        y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
      }
      const auto model = statdist::fit_logistic(x, y);
      Eigen::MatrixXd design(n, p + 1);
      design.col(0).setOnes();
      design.rightCols(p) = x;
      const double ridge = model.regularized ? 1e-4 : 0.0;
      Eigen::VectorXd mask = Eigen::VectorXd::Ones(p + 1);
      mask[0] = 0;
      const Eigen::VectorXd score =
          design.transpose() * (y - model.predict(x)) -
          ridge * mask.cwiseProduct(model.coefficients);
      if (score.cwiseAbs().maxCoeff() >= 1e-8)
        return std::pair(false,
                         "score equations violated at trial " +
                             std::to_string(trial));
      const Eigen::VectorXd oracle =
          repmatch_tests::logistic_gd_oracle(design, y, ridge);
      if ((model.coefficients - oracle).cwiseAbs().maxCoeff() >= 1e-5)
        return std::pair(false, "gradient-descent oracle mismatch at trial " +
                                    std::to_string(trial));
    }
    return std::pair(true, std::string() +
                     "20 problems: score residual < 1e-8, oracle gap < 1e-5");
  });

  // 10. Template scenario: matched treated resemble the template.
  run(10, [] {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int r = 100, t = 500, c = 1500, d1 = 5, d = 10;
    CovariateTable table;
    const int n = r + t + c;
    table.shared.resize(n, d1);
    table.extended.resize(n, d - d1);
    for (int j = 0; j < d1; ++j)
      table.shared_names.push_back("X" + std::to_string(j + 1));
    for (int j = d1; j < d; ++j)
      table.extended_names.push_back("X" + std::to_string(j + 1));
    for (int i = 0; i < n; ++i) {
      const Role role = i < r       ? Role::Template
                        : i < r + t ? Role::Treated
                                    : Role::Control;
      const double shift = role == Role::Template  ? 0.25
                           : role == Role::Treated ? 1.0
                                                   : 0.0;
      table.unit_ids.push_back("u" + std::to_string(i));
      table.roles.push_back(role);
      for (int j = 0; j < d1; ++j)
        table.shared(i, j) = normal(rng) + (j == 0 ? shift : 0.0);
      for (int j = 0; j < d - d1; ++j)
        table.extended(i, j) = role == Role::Template
                                   ? std::numeric_limits<double>::quiet_NaN()
                                   : normal(rng);
    }

    cli::RunConfig config;  // M2 defaults: k=1, robust + 0.05 hard caliper
    config.k = 1;
    config.lambda = 1.0;
    config.shared_covariates = table.shared_names;
    config.extended_covariates = table.extended_names;
    const DistanceMatrices dist = cli::build_distances(table, config);
    const TemplateMatchSpec spec = cli::to_match_spec(config);
    const MatchedSample sample = templatematch::solve_template_match(
        templatematch::build_template_network(table, dist, spec), spec);
    if (!sample.feasible || sample.pairs.size() != 100)
      return std::pair(false, std::string("M2 match infeasible or wrong size"));

    const std::vector<int> tmpl_rows = table.rows_of(Role::Template);
    const std::vector<int> trt_rows = table.rows_of(Role::Treated);
    std::vector<int> matched_treated;
    for (const auto& [tt, cc] : sample.pairs)
      matched_treated.push_back(trt_rows[std::size_t(tt)]);
    const double matched_smd = smd_x1(table, matched_treated, tmpl_rows);

    const MatchedSample full = pairmatch::match_baseline_mopt(table, 0.05);
    std::vector<int> full_treated;
    for (const auto& [tt, cc] : full.pairs)
      full_treated.push_back(trt_rows[std::size_t(tt)]);
    const double full_smd = smd_x1(table, full_treated, tmpl_rows);

    const bool ok = std::abs(matched_smd) < 0.2 && full_smd > 0.5;
    return std::pair(ok, "matched-treated |SMD(X1)| vs template " +
                             fmt2(std::abs(matched_smd)) +
                             " (< 0.2); full-match SMD " + fmt2(full_smd) +
                             " (> 0.5)");
  });

  // 11. Byte-identical outputs of match and simulate.
  run(11, [] {
    const fs::path dir =
        fs::temp_directory_path() /
        ("repmatch_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::ostringstream cohort;
    cohort << "id,role,X1,X2,X3,E1\n";
    auto row = [&](const std::string& id, const std::string& role,
                   double shift, bool ext) {
      cohort << id << ',' << role;
      for (int j = 0; j < 3; ++j)
        cohort << ',' << (normal(rng) + (j == 0 ? shift : 0.0));
      cohort << ',';
      if (ext) cohort << normal(rng);
      cohort << '\n';
    };
    for (int i = 1; i <= 20; ++i)
      row("R" + std::to_string(i), "template", 0.25, false);
    for (int i = 1; i <= 60; ++i)
      row("T" + std::to_string(i), "treated", 1.0, true);
    for (int i = 1; i <= 150; ++i)
      row("C" + std::to_string(i), "control", 0.0, true);
    std::ofstream(dir / "cohort.csv", std::ios::binary) << cohort.str();

    cli::RunConfig config;
    config.input = (dir / "cohort.csv").string();
    config.shared_covariates = {"X1", "X2", "X3"};
    config.extended_covariates = {"E1"};
    config.k = 1;
    config.lambda = 1.0;

    auto run_match = [&](const std::string& sub) {
      cli::RunConfig c = config;
      fs::create_directories(dir / sub);
      c.output_dir = (dir / sub).string();
      return cli::cmd_match(c);
    };
    if (run_match("a") != cli::kExitOk || run_match("b") != cli::kExitOk)
      return std::pair(false, std::string("match run failed"));
    const bool match_same =
        slurp(dir / "a" / "pairs.csv") == slurp(dir / "b" / "pairs.csv") &&
        slurp(dir / "a" / "balance.csv") == slurp(dir / "b" / "balance.csv") &&
        slurp(dir / "a" / "summary.txt") == slurp(dir / "b" / "summary.txt");

    std::ofstream(dir / "grid.cfg", std::ios::binary)
        << "d = 10\ntheta = 0.5\nnu = 0\neffect = strong\n"
           "replicates = 8\nseed = 13\n"
           "template_size = 30\ntreated_size = 100\ncontrol_size = 300\n"
           "algorithms = m_opt, m_template:k=1:lambda=1\n";
    if (cli::cmd_simulate((dir / "grid.cfg").string(),
                          (dir / "s1.csv").string()) != cli::kExitOk ||
        cli::cmd_simulate((dir / "grid.cfg").string(),
                          (dir / "s2.csv").string()) != cli::kExitOk)
      return std::pair(false, std::string("simulate run failed"));
    const bool sim_same = slurp(dir / "s1.csv") == slurp(dir / "s2.csv");
    fs::remove_all(dir);
    return std::pair(match_same && sim_same,
                     std::string("match outputs ") +
                         (match_same ? "identical" : "DIFFER") +
                         "; simulate reports " +
                         (sim_same ? "identical" : "DIFFER"));
  });

  std::printf("%s: %d criterion(s) failed\n",
              failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
              failures);
  return failures;
}
