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

#include <doctest.h>

#include <numeric>
#include <random>
#include <set>

#include "repmatch/pairmatch.hpp"

using namespace repmatch::pairmatch;
using repmatch::statdist::CovariateTable;
using repmatch::statdist::DistanceMatrix;
using repmatch::statdist::Role;
using repmatch::templatematch::MatchedSample;

namespace {

// Exhaustive injective assignment of controls to the chosen treated
// subset; optimal by construction.
double permutation_oracle(const DistanceMatrix& dist, int pairs) {
  const int t = int(dist.rows()), c = int(dist.cols());
  std::vector<bool> used_c(std::size_t(c), false);
  double best = std::numeric_limits<double>::infinity();
  // choose which treated to match (subset of size `pairs`), then assign
  auto assign = [&](auto&& self, const std::vector<int>& chosen, std::size_t i,
                    double acc) -> void {
    if (acc >= best) return;
    if (i == chosen.size()) {
      best = acc;
      return;
    }
    for (int cc = 0; cc < c; ++cc) {
      if (used_c[std::size_t(cc)] || !dist.present(chosen[i], cc)) continue;
      used_c[std::size_t(cc)] = true;
      self(self, chosen, i + 1, acc + dist.value(chosen[i], cc));
      used_c[std::size_t(cc)] = false;
    }
  };
  std::vector<int> chosen;
  auto pick = [&](auto&& self, int next, int left) -> void {
    if (left == 0) {
      assign(assign, chosen, 0, 0.0);
      return;
    }
    for (int tt = next; tt <= t - left; ++tt) {
      chosen.push_back(tt);
      self(self, tt + 1, left - 1);
      chosen.pop_back();
    }
  };
  pick(pick, 0, pairs);
  return best;
}

DistanceMatrix random_matrix(int t, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd m(t, c);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = unif(rng);
  return DistanceMatrix::dense(std::move(m));
}

}  // namespace

TEST_CASE("the five-control schematic match is recovered when optimal") {
  // Crafted so {(T1,C3), (T2,C1), (T3,C4)} is the unique optimum.
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(3, 5, 1.0);
  m(0, 2) = m(1, 0) = m(2, 3) = 0.05;
  BipartiteSpec spec;
  spec.distance = DistanceMatrix::dense(m);
  spec.pairs_requested = 3;
  const MatchedSample sample = match_optimal_pairs(spec);
  REQUIRE(sample.feasible);
  const std::vector<std::pair<int, int>> want = {{0, 2}, {1, 0}, {2, 3}};
  CHECK(sample.pairs == want);
  CHECK(sample.s1_template_cost == 0.0);
  CHECK(sample.s2_pairing_cost == doctest::Approx(0.15));
}

TEST_CASE("one treated and one control make one pair") {
  BipartiteSpec spec;
  spec.distance = DistanceMatrix::dense(Eigen::MatrixXd::Constant(1, 1, 0.4));
  spec.pairs_requested = 1;
  const MatchedSample sample = match_optimal_pairs(spec);
  REQUIRE(sample.feasible);
  CHECK(sample.pairs == std::vector<std::pair<int, int>>{{0, 0}});
}

TEST_CASE("bipartite matching equals the permutation oracle") {
  std::mt19937_64 rng(20260811);
  for (int trial = 0; trial < 40; ++trial) {
    const int t = 2 + int(rng() % 5);  // up to 6
    const int c = t + int(rng() % (8 - t));
    const int pairs = 1 + int(rng() % t);
    BipartiteSpec spec;
    spec.distance = random_matrix(t, c, rng);
    spec.pairs_requested = pairs;
    spec.cost_scale = 1000000000;
    const MatchedSample sample = match_optimal_pairs(spec);
    REQUIRE(sample.feasible);
    CHECK(int(sample.pairs.size()) == pairs);
    std::set<int> used_t, used_c;
    for (const auto& [tt, cc] : sample.pairs) {
      CHECK(used_t.insert(tt).second);
      CHECK(used_c.insert(cc).second);
    }
    CHECK(sample.s2_pairing_cost ==
          doctest::Approx(permutation_oracle(spec.distance, pairs))
              .epsilon(1e-9));
  }
}

TEST_CASE("absent entries can make the request infeasible") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(2, 2, 1.0);
  DistanceMatrix dist = DistanceMatrix::dense(m);
  dist.present(0, 0) = dist.present(0, 1) = false;  // treated 0 unmatchable
  BipartiteSpec spec;
  spec.distance = dist;
  spec.pairs_requested = 2;
  const MatchedSample sample = match_optimal_pairs(spec);
  CHECK_FALSE(sample.feasible);
  CHECK(sample.diagnostic.find("infeasible") != std::string::npos);

  spec.pairs_requested = 3;
  CHECK_THROWS_AS(match_optimal_pairs(spec), std::invalid_argument);
}

TEST_CASE("baseline full match on duplicated units costs nothing") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int t = 30, d = 4;
  Eigen::MatrixXd x(t, d);
  for (long i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);

  CovariateTable table;
  table.shared.resize(2 * t, d);
  table.shared << x, x;
  table.extended.resize(2 * t, 0);
  for (int j = 0; j < d; ++j)
    table.shared_names.push_back("X" + std::to_string(j + 1));
  for (int i = 0; i < t; ++i) {
    table.unit_ids.push_back("t" + std::to_string(i));
    table.roles.push_back(Role::Treated);
  }
  for (int i = 0; i < t; ++i) {
    table.unit_ids.push_back("c" + std::to_string(i));
    table.roles.push_back(Role::Control);
  }
  const MatchedSample sample = match_baseline_mopt(table, 0.05);
  REQUIRE(sample.feasible);
  CHECK(int(sample.pairs.size()) == t);
  CHECK(sample.s2_pairing_cost == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("baseline match equals the oracle on the penalized distances") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int t = 4, c = 6;
    const DistanceMatrix raw = random_matrix(t, c, rng);
    Eigen::VectorXd pt(t), pc(c);
    for (int i = 0; i < t; ++i) pt[i] = unif(rng);
    for (int i = 0; i < c; ++i) pc[i] = unif(rng);
    const MatchedSample sample = match_baseline_mopt_from(raw, pt, pc, 0.05);
    REQUIRE(sample.feasible);
    CHECK(int(sample.pairs.size()) == t);

    const DistanceMatrix penalized =
        repmatch::statdist::apply_caliper(raw, pt, pc, 0.05,
                                          repmatch::statdist::CaliperMode::Penalty,
                                          1000.0)
            .distances;
    CHECK(sample.s2_pairing_cost ==
          doctest::Approx(permutation_oracle(penalized, t)).epsilon(1e-6));
  }
}

TEST_CASE("baseline match balances a shifted covariate") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int t = 1000, c = 3000, d = 5;
  CovariateTable table;
  table.shared.resize(t + c, d);
  table.extended.resize(t + c, 0);
  for (int j = 0; j < d; ++j)
    table.shared_names.push_back("X" + std::to_string(j + 1));
  for (int i = 0; i < t + c; ++i) {
    const bool treated = i < t;
    table.unit_ids.push_back((treated ? "t" : "c") + std::to_string(i));
    table.roles.push_back(treated ? Role::Treated : Role::Control);
    for (int j = 0; j < d; ++j)
      table.shared(i, j) = normal(rng) + (treated && j == 0 ? 0.5 : 0.0);
  }
  const MatchedSample sample = match_baseline_mopt(table, 0.05);
  REQUIRE(sample.feasible);
  REQUIRE(int(sample.pairs.size()) == t);

  std::vector<int> matched_controls;
  for (const auto& [tt, cc] : sample.pairs) matched_controls.push_back(t + cc);
  std::vector<int> treated_rows(t);
  std::iota(treated_rows.begin(), treated_rows.end(), 0);
  const auto report = repmatch::statdist::standardized_mean_differences(
      table, treated_rows, matched_controls, {"X1"}, "treated", "matched");
  CHECK(std::abs(report.records[0].smd) < 0.1);
}
