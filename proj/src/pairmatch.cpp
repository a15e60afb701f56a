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

#include "repmatch/pairmatch.hpp"

#include <cmath>
#include <stdexcept>

#include "repmatch/flownet.hpp"

namespace repmatch::pairmatch {

using statdist::CovariateTable;
using statdist::DistanceMatrix;
using statdist::Role;
using templatematch::MatchedSample;

MatchedSample match_optimal_pairs(const BipartiteSpec& spec) {
  const long t_count = spec.distance.rows();
  const long c_count = spec.distance.cols();
  if (t_count < 1 || c_count < 1)
    throw std::invalid_argument("distance matrix must be non-empty");
  if (spec.pairs_requested < 1 || spec.pairs_requested > t_count)
    throw std::invalid_argument("pairs_requested must be in [1, T]");
  if (spec.cost_scale < 1)
    throw std::invalid_argument("cost_scale must be at least 1");

  // Nodes: source, treated 1..T, controls T+1..T+C, sink.
  const int source = 0;
  const int sink = int(t_count + c_count + 1);
  auto treated_node = [](long t) { return int(1 + t); };
  auto control_node = [&](long c) { return int(1 + t_count + c); };

  std::vector<flownet::Arc> arcs;
  std::vector<std::pair<int, int>> arc_pair;  // (t, c) for distance arcs
  std::vector<double> arc_float;
  arcs.reserve(std::size_t(t_count) + std::size_t(t_count) * c_count + c_count);
  arc_pair.reserve(std::size_t(t_count) * c_count);
  arc_float.reserve(std::size_t(t_count) * c_count);
  for (long t = 0; t < t_count; ++t)
    arcs.push_back({source, treated_node(t), 1, 0, 0});
  for (long t = 0; t < t_count; ++t)
    for (long c = 0; c < c_count; ++c) {
      if (!spec.distance.present(t, c)) continue;
      const double v = spec.distance.value(t, c);
      arcs.push_back({treated_node(t), control_node(c), 1,
                      std::llround(double(spec.cost_scale) * v),
                      std::int64_t(arc_pair.size())});
      arc_pair.emplace_back(int(t), int(c));
      arc_float.push_back(v);
    }
  const std::size_t first_distance_arc = std::size_t(t_count);
  const std::size_t distance_arcs = arc_pair.size();
  for (long c = 0; c < c_count; ++c)
    arcs.push_back({control_node(c), sink, 1, 0, 0});

  const flownet::FlowNetwork net =
      flownet::build_network(int(t_count + c_count + 2), std::move(arcs),
                             source, sink, spec.pairs_requested);
  flownet::SolveDiagnostics diag;
  const flownet::FlowSolution sol = flownet::solve_min_cost_flow(net, &diag);

  MatchedSample out;
  out.feasible = sol.feasible;
  if (!sol.feasible) {
    out.diagnostic = "infeasible: delivered " + std::to_string(diag.delivered) +
                     " of " + std::to_string(net.supply) +
                     " units (too few reachable controls)";
    return out;
  }
  for (std::size_t i = 0; i < distance_arcs; ++i) {
    if (sol.flow[first_distance_arc + i] != 1) continue;
    out.pairs.push_back(arc_pair[i]);
    out.s2_pairing_cost += arc_float[i];
  }
  out.objective = out.s2_pairing_cost;
  return out;
}

MatchedSample match_baseline_mopt_from(const DistanceMatrix& robust_distances,
                                       const Eigen::VectorXd& treated_propensity,
                                       const Eigen::VectorXd& control_propensity,
                                       double caliper_width) {
  if (robust_distances.rows() > robust_distances.cols())
    throw std::invalid_argument("baseline match needs T <= C");
  BipartiteSpec spec;
  spec.distance = statdist::apply_caliper(robust_distances, treated_propensity,
                                          control_propensity, caliper_width,
                                          statdist::CaliperMode::Penalty, 1000.0)
                      .distances;
  spec.pairs_requested = int(robust_distances.rows());
  MatchedSample out = match_optimal_pairs(spec);
  if (!out.feasible)
    throw std::runtime_error("baseline match infeasible: " + out.diagnostic);
  return out;
}

MatchedSample match_baseline_mopt(const CovariateTable& table,
                                  double caliper_width) {
  const std::vector<int> treated = table.rows_of(Role::Treated);
  const std::vector<int> control = table.rows_of(Role::Control);
  if (treated.empty() || control.empty())
    throw std::invalid_argument("need treated and control rows");
  if (treated.size() > control.size())
    throw std::invalid_argument("baseline match needs T <= C");

  const Eigen::MatrixXd xt = table.observational_rows(treated);
  const Eigen::MatrixXd xc = table.observational_rows(control);
  Eigen::MatrixXd pool(xt.rows() + xc.rows(), xt.cols());
  pool << xt, xc;

  const Eigen::VectorXd prop = statdist::propensity_scores(table);
  Eigen::VectorXd pt(long(treated.size())), pc(long(control.size()));
  for (std::size_t i = 0; i < treated.size(); ++i) pt[long(i)] = prop[treated[i]];
  for (std::size_t i = 0; i < control.size(); ++i) pc[long(i)] = prop[control[i]];

  return match_baseline_mopt_from(
      DistanceMatrix::dense(statdist::robust_mahalanobis_matrix(xt, xc, pool)),
      pt, pc, caliper_width);
}

}  // namespace repmatch::pairmatch
