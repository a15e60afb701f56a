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

#ifndef REPMATCH_PAIRMATCH_HPP
#define REPMATCH_PAIRMATCH_HPP

#include <cstdint>

#include "repmatch/statdist.hpp"
#include "repmatch/templatematch.hpp"

namespace repmatch::pairmatch {

/// Classic bipartite pair matching (treated rows, control columns).
/// `pairs_requested < T` matches only the cheapest subset of treated.
struct BipartiteSpec {
  statdist::DistanceMatrix distance;
  int pairs_requested = 0;
  std::int64_t cost_scale = 100000;
};

/// Optimal pair matching through a source -> treated -> control -> sink
/// network with unit capacities. Returns pairs minimizing the total
/// distance; s1 is zero (there is no template side here).
templatematch::MatchedSample match_optimal_pairs(const BipartiteSpec& spec);

/// Matches every treated unit to a distinct control: robust Mahalanobis
/// distance on all covariates with a penalty-mode propensity caliper
/// (weight 1000). This is the stand-in for earthmover-based two-criteria
/// matching of the full treated group; it keeps the property that matters
/// downstream (an internally valid match of all treated units) without
/// the two-level balancing machinery.
templatematch::MatchedSample match_baseline_mopt(
    const statdist::CovariateTable& table, double caliper_width);

/// match_baseline_mopt with the robust distances and propensity scores
/// already in hand (the simulation hot path computes them once per
/// replicate and shares them across algorithms).
templatematch::MatchedSample match_baseline_mopt_from(
    const statdist::DistanceMatrix& robust_distances,
    const Eigen::VectorXd& treated_propensity,
    const Eigen::VectorXd& control_propensity, double caliper_width);

}  // namespace repmatch::pairmatch

#endif  // REPMATCH_PAIRMATCH_HPP
