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

#ifndef REPMATCH_TEMPLATEMATCH_HPP
#define REPMATCH_TEMPLATEMATCH_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "repmatch/flownet.hpp"
#include "repmatch/statdist.hpp"

namespace repmatch::templatematch {

struct FineBalanceSpec {
  bool enabled = false;
  std::string column;
  std::map<std::string, std::int64_t> target_counts;  // must sum to k*R
  double overflow_penalty = 0.0;
};

struct CaliperSpec {
  bool enabled = false;
  double width = 0.05;
  statdist::CaliperMode mode = statdist::CaliperMode::Hard;
  double penalty_weight = 0.0;
};

/// Design options for one template match. `k` is the number of pairs per
/// template unit (total pairs k*R), `lambda` the weight on the
/// treated-to-control distances. Float costs become integers as
/// round(cost_scale * value).
struct TemplateMatchSpec {
  int k = 1;
  double lambda = 100.0;
  std::int64_t cost_scale = 100000;
  CaliperSpec delta_caliper;  // on participation scores
  CaliperSpec Delta_caliper;  // on propensity scores
  std::vector<std::string> exact_match_columns;
  FineBalanceSpec fine_balance;
  int sparsify_count = 0;  // keep this many nearest controls per treated; 0 = dense
  std::vector<std::string> forced_include_ids;
  double forced_include_penalty = 0.0;
};

enum class ArcKind : std::int64_t {
  SourceToTemplate = 1,
  TemplateToTreated,
  TreatedInternal,
  TreatedToControl,
  ControlOut,
  CategoryToSink,
  CategoryOverflow,
};

/// The assembled flow network plus everything needed to read a solution
/// back: role-tagged node ids, per-arc kinds/indices, and the original
/// floating-point cost of every distance arc.
struct TemplateNetwork {
  flownet::FlowNetwork net;
  int r_count = 0;
  int t_count = 0;
  int c_count = 0;
  int k = 1;
  std::vector<std::string> category_names;  // fine-balance layer, if any
  std::vector<ArcKind> arc_kind;
  std::vector<int> arc_i;  // template / treated / control / category index
  std::vector<int> arc_j;
  std::vector<double> arc_float_cost;  // unscaled delta or Delta (no lambda)
  std::vector<std::string> warnings;

  int source() const { return 0; }
  int template_node(int r) const { return 1 + r; }
  int treated_left(int t) const { return 1 + r_count + t; }
  int treated_right(int t) const { return 1 + r_count + t_count + t; }
  int control_node(int c) const { return 1 + r_count + 2 * t_count + c; }
  int category_node(int b) const {
    return 1 + r_count + 2 * t_count + c_count + b;
  }
  int sink() const { return net.node_count - 1; }
};

/// One matched sample: the treated-to-control pairs, the template units
/// that selected each treated, and the objective split into the template
/// cost S1 (sum of delta) and the pairing cost S2 (sum of Delta,
/// unweighted). objective = s1 + lambda * s2, recomputed in floating
/// point from the original distances.
struct MatchedSample {
  std::vector<std::pair<int, int>> pairs;                // (treated, control)
  std::vector<std::pair<int, int>> template_assignment;  // (template, treated)
  double s1_template_cost = 0.0;
  double s2_pairing_cost = 0.0;
  double objective = 0.0;
  bool feasible = false;
  std::string diagnostic;
  std::vector<std::string> warnings;
};

/// Applies the spec's calipers, exact-match removal and sparsification to
/// the raw distances, in that order. Absent entries become missing arcs.
/// Exposed so candidate scoring can run on the same effective costs the
/// network is built from.
statdist::DistanceMatrices effective_distances(
    const statdist::CovariateTable& table,
    const statdist::DistanceMatrices& dist, const TemplateMatchSpec& spec,
    std::vector<std::string>* warnings = nullptr);

/// Builds the tripartite network: source -> template -> treated ->
/// treated' -> control -> sink, with exact-match removal, sparsification
/// to the nearest controls in propensity score, forced-inclusion
/// penalties and the optional fine-balance category layer applied.
TemplateNetwork build_template_network(const statdist::CovariateTable& table,
                                       const statdist::DistanceMatrices& dist,
                                       const TemplateMatchSpec& spec);

/// Solves the network with supply k*R and extracts the matched sample.
MatchedSample solve_template_match(const TemplateNetwork& tn,
                                   const TemplateMatchSpec& spec);

/// Rebuilds `tn` with a category layer between the controls and the sink:
/// each control feeds its category, each category has a zero-cost arc of
/// capacity target_counts[b] plus a penalized overflow arc (near-fine
/// balance).
TemplateNetwork add_fine_balance_layer(const TemplateNetwork& tn,
                                       const statdist::CovariateTable& table,
                                       const FineBalanceSpec& fb,
                                       const TemplateMatchSpec& spec);

/// Removes Delta entries wherever treated and control disagree on any of
/// the listed categorical columns. delta is untouched.
statdist::DistanceMatrices remove_exact_mismatch(
    const statdist::DistanceMatrices& dist,
    const statdist::CovariateTable& table,
    const std::vector<std::string>& columns);

/// Marks the listed treated units as must-include: all other treated
/// units' internal arcs receive `penalty`.
TemplateMatchSpec force_include(TemplateMatchSpec spec,
                                const std::vector<std::string>& treated_ids,
                                double penalty);

/// A candidate matched outcome: pair i is (treated[i], controls[i]).
struct CandidateSample {
  std::vector<int> treated;
  std::vector<int> controls;
};

/// Enumerates every distinct matched outcome (treated subset of size k*R
/// with an injective control assignment). Guarded at 1e6 outcomes.
std::vector<CandidateSample> enumerate_matched_samples(int r_count,
                                                       int t_count,
                                                       int c_count, int k);

struct CandidateEvaluation {
  double s1 = 0.0;         // best template assignment cost for this outcome
  double s2 = 0.0;         // sum of Delta over the pairs
  double penalties = 0.0;  // forced-inclusion + fine-balance overflow
  double objective = 0.0;  // s1 + lambda * s2 + penalties
};

/// Scores one candidate outcome by brute force (no flow solver): the
/// template side is assigned by exhaustive enumeration. Returns nullopt
/// when the candidate uses an absent distance entry or no template
/// assignment exists. Pass the effective_distances() output so the costs
/// match what the network was built from. Test oracle for
/// solve_template_match.
std::optional<CandidateEvaluation> evaluate_matched_sample(
    const CandidateSample& candidate, const statdist::CovariateTable& table,
    const statdist::DistanceMatrices& dist, const TemplateMatchSpec& spec);

}  // namespace repmatch::templatematch

#endif  // REPMATCH_TEMPLATEMATCH_HPP
