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

#include "repmatch/templatematch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace repmatch::templatematch {

using statdist::CovariateTable;
using statdist::DistanceMatrices;
using statdist::Role;

namespace {

const char* kind_name(ArcKind k) {
  switch (k) {
    case ArcKind::SourceToTemplate: return "source->template";
    case ArcKind::TemplateToTreated: return "template->treated";
    case ArcKind::TreatedInternal: return "treated-internal";
    case ArcKind::TreatedToControl: return "treated->control";
    case ArcKind::ControlOut: return "control->out";
    case ArcKind::CategoryToSink: return "category->sink";
    case ArcKind::CategoryOverflow: return "category-overflow";
  }
  return "?";
}

void validate_spec(const TemplateMatchSpec& spec, int r, int t) {
  if (spec.k < 1 || std::int64_t(spec.k) * r > t)
    throw std::invalid_argument("k must satisfy 1 <= k <= floor(T/R)");
  if (!(spec.lambda > 0)) throw std::invalid_argument("lambda must be positive");
  if (spec.cost_scale < 1)
    throw std::invalid_argument("cost_scale must be at least 1");
  if (spec.sparsify_count < 0)
    throw std::invalid_argument("sparsify_count must be non-negative");
  if (!spec.forced_include_ids.empty() && !(spec.forced_include_penalty > 0))
    throw std::invalid_argument("forced inclusion needs a positive penalty");
}

std::vector<int> forced_treated_indices(const CovariateTable& table,
                                        const std::vector<std::string>& ids) {
  const std::vector<int> treated = table.rows_of(Role::Treated);
  std::vector<int> out;
  for (const std::string& id : ids) {
    int found = -1;
    for (std::size_t t = 0; t < treated.size(); ++t)
      if (table.unit_ids[treated[t]] == id) {
        found = int(t);
        break;
      }
    if (found < 0)
      throw std::invalid_argument("forced id is not a treated unit: " + id);
    out.push_back(found);
  }
  return out;
}

std::string truncated_list(const std::vector<int>& xs, std::size_t limit = 12) {
  std::string s;
  for (std::size_t i = 0; i < xs.size() && i < limit; ++i)
    s += (i ? ", " : "") + std::to_string(xs[i]);
  if (xs.size() > limit) s += ", ... (" + std::to_string(xs.size()) + " total)";
  return s;
}

}  // namespace

DistanceMatrices effective_distances(const CovariateTable& table,
                                     const DistanceMatrices& dist,
                                     const TemplateMatchSpec& spec,
                                     std::vector<std::string>* warnings) {
  const CaliperSpec& delta_caliper = spec.delta_caliper;
  const CaliperSpec& Delta_caliper = spec.Delta_caliper;
  DistanceMatrices eff = dist;
  if (delta_caliper.enabled) {
    if (eff.template_participation.size() != eff.delta.rows() ||
        eff.treated_participation.size() != eff.delta.cols())
      throw std::invalid_argument(
          "delta caliper needs participation scores in DistanceMatrices");
    auto res = statdist::apply_caliper(eff.delta, eff.template_participation,
                                       eff.treated_participation,
                                       delta_caliper.width, delta_caliper.mode,
                                       delta_caliper.penalty_weight);
    eff.delta = std::move(res.distances);
    if (warnings && !res.empty_rows.empty())
      warnings->push_back("delta caliper removed every arc of template rows " +
                          truncated_list(res.empty_rows));
  }
  if (Delta_caliper.enabled) {
    if (eff.treated_propensity.size() != eff.Delta.rows() ||
        eff.control_propensity.size() != eff.Delta.cols())
      throw std::invalid_argument(
          "Delta caliper needs propensity scores in DistanceMatrices");
    auto res = statdist::apply_caliper(eff.Delta, eff.treated_propensity,
                                       eff.control_propensity,
                                       Delta_caliper.width, Delta_caliper.mode,
                                       Delta_caliper.penalty_weight);
    eff.Delta = std::move(res.distances);
    if (warnings && !res.empty_rows.empty())
      warnings->push_back("Delta caliper removed every arc of treated rows " +
                          truncated_list(res.empty_rows));
  }
  if (!spec.exact_match_columns.empty()) {
    DistanceMatrices trimmed =
        remove_exact_mismatch(eff, table, spec.exact_match_columns);
    eff.Delta = std::move(trimmed.Delta);
  }
  if (spec.sparsify_count > 0) {
    if (eff.treated_propensity.size() != eff.Delta.rows() ||
        eff.control_propensity.size() != eff.Delta.cols())
      throw std::invalid_argument(
          "sparsification needs propensity scores in DistanceMatrices");
    const int keep = spec.sparsify_count;
    std::vector<std::pair<double, int>> order;
    for (long t = 0; t < eff.Delta.rows(); ++t) {
      order.clear();
      for (long c = 0; c < eff.Delta.cols(); ++c)
        if (eff.Delta.present(t, c))
          order.emplace_back(
              std::abs(eff.treated_propensity[t] - eff.control_propensity[c]),
              int(c));
      std::sort(order.begin(), order.end());
      for (std::size_t i = keep; i < order.size(); ++i)
        eff.Delta.present(t, order[i].second) = false;
    }
  }
  return eff;
}

statdist::DistanceMatrices remove_exact_mismatch(
    const statdist::DistanceMatrices& dist, const CovariateTable& table,
    const std::vector<std::string>& columns) {
  DistanceMatrices out = dist;
  if (columns.empty()) return out;
  std::vector<int> cols;
  for (const std::string& name : columns) {
    const int idx = table.categorical_index(name);
    if (idx < 0)
      throw std::invalid_argument("unknown exact-match column: " + name);
    cols.push_back(idx);
  }
  const std::vector<int> treated = table.rows_of(Role::Treated);
  const std::vector<int> control = table.rows_of(Role::Control);
  if (long(treated.size()) != out.Delta.rows() ||
      long(control.size()) != out.Delta.cols())
    throw std::invalid_argument("Delta shape does not match role counts");
  for (std::size_t t = 0; t < treated.size(); ++t)
    for (std::size_t c = 0; c < control.size(); ++c) {
      if (!out.Delta.present(long(t), long(c))) continue;
      for (int col : cols)
        if (table.categorical[treated[t]][col] !=
            table.categorical[control[c]][col]) {
          out.Delta.present(long(t), long(c)) = false;
          break;
        }
    }
  return out;
}

TemplateMatchSpec force_include(TemplateMatchSpec spec,
                                const std::vector<std::string>& treated_ids,
                                double penalty) {
  if (!treated_ids.empty() && !(penalty > 0))
    throw std::invalid_argument("forced inclusion needs a positive penalty");
  spec.forced_include_ids = treated_ids;
  spec.forced_include_penalty = treated_ids.empty() ? 0.0 : penalty;
  return spec;
}

TemplateNetwork build_template_network(const CovariateTable& table,
                                       const DistanceMatrices& dist,
                                       const TemplateMatchSpec& spec) {
  const int r_count = table.count_of(Role::Template);
  const int t_count = table.count_of(Role::Treated);
  const int c_count = table.count_of(Role::Control);
  if (r_count < 1 || t_count < 1 || c_count < 1)
    throw std::invalid_argument("need template, treated and control rows");
  validate_spec(spec, r_count, t_count);
  if (dist.delta.rows() != r_count || dist.delta.cols() != t_count ||
      dist.Delta.rows() != t_count || dist.Delta.cols() != c_count)
    throw std::invalid_argument("distance matrices do not match role counts");

  TemplateNetwork tn;
  tn.r_count = r_count;
  tn.t_count = t_count;
  tn.c_count = c_count;
  tn.k = spec.k;

  const DistanceMatrices eff =
      effective_distances(table, dist, spec, &tn.warnings);

  const std::vector<int> forced =
      forced_treated_indices(table, spec.forced_include_ids);
  std::vector<bool> is_forced(t_count, false);
  for (int t : forced) is_forced[t] = true;
  const bool forcing = !forced.empty();

  const std::int64_t pairs_wanted = std::int64_t(spec.k) * r_count;
  const double scale = double(spec.cost_scale);
  std::int64_t max_cost = 0;
  auto scaled = [&](double v) {
    const std::int64_t c = std::llround(scale * v);
    max_cost = std::max(max_cost, c);
    return c;
  };

  const int node_count = r_count + 2 * t_count + c_count + 2;
  std::vector<flownet::Arc> arcs;
  const std::size_t arc_bound =
      std::size_t(r_count) + std::size_t(r_count) * t_count + t_count +
      std::size_t(t_count) * c_count + c_count;
  arcs.reserve(arc_bound);
  tn.arc_kind.reserve(arc_bound);
  tn.arc_i.reserve(arc_bound);
  tn.arc_j.reserve(arc_bound);
  tn.arc_float_cost.reserve(arc_bound);
  auto push_arc = [&](int tail, int head, std::int64_t cap, std::int64_t cost,
                      ArcKind kind, int i, int j, double float_cost) {
    arcs.push_back({tail, head, cap, cost, std::int64_t(arcs.size())});
    tn.arc_kind.push_back(kind);
    tn.arc_i.push_back(i);
    tn.arc_j.push_back(j);
    tn.arc_float_cost.push_back(float_cost);
  };

  for (int r = 0; r < r_count; ++r)
    push_arc(tn.source(), tn.template_node(r), spec.k, 0,
             ArcKind::SourceToTemplate, r, -1, 0.0);

  std::vector<int> dead_templates;
  for (int r = 0; r < r_count; ++r) {
    int out_arcs = 0;
    for (int t = 0; t < t_count; ++t) {
      if (!eff.delta.present(r, t)) continue;
      push_arc(tn.template_node(r), tn.treated_left(t), 1,
               scaled(eff.delta.value(r, t)), ArcKind::TemplateToTreated, r, t,
               eff.delta.value(r, t));
      ++out_arcs;
    }
    if (out_arcs == 0) dead_templates.push_back(r);
  }
  if (!dead_templates.empty())
    tn.warnings.push_back("template units with no template->treated arcs: " +
                          truncated_list(dead_templates));

  for (int t = 0; t < t_count; ++t) {
    const bool penalized = forcing && !is_forced[t];
    push_arc(tn.treated_left(t), tn.treated_right(t), 1,
             penalized ? scaled(spec.forced_include_penalty) : 0,
             ArcKind::TreatedInternal, t, -1, 0.0);
  }

  std::vector<int> dead_treated;
  for (int t = 0; t < t_count; ++t) {
    int out_arcs = 0;
    for (int c = 0; c < c_count; ++c) {
      if (!eff.Delta.present(t, c)) continue;
      push_arc(tn.treated_right(t), tn.control_node(c), 1,
               scaled(spec.lambda * eff.Delta.value(t, c)),
               ArcKind::TreatedToControl, t, c, eff.Delta.value(t, c));
      ++out_arcs;
    }
    if (out_arcs == 0) dead_treated.push_back(t);
  }
  if (!dead_treated.empty())
    tn.warnings.push_back("treated units with no treated->control arcs: " +
                          truncated_list(dead_treated));

  const int sink = node_count - 1;
  for (int c = 0; c < c_count; ++c)
    push_arc(tn.control_node(c), sink, 1, 0, ArcKind::ControlOut, c, -1, 0.0);

  if (max_cost > 0 && pairs_wanted > (std::int64_t(1) << 62) / max_cost)
    throw std::invalid_argument(
        "cost_scale too large: scaled costs would overflow");

  tn.net = flownet::build_network(node_count, std::move(arcs), 0, sink,
                                  pairs_wanted);
  if (spec.fine_balance.enabled)
    return add_fine_balance_layer(tn, table, spec.fine_balance, spec);
  return tn;
}

TemplateNetwork add_fine_balance_layer(const TemplateNetwork& tn,
                                       const CovariateTable& table,
                                       const FineBalanceSpec& fb,
                                       const TemplateMatchSpec& spec) {
  const int cat_col = table.categorical_index(fb.column);
  if (cat_col < 0)
    throw std::invalid_argument("unknown fine-balance column: " + fb.column);
  const std::int64_t pairs_wanted = std::int64_t(tn.k) * tn.r_count;
  std::int64_t target_sum = 0;
  for (const auto& [name, count] : fb.target_counts) {
    if (count < 0) throw std::invalid_argument("negative fine-balance target");
    target_sum += count;
  }
  if (target_sum != pairs_wanted)
    throw std::invalid_argument("fine-balance targets must sum to k*R (" +
                                std::to_string(pairs_wanted) + "), got " +
                                std::to_string(target_sum));

  // Categories: target keys plus any category observed on a control.
  const std::vector<int> control_rows = table.rows_of(Role::Control);
  std::set<std::string> names;
  for (const auto& [name, count] : fb.target_counts) names.insert(name);
  for (int row : control_rows) names.insert(table.categorical[row][cat_col]);

  TemplateNetwork out = tn;
  out.category_names.assign(names.begin(), names.end());
  const int b_count = int(out.category_names.size());
  const int node_count = tn.net.node_count + b_count;
  const int old_sink = tn.net.node_count - 1;
  const int sink = node_count - 1;

  auto category_of = [&](int c) {
    const std::string& v = table.categorical[control_rows[std::size_t(c)]][cat_col];
    return int(std::lower_bound(out.category_names.begin(),
                                out.category_names.end(), v) -
               out.category_names.begin());
  };

  std::vector<flownet::Arc> arcs;
  out.arc_kind.clear();
  out.arc_i.clear();
  out.arc_j.clear();
  out.arc_float_cost.clear();
  auto push_arc = [&](int tail, int head, std::int64_t cap, std::int64_t cost,
                      ArcKind kind, int i, int j, double float_cost) {
    arcs.push_back({tail, head, cap, cost, std::int64_t(arcs.size())});
    out.arc_kind.push_back(kind);
    out.arc_i.push_back(i);
    out.arc_j.push_back(j);
    out.arc_float_cost.push_back(float_cost);
  };

  for (std::size_t a = 0; a < tn.net.arcs.size(); ++a) {
    if (tn.arc_kind[a] == ArcKind::ControlOut) continue;  // rewired below
    flownet::Arc arc = tn.net.arcs[a];
    if (arc.tail == old_sink) arc.tail = sink;
    if (arc.head == old_sink) arc.head = sink;
    push_arc(arc.tail, arc.head, arc.capacity, arc.cost, tn.arc_kind[a],
             tn.arc_i[a], tn.arc_j[a], tn.arc_float_cost[a]);
  }
  for (int c = 0; c < tn.c_count; ++c)
    push_arc(tn.control_node(c), out.category_node(category_of(c)), 1, 0,
             ArcKind::ControlOut, c, category_of(c), 0.0);

  const std::int64_t overflow_cost =
      std::llround(double(spec.cost_scale) * fb.overflow_penalty);
  for (int b = 0; b < b_count; ++b) {
    const auto it = fb.target_counts.find(out.category_names[b]);
    const std::int64_t target = it == fb.target_counts.end() ? 0 : it->second;
    push_arc(out.category_node(b), sink, target, 0, ArcKind::CategoryToSink, b,
             -1, 0.0);
    push_arc(out.category_node(b), sink, pairs_wanted, overflow_cost,
             ArcKind::CategoryOverflow, b, -1, fb.overflow_penalty);
  }

  out.net = flownet::build_network(node_count, std::move(arcs), 0, sink,
                                   pairs_wanted);
  return out;
}

MatchedSample solve_template_match(const TemplateNetwork& tn,
                                   const TemplateMatchSpec& spec) {
  flownet::SolveDiagnostics diag;
  const flownet::FlowSolution sol = flownet::solve_min_cost_flow(tn.net, &diag);

  MatchedSample out;
  out.warnings = tn.warnings;
  out.feasible = sol.feasible;
  if (!sol.feasible) {
    std::vector<std::pair<ArcKind, int>> cut_counts;
    for (std::size_t a = 0; a < tn.net.arcs.size(); ++a) {
      const flownet::Arc& arc = tn.net.arcs[a];
      if (diag.source_side[arc.tail] && !diag.source_side[arc.head]) {
        bool merged = false;
        for (auto& [kind, n] : cut_counts)
          if (kind == tn.arc_kind[a]) {
            ++n;
            merged = true;
            break;
          }
        if (!merged) cut_counts.emplace_back(tn.arc_kind[a], 1);
      }
    }
    std::string msg = "infeasible: delivered " +
                      std::to_string(diag.delivered) + " of " +
                      std::to_string(tn.net.supply) + " units; saturated cut:";
    if (cut_counts.empty()) {
      // Nothing crosses the cut at all: some reachable layer has no arcs.
      bool reached_treated_right = false;
      for (int t = 0; t < tn.t_count && !reached_treated_right; ++t)
        reached_treated_right = diag.source_side[tn.treated_right(t)];
      msg += reached_treated_right
                 ? " treated->control layer has no usable arcs"
                 : " template->treated layer has no usable arcs";
    }
    for (const auto& [kind, n] : cut_counts)
      msg += std::string(" ") + kind_name(kind) + " x" + std::to_string(n) + ";";
    out.diagnostic = msg;
    return out;
  }

  for (std::size_t a = 0; a < tn.net.arcs.size(); ++a) {
    if (sol.flow[a] != 1) continue;
    switch (tn.arc_kind[a]) {
      case ArcKind::TemplateToTreated:
        out.template_assignment.emplace_back(tn.arc_i[a], tn.arc_j[a]);
        out.s1_template_cost += tn.arc_float_cost[a];
        break;
      case ArcKind::TreatedToControl:
        out.pairs.emplace_back(tn.arc_i[a], tn.arc_j[a]);
        out.s2_pairing_cost += tn.arc_float_cost[a];
        break;
      default:
        break;
    }
  }
  out.objective = out.s1_template_cost + spec.lambda * out.s2_pairing_cost;
  return out;
}

std::vector<CandidateSample> enumerate_matched_samples(int r_count, int t_count,
                                                       int c_count, int k) {
  if (r_count < 1 || t_count < 1 || c_count < 1 || k < 1)
    throw std::invalid_argument("counts and k must be positive");
  const int n = k * r_count;
  if (n > t_count || n > c_count)
    throw std::invalid_argument("k*R exceeds treated or control count");

  double count = 1.0;
  for (int i = 0; i < n; ++i)
    count *= double(t_count - i) / double(i + 1) * double(c_count - i);
  if (count > 1e6)
    throw std::invalid_argument("enumeration too large (guard 1e6 outcomes)");

  std::vector<CandidateSample> out;
  std::vector<int> treated(n);
  std::vector<int> controls(n);
  std::vector<bool> control_used(c_count, false);

  auto assign_controls = [&](auto&& self, int i) -> void {
    if (i == n) {
      out.push_back({treated, controls});
      return;
    }
    for (int c = 0; c < c_count; ++c) {
      if (control_used[c]) continue;
      control_used[c] = true;
      controls[i] = c;
      self(self, i + 1);
      control_used[c] = false;
    }
  };
  auto choose_treated = [&](auto&& self, int i, int next) -> void {
    if (i == n) {
      assign_controls(assign_controls, 0);
      return;
    }
    for (int t = next; t <= t_count - (n - i); ++t) {
      treated[i] = t;
      self(self, i + 1, t + 1);
    }
  };
  choose_treated(choose_treated, 0, 0);
  return out;
}

std::optional<CandidateEvaluation> evaluate_matched_sample(
    const CandidateSample& candidate, const CovariateTable& table,
    const DistanceMatrices& dist, const TemplateMatchSpec& spec) {
  const int n = int(candidate.treated.size());
  if (int(candidate.controls.size()) != n)
    throw std::invalid_argument("candidate arrays disagree on length");

  CandidateEvaluation eval;
  for (int i = 0; i < n; ++i) {
    if (!dist.Delta.present(candidate.treated[i], candidate.controls[i]))
      return std::nullopt;
    eval.s2 += dist.Delta.value(candidate.treated[i], candidate.controls[i]);
  }

  // Best template assignment by exhaustive search: each template unit
  // takes k of the candidate's treated units.
  const int r_count = int(dist.delta.rows());
  std::vector<int> quota(r_count, spec.k);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double best = kInf;
  auto rec = [&](auto&& self, int i, double cost) -> void {
    if (cost >= best) return;
    if (i == n) {
      best = cost;
      return;
    }
    const int t = candidate.treated[i];
    for (int r = 0; r < r_count; ++r) {
      if (quota[r] == 0 || !dist.delta.present(r, t)) continue;
      --quota[r];
      self(self, i + 1, cost + dist.delta.value(r, t));
      ++quota[r];
    }
  };
  rec(rec, 0, 0.0);
  if (best == kInf) return std::nullopt;
  eval.s1 = best;

  if (!spec.forced_include_ids.empty()) {
    const std::vector<int> forced =
        forced_treated_indices(table, spec.forced_include_ids);
    for (int t : candidate.treated)
      if (std::find(forced.begin(), forced.end(), t) == forced.end())
        eval.penalties += spec.forced_include_penalty;
  }
  if (spec.fine_balance.enabled) {
    const int col = table.categorical_index(spec.fine_balance.column);
    if (col < 0)
      throw std::invalid_argument("unknown fine-balance column: " +
                                  spec.fine_balance.column);
    const std::vector<int> control_rows = table.rows_of(Role::Control);
    std::map<std::string, std::int64_t> counts;
    for (int c : candidate.controls)
      ++counts[table.categorical[control_rows[std::size_t(c)]][col]];
    for (const auto& [name, cnt] : counts) {
      const auto it = spec.fine_balance.target_counts.find(name);
      const std::int64_t target =
          it == spec.fine_balance.target_counts.end() ? 0 : it->second;
      if (cnt > target)
        eval.penalties +=
            double(cnt - target) * spec.fine_balance.overflow_penalty;
    }
  }
  eval.objective = eval.s1 + spec.lambda * eval.s2 + eval.penalties;
  return eval;
}

}  // namespace repmatch::templatematch
