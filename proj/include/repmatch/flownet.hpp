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

#ifndef REPMATCH_FLOWNET_HPP
#define REPMATCH_FLOWNET_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace repmatch::flownet {

/// Directed arc with integer capacity and cost. The label is an opaque
/// tag owned by the caller (matching layers use it to recover edge kinds).
struct Arc {
  int tail = 0;
  int head = 0;
  std::int64_t capacity = 0;
  std::int64_t cost = 0;
  std::int64_t label = 0;
};

/// Immutable single-commodity flow network: `supply` units leave `source`
/// and must reach `sink`. Costs are integers by contract; floating-point
/// costs are scaled and rounded by the layers above.
struct FlowNetwork {
  int node_count = 0;
  std::vector<Arc> arcs;
  int source = 0;
  int sink = 0;
  std::int64_t supply = 0;
};

/// Result of a min-cost-flow solve. `flow[i]` is the flow on `arcs[i]`.
/// Infeasibility is a value, not an error: `feasible == false` comes with
/// an all-zero flow vector and zero cost.
struct FlowSolution {
  std::vector<std::int64_t> flow;
  std::int64_t total_cost = 0;
  bool feasible = true;
};

/// Extra information about a solve, mainly for infeasibility diagnostics.
/// `source_side[v]` marks nodes reachable from the source in the final
/// residual graph; arcs crossing out of that set form a saturated cut.
struct SolveDiagnostics {
  std::int64_t delivered = 0;
  std::vector<bool> source_side;
};

/// Validates and assembles a FlowNetwork. Throws std::invalid_argument
/// naming the offending arc on self-loops, out-of-range node ids,
/// negative capacities or negative costs.
FlowNetwork build_network(int node_count, std::vector<Arc> arcs, int source,
                          int sink, std::int64_t supply);

/// Minimum-cost flow by successive shortest augmenting paths with node
/// potentials (all reduced costs stay non-negative, so each round is a
/// Dijkstra). Deterministic: ties in the path search are broken by
/// smallest node id, then smallest arc index.
FlowSolution solve_min_cost_flow(const FlowNetwork& net,
                                 SolveDiagnostics* diag = nullptr);

/// Exhaustive test oracle: enumerates every capacity-respecting integer
/// assignment of arc flows and keeps the cheapest conserving one.
/// Throws std::invalid_argument if prod(capacity + 1) exceeds 1e7.
FlowSolution brute_force_min_cost(const FlowNetwork& net);

/// Writes the network in DIMACS min format ("p min" header, "n" supply
/// lines, "a tail head 0 cap cost" arc lines) for external cross-checks.
void write_dimacs(const FlowNetwork& net, std::ostream& out);

}  // namespace repmatch::flownet

#endif  // REPMATCH_FLOWNET_HPP
