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

#include "repmatch/flownet.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <utility>

namespace repmatch::flownet {

namespace {

constexpr std::int64_t kInfCost = std::numeric_limits<std::int64_t>::max() / 4;

std::string arc_to_string(int index, const Arc& a) {
  return "arc #" + std::to_string(index) + " (" + std::to_string(a.tail) +
         " -> " + std::to_string(a.head) + ", cap " +
         std::to_string(a.capacity) + ", cost " + std::to_string(a.cost) + ")";
}

}  // namespace

FlowNetwork build_network(int node_count, std::vector<Arc> arcs, int source,
                          int sink, std::int64_t supply) {
  if (node_count <= 0) throw std::invalid_argument("node_count must be positive");
  if (source < 0 || source >= node_count || sink < 0 || sink >= node_count)
    throw std::invalid_argument("source/sink node id out of range");
  if (supply < 0) throw std::invalid_argument("supply must be non-negative");
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const Arc& a = arcs[i];
    if (a.tail == a.head)
      throw std::invalid_argument("self-loop: " + arc_to_string(int(i), a));
    if (a.tail < 0 || a.tail >= node_count || a.head < 0 || a.head >= node_count)
      throw std::invalid_argument("node id out of range: " + arc_to_string(int(i), a));
    if (a.capacity < 0)
      throw std::invalid_argument("negative capacity: " + arc_to_string(int(i), a));
    if (a.cost < 0)
      throw std::invalid_argument("negative cost: " + arc_to_string(int(i), a));
  }
  FlowNetwork net;
  net.node_count = node_count;
  net.arcs = std::move(arcs);
  net.source = source;
  net.sink = sink;
  net.supply = supply;
  return net;
}

// Successive shortest augmenting paths with node potentials, run in the
// transshipment form: the supply is first pushed along the zero-cost
// source arcs (which are tight, so reduced-cost optimality is untouched),
// leaving excesses spread over the source's neighbours. Each round then
// runs a Dijkstra on reduced costs from the lowest-numbered node with
// excess and augments along the shortest path to the sink. Searching from
// one excess node at a time keeps each round local instead of rescanning
// the whole zero-distance plateau in front of the source.
//
// Forward arcs sit in a CSR ordered by arc index and carry their hot data
// (head, residual, cost) in one 16-byte record; residual back arcs are
// kept in small sorted per-node lists holding only the arcs with positive
// flow, maintained along each augmenting path. Scan order is fixed, so
// repeated solves are bit-identical.
FlowSolution solve_min_cost_flow(const FlowNetwork& net,
                                 SolveDiagnostics* diag) {
  const int n = net.node_count;
  const std::size_t m = net.arcs.size();

  if (net.supply > std::numeric_limits<std::int32_t>::max())
    throw std::invalid_argument("supply exceeds solver range");

  struct FwdArc {
    std::int32_t head;
    std::int32_t res;  // capacities beyond the supply are equivalent to it
    std::int64_t cost;
  };
  static_assert(sizeof(FwdArc) == 16);

  // CSR over forward arcs (ascending arc index per node).
  std::vector<std::int32_t> offset(n + 1, 0);
  for (std::size_t i = 0; i < m; ++i) ++offset[net.arcs[i].tail + 1];
  for (int v = 0; v < n; ++v) offset[v + 1] += offset[v];
  std::vector<FwdArc> fwd(m);
  std::vector<std::int32_t> fwd_arc(m);     // CSR position -> arc id
  std::vector<std::int32_t> pos_of_arc(m);  // arc id -> CSR position
  {
    std::vector<std::int32_t> fill(offset.begin(), offset.end() - 1);
    for (std::size_t i = 0; i < m; ++i) {
      const Arc& a = net.arcs[i];
      const std::int32_t pos = fill[a.tail]++;
      fwd[pos] = {a.head,
                  std::int32_t(std::min<std::int64_t>(a.capacity, net.supply)),
                  a.cost};
      fwd_arc[pos] = std::int32_t(i);
      pos_of_arc[i] = pos;
    }
  }
  std::vector<std::int32_t> flow(m, 0);  // backward residuals, by arc id
  std::vector<std::vector<std::int32_t>> active_bw(n);  // arc ids, sorted

  auto push_on_arc = [&](std::int32_t i, std::int32_t amount) {
    const Arc& a = net.arcs[std::size_t(i)];
    fwd[pos_of_arc[i]].res -= amount;
    if (flow[i] == 0 && amount > 0) {
      std::vector<std::int32_t>& list = active_bw[a.head];
      list.insert(std::lower_bound(list.begin(), list.end(), i), i);
    }
    flow[i] += amount;
  };
  auto retract_on_arc = [&](std::int32_t i, std::int32_t amount) {
    const Arc& a = net.arcs[std::size_t(i)];
    fwd[pos_of_arc[i]].res += amount;
    flow[i] -= amount;
    if (flow[i] == 0 && amount > 0) {
      std::vector<std::int32_t>& list = active_bw[a.head];
      list.erase(std::lower_bound(list.begin(), list.end(), i));
    }
  };

  // Pre-push along tight source arcs; whatever cannot leave for free
  // stays as excess at the source itself.
  std::vector<std::int64_t> excess(n, 0);
  std::int64_t total_cost = 0;
  std::int64_t remaining = net.source == net.sink ? 0 : net.supply;
  if (remaining > 0) {
    std::int64_t left = net.supply;
    for (std::int32_t si = offset[net.source];
         si < offset[net.source + 1] && left > 0; ++si) {
      if (fwd[si].cost != 0) continue;
      const std::int32_t amount =
          std::int32_t(std::min<std::int64_t>(left, fwd[si].res));
      if (amount == 0) continue;
      excess[fwd[si].head] += amount;
      push_on_arc(fwd_arc[si], amount);
      left -= amount;
    }
    excess[net.source] += left;
    remaining -= excess[net.sink];  // units that reached the sink for free
    excess[net.sink] = 0;
  }

  std::vector<std::int64_t> potential(n, 0);
  std::vector<std::int64_t> dist(n);
  std::vector<std::int32_t> parent_slot(n);  // slot = 2*arc (+1 if backward)
  std::vector<std::uint8_t> done(n);

  using HeapEntry = std::pair<std::int64_t, std::int32_t>;  // (dist, node)
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;

  const std::int32_t sink = std::int32_t(net.sink);
  int start = 0;  // excess only ever drains, so this cursor moves forward

  while (remaining > 0) {
    while (start < n && (excess[start] == 0 || start == sink)) ++start;
    if (start == n) break;  // no excess left to route (supply at sink only)

    std::fill(dist.begin(), dist.end(), kInfCost);
    std::fill(done.begin(), done.end(), 0);
    dist[start] = 0;
    parent_slot[sink] = -1;
    while (!heap.empty()) heap.pop();
    heap.emplace(0, start);

    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (done[v]) continue;
      done[v] = 1;
      if (v == sink) break;  // early exit; potentials clamped below
      // Anything at or past the tentative sink distance cannot improve
      // the shortest augmenting path; the clamp below treats it as if it
      // had never been reached.
      const std::int64_t bound = dist[sink];
      if (d >= bound) continue;
      const std::int64_t base = d + potential[v];
      for (std::int32_t si = offset[v]; si < offset[v + 1]; ++si) {
        const FwdArc a = fwd[si];
        if (a.res == 0) continue;
        const std::int64_t nd = base + a.cost - potential[a.head];
        if (nd < dist[a.head] && nd < bound) {
          dist[a.head] = nd;
          parent_slot[a.head] = fwd_arc[si] * 2;
          heap.emplace(nd, a.head);
        }
      }
      for (const std::int32_t i : active_bw[v]) {
        const Arc& a = net.arcs[std::size_t(i)];
        const std::int64_t nd = base - a.cost - potential[a.tail];
        if (nd < dist[a.tail] && nd < bound) {
          dist[a.tail] = nd;
          parent_slot[a.tail] = i * 2 + 1;
          heap.emplace(nd, a.tail);
        }
      }
    }

    if (parent_slot[sink] < 0 || dist[sink] >= kInfCost) break;  // infeasible

    const std::int64_t dsink = dist[sink];
    for (int v = 0; v < n; ++v)
      potential[v] += std::min(dist[v], dsink);

    // Walk the path sink -> start: bottleneck, then push.
    std::int64_t push64 = std::min<std::int64_t>(excess[start], remaining);
    for (std::int32_t v = sink; v != start;) {
      const std::int32_t s = parent_slot[v];
      const std::int32_t i = s >> 1;
      const std::int32_t res = (s & 1) ? flow[i] : fwd[pos_of_arc[i]].res;
      push64 = std::min<std::int64_t>(push64, res);
      v = (s & 1) ? net.arcs[std::size_t(i)].head : net.arcs[std::size_t(i)].tail;
    }
    const std::int32_t push = std::int32_t(push64);
    for (std::int32_t v = sink; v != start;) {
      const std::int32_t s = parent_slot[v];
      const std::int32_t i = s >> 1;
      const Arc& a = net.arcs[std::size_t(i)];
      if (s & 1) {  // backward: retract flow
        retract_on_arc(i, push);
        total_cost -= std::int64_t(push) * a.cost;
        v = a.head;
      } else {
        push_on_arc(i, push);
        total_cost += std::int64_t(push) * a.cost;
        v = a.tail;
      }
    }
    excess[start] -= push;
    remaining -= push;
  }

  FlowSolution sol;
  sol.flow.assign(m, 0);
  sol.feasible = (remaining == 0);
  if (sol.feasible) {
    for (std::size_t i = 0; i < m; ++i) sol.flow[i] = flow[i];
    sol.total_cost = total_cost;
  }

  if (diag != nullptr) {
    diag->delivered = net.supply - remaining;
    // DFS over the final residual graph from every node still holding
    // excess; arcs leaving the reached set form the saturated cut.
    diag->source_side.assign(n, false);
    std::vector<std::int32_t> stack;
    for (int v = 0; v < n; ++v)
      if (excess[v] > 0 && v != net.sink) {
        diag->source_side[v] = true;
        stack.push_back(std::int32_t(v));
      }
    auto visit = [&](std::int32_t w) {
      if (!diag->source_side[w]) {
        diag->source_side[w] = true;
        stack.push_back(w);
      }
    };
    while (!stack.empty()) {
      const std::int32_t v = stack.back();
      stack.pop_back();
      for (std::int32_t si = offset[v]; si < offset[v + 1]; ++si)
        if (fwd[si].res > 0) visit(fwd[si].head);
      for (const std::int32_t i : active_bw[v])
        visit(net.arcs[std::size_t(i)].tail);
    }
  }
  return sol;
}

FlowSolution brute_force_min_cost(const FlowNetwork& net) {
  const std::size_t m = net.arcs.size();
  double space = 1.0;
  for (const Arc& a : net.arcs) space *= double(a.capacity + 1);
  if (space > 1e7)
    throw std::invalid_argument("instance too large for oracle");

  // Net outflow each node must hit: +supply at source, -supply at sink.
  std::vector<std::int64_t> target(net.node_count, 0);
  target[net.source] += net.supply;
  target[net.sink] -= net.supply;

  // Remaining |outflow| + |inflow| capacity incident to each node over the
  // not-yet-assigned arc suffix; used to prune impossible partial states.
  std::vector<std::vector<std::int64_t>> slack(m + 1,
      std::vector<std::int64_t>(net.node_count, 0));
  for (std::size_t i = m; i-- > 0;) {
    slack[i] = slack[i + 1];
    slack[i][net.arcs[i].tail] += net.arcs[i].capacity;
    slack[i][net.arcs[i].head] += net.arcs[i].capacity;
  }

  std::vector<std::int64_t> assign(m, 0);
  std::vector<std::int64_t> net_out(net.node_count, 0);
  std::vector<std::int64_t> best_flow;
  std::int64_t best_cost = 0;
  bool found = false;

  // DFS over arcs with partial-conservation pruning.
  auto feasible_so_far = [&](std::size_t next) {
    for (int v = 0; v < net.node_count; ++v) {
      const std::int64_t gap = net_out[v] - target[v];
      if ((gap < 0 ? -gap : gap) > slack[next][v]) return false;
    }
    return true;
  };

  std::int64_t running_cost = 0;
  auto rec = [&](auto&& self, std::size_t i) -> void {
    // Costs are non-negative, so the running cost can only grow.
    if (found && running_cost >= best_cost) return;
    if (i == m) {
      for (int v = 0; v < net.node_count; ++v)
        if (net_out[v] != target[v]) return;
      if (!found || running_cost < best_cost) {
        found = true;
        best_cost = running_cost;
        best_flow = assign;
      }
      return;
    }
    if (!feasible_so_far(i)) return;
    const Arc& a = net.arcs[i];
    for (std::int64_t f = 0; f <= a.capacity; ++f) {
      assign[i] = f;
      net_out[a.tail] += f;
      net_out[a.head] -= f;
      running_cost += f * a.cost;
      self(self, i + 1);
      running_cost -= f * a.cost;
      net_out[a.tail] -= f;
      net_out[a.head] += f;
    }
    assign[i] = 0;
  };
  rec(rec, 0);

  FlowSolution sol;
  sol.feasible = found;
  sol.flow.assign(m, 0);
  if (found) {
    sol.flow = best_flow;
    sol.total_cost = best_cost;
  }
  return sol;
}

void write_dimacs(const FlowNetwork& net, std::ostream& out) {
  out << "p min " << net.node_count << ' ' << net.arcs.size() << '\n';
  out << "n " << (net.source + 1) << ' ' << net.supply << '\n';
  out << "n " << (net.sink + 1) << ' ' << -net.supply << '\n';
  for (const Arc& a : net.arcs)
    out << "a " << (a.tail + 1) << ' ' << (a.head + 1) << " 0 " << a.capacity
        << ' ' << a.cost << '\n';
}

}  // namespace repmatch::flownet
