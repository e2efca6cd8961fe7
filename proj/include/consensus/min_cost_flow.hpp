#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

#include "consensus/errors.hpp"

namespace consensus {

// Directed network with integral capacity bounds and real costs.
struct FlowNetwork {
  struct Edge {
    int from = 0;
    int to = 0;
    long long lower = 0;
    long long upper = 0;
    double cost = 0.0;
  };
  int node_count = 0;
  int source = 0;
  int sink = 0;
  long long required_flow = 0;
  std::vector<Edge> edges;
};

struct FlowResult {
  std::vector<long long> edge_flow;  // aligned with FlowNetwork::edges
  double total_cost = 0.0;
};

namespace detail {

// Successive shortest paths with Bellman-Ford-initialized potentials, then
// Dijkstra on reduced costs. Handles negative edge costs; the residual graph
// must not contain a negative cycle initially (true for the lower-bound
// transform of an acyclic base network).
class Mcmf {
 public:
  explicit Mcmf(int n) : head_(n) {}

  int add_edge(int from, int to, long long cap, double cost) {
    head_[from].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({to, cap, cost});
    head_[to].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({from, 0, -cost});
    return static_cast<int>(edges_.size()) - 2;
  }

  long long flow_on(int id) const { return edges_[id ^ 1].cap; }

  // Max flow from s to t at minimum cost. Returns (flow, cost).
  std::pair<long long, double> solve(int s, int t) {
    const double INF = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(head_.size());
    std::vector<double> h(n, INF);
    h[s] = 0.0;
    for (int round = 0; round < n; ++round) {
      bool changed = false;
      for (int u = 0; u < n; ++u) {
        if (h[u] == INF) continue;
        for (int id : head_[u]) {
          const auto& e = edges_[id];
          if (e.cap > 0 && h[u] + e.cost < h[e.to] - 1e-15) {
            h[e.to] = h[u] + e.cost;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }

    long long flow = 0;
    double cost = 0.0;
    std::vector<double> dist(n);
    std::vector<int> prev_edge(n);
    while (true) {
      std::fill(dist.begin(), dist.end(), INF);
      std::fill(prev_edge.begin(), prev_edge.end(), -1);
      dist[s] = 0.0;
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
      pq.push({0.0, s});
      while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u] + 1e-15) continue;
        for (int id : head_[u]) {
          const auto& e = edges_[id];
          if (e.cap <= 0 || h[u] == INF || h[e.to] == INF) continue;
          double nd = dist[u] + e.cost + h[u] - h[e.to];
          if (nd < dist[e.to] - 1e-15) {
            dist[e.to] = nd;
            prev_edge[e.to] = id;
            pq.push({nd, e.to});
          }
        }
      }
      if (prev_edge[t] < 0) break;
      long long push = std::numeric_limits<long long>::max();
      for (int u = t; u != s;) {
        const auto& e = edges_[prev_edge[u]];
        push = std::min(push, e.cap);
        u = edges_[prev_edge[u] ^ 1].to;
      }
      for (int u = t; u != s;) {
        auto& e = edges_[prev_edge[u]];
        e.cap -= push;
        edges_[prev_edge[u] ^ 1].cap += push;
        cost += push * e.cost;
        u = edges_[prev_edge[u] ^ 1].to;
      }
      for (int u = 0; u < n; ++u)
        if (dist[u] < INF && h[u] < INF) h[u] += dist[u];
      flow += push;
    }
    return {flow, cost};
  }

 private:
  struct E {
    int to;
    long long cap;
    double cost;
  };
  std::vector<E> edges_;
  std::vector<std::vector<int>> head_;
};

}  // namespace detail

// Minimum-cost integral flow of the required value, honoring per-edge lower
// bounds. Lower bounds are removed by the excess-node transformation; the
// value constraint becomes a forced sink->source edge.
inline FlowResult solve_min_cost_flow(const FlowNetwork& net) {
  for (const auto& e : net.edges)
    if (e.lower > e.upper)
      throw InfeasibleError("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                            " has lower bound " + std::to_string(e.lower) + " > upper bound " +
                            std::to_string(e.upper));
  if (net.required_flow < 0) throw UsageError("required flow must be nonnegative");

  const int n = net.node_count;
  const int super_source = n, super_sink = n + 1;
  detail::Mcmf mcmf(n + 2);
  std::vector<long long> excess(n, 0);
  std::vector<int> edge_id(net.edges.size(), -1);
  double base_cost = 0.0;
  for (std::size_t i = 0; i < net.edges.size(); ++i) {
    const auto& e = net.edges[i];
    base_cost += static_cast<double>(e.lower) * e.cost;
    excess[e.to] += e.lower;
    excess[e.from] -= e.lower;
    if (e.upper > e.lower) edge_id[i] = mcmf.add_edge(e.from, e.to, e.upper - e.lower, e.cost);
  }
  // Forced circulation edge sink->source of exactly required_flow.
  excess[net.source] += net.required_flow;
  excess[net.sink] -= net.required_flow;

  long long need = 0;
  for (int v = 0; v < n; ++v) {
    if (excess[v] > 0) {
      mcmf.add_edge(super_source, v, excess[v], 0.0);
      need += excess[v];
    } else if (excess[v] < 0) {
      mcmf.add_edge(v, super_sink, -excess[v], 0.0);
    }
  }
  auto [flow, cost] = mcmf.solve(super_source, super_sink);
  if (flow < need)
    throw InfeasibleError("no feasible flow of value " + std::to_string(net.required_flow) +
                          " (routed " + std::to_string(flow) + " of " + std::to_string(need) +
                          " forced units)");
  FlowResult res;
  res.total_cost = base_cost + cost;
  res.edge_flow.resize(net.edges.size());
  for (std::size_t i = 0; i < net.edges.size(); ++i)
    res.edge_flow[i] = net.edges[i].lower + (edge_id[i] >= 0 ? mcmf.flow_on(edge_id[i]) : 0);
  return res;
}

}  // namespace consensus
