#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "consensus/errors.hpp"

namespace consensus {

// Rectangular maximum-profit assignment: n agents, k <= n positions.
struct AssignmentInstance {
  std::vector<std::vector<double>> profit;  // profit[agent][position]
};

struct AssignmentResult {
  std::vector<int> agent_for_position;  // size k
  double total_profit = 0.0;
};

namespace detail {

// Hungarian method with potentials, minimizing cost over rows = positions,
// cols = agents (rows <= cols). Returns the optimal total cost.
inline double hungarian_min_cost(const std::vector<std::vector<double>>& cost,
                                 std::vector<int>* row_of_col = nullptr) {
  const int R = static_cast<int>(cost.size());
  const int C = R == 0 ? 0 : static_cast<int>(cost[0].size());
  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> u(R + 1, 0.0), v(C + 1, 0.0);
  std::vector<int> p(C + 1, 0), way(C + 1, 0);
  for (int i = 1; i <= R; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(C + 1, INF);
    std::vector<char> used(C + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = INF;
      for (int j = 1; j <= C; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= C; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= C; ++j)
    if (p[j] != 0) total += cost[p[j] - 1][j - 1];
  if (row_of_col) {
    row_of_col->assign(C, -1);
    for (int j = 1; j <= C; ++j) (*row_of_col)[j - 1] = p[j] - 1;
  }
  return total;
}

// Optimal profit of assigning `positions` to distinct agents from `agents`.
inline double assignment_value(const std::vector<std::vector<double>>& profit,
                               const std::vector<int>& agents, const std::vector<int>& positions) {
  if (positions.empty()) return 0.0;
  std::vector<std::vector<double>> cost(positions.size(),
                                        std::vector<double>(agents.size(), 0.0));
  for (std::size_t r = 0; r < positions.size(); ++r)
    for (std::size_t c = 0; c < agents.size(); ++c)
      cost[r][c] = -profit[agents[c]][positions[r]];
  return -hungarian_min_cost(cost);
}

}  // namespace detail

// Each position gets a distinct agent, total profit maximal. Among optima,
// returns the lexicographically smallest (agent for position 1, 2, ...),
// found by greedily forcing the smallest agent that keeps the optimum.
inline AssignmentResult solve_assignment(const AssignmentInstance& inst) {
  const int n = static_cast<int>(inst.profit.size());
  const int k = n == 0 ? 0 : static_cast<int>(inst.profit[0].size());
  if (k > n) throw UsageError("assignment requires positions <= agents (k <= n)");
  for (const auto& row : inst.profit)
    for (double x : row)
      if (!std::isfinite(x)) throw DataError("assignment profit entries must be finite");

  std::vector<int> agents(n);
  for (int i = 0; i < n; ++i) agents[i] = i;
  std::vector<int> positions(k);
  for (int j = 0; j < k; ++j) positions[j] = j;

  AssignmentResult res;
  double target = detail::assignment_value(inst.profit, agents, positions);
  res.total_profit = target;
  double scale = 1e-9 * std::max(1.0, std::abs(target));
  for (int j = 0; j < k; ++j) {
    std::vector<int> rest(positions.begin() + j + 1, positions.end());
    bool fixed = false;
    for (std::size_t idx = 0; idx < agents.size() && !fixed; ++idx) {
      int t = agents[idx];
      std::vector<int> remaining = agents;
      remaining.erase(remaining.begin() + idx);
      double val = inst.profit[t][j] + detail::assignment_value(inst.profit, remaining, rest);
      if (val >= target - scale) {
        res.agent_for_position.push_back(t);
        agents = std::move(remaining);
        target -= inst.profit[t][j];
        fixed = true;
      }
    }
    if (!fixed) throw InternalError("assignment tie-break failed to fix a position");
  }
  return res;
}

}  // namespace consensus
