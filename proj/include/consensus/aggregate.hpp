#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "consensus/min_cost_flow.hpp"
#include "consensus/model.hpp"
#include "consensus/set_consensus.hpp"

namespace consensus {

// Membership-probability matrix for a group-by count query: n independent
// tuples, m groups, rows sum to 1.
struct GroupMatrix {
  std::vector<std::string> groups;
  std::vector<std::vector<double>> p;  // p[i][j] = Pr(tuple i takes group j)

  int tuple_count() const { return static_cast<int>(p.size()); }
  int group_count() const { return static_cast<int>(groups.size()); }
};

inline void validate_group_matrix(const GroupMatrix& m) {
  if (m.groups.empty()) throw DataError("group matrix has no groups");
  for (std::size_t i = 0; i < m.p.size(); ++i) {
    if (m.p[i].size() != m.groups.size())
      throw DataError("row " + std::to_string(i) + " has " + std::to_string(m.p[i].size()) +
                      " entries, expected " + std::to_string(m.groups.size()));
    double sum = 0.0;
    for (double x : m.p[i]) {
      if (!(x >= 0.0 && x <= 1.0 + kProbEps))
        throw DataError("row " + std::to_string(i) + " has probability outside [0, 1]");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kProbEps)
      throw DataError("row " + std::to_string(i) + " sums to " + std::to_string(sum) +
                      ", expected 1");
  }
}

// Attribute-uncertain independent tuples as a group matrix: one BID block per
// key whose alternatives carry the group labels and sum to probability 1.
inline GroupMatrix group_matrix_from_tree(const AndXorTree& tree) {
  auto bid = as_bid(tree);
  if (!bid) throw DataError("group-by queries need independent tuples (a BID tree)");
  std::map<std::string, int> group_of;
  GroupMatrix m;
  for (const auto& b : *bid)
    for (const auto& [alt, prob] : b.alternatives) {
      std::string label = value_repr(alt.value);
      if (group_of.emplace(label, 0).second) m.groups.push_back(label);
    }
  std::sort(m.groups.begin(), m.groups.end());
  for (std::size_t j = 0; j < m.groups.size(); ++j) group_of[m.groups[j]] = static_cast<int>(j);
  for (const auto& b : *bid) {
    std::vector<double> row(m.groups.size(), 0.0);
    for (const auto& [alt, prob] : b.alternatives) row[group_of[value_repr(alt.value)]] += prob;
    m.p.push_back(std::move(row));
  }
  validate_group_matrix(m);
  return m;
}

// Column sums; minimizes expected squared distance over all real vectors.
inline std::vector<double> mean_counts(const GroupMatrix& m) {
  validate_group_matrix(m);
  std::vector<double> r(m.group_count(), 0.0);
  for (const auto& row : m.p)
    for (int j = 0; j < m.group_count(); ++j) r[j] += row[j];
  return r;
}

// Exact E[||r - R||^2]; by tuple independence this is
// sum_j Var(R_j) + (r[j] - mean[j])^2 with Var(R_j) = sum_i p_ij (1 - p_ij).
inline double expected_sq_distance(const GroupMatrix& m, const std::vector<double>& r) {
  validate_group_matrix(m);
  if (static_cast<int>(r.size()) != m.group_count())
    throw DataError("dimension mismatch: vector has " + std::to_string(r.size()) +
                    " entries, matrix has " + std::to_string(m.group_count()) + " groups");
  std::vector<double> mean = mean_counts(m);
  double total = 0.0;
  for (int j = 0; j < m.group_count(); ++j) {
    double var = 0.0;
    for (const auto& row : m.p) var += row[j] * (1.0 - row[j]);
    total += var + (r[j] - mean[j]) * (r[j] - mean[j]);
  }
  return total;
}

struct MedianCounts {
  std::vector<long long> counts;
  double expected_distance = 0.0;  // E[||r* - R||^2]
};

// The realizable count vector closest to the mean, via min-cost flow. Each
// entry is floor or ceil of the mean entry; the result is a 4-approximate
// median under expected squared distance.
inline MedianCounts median_counts(const GroupMatrix& m) {
  validate_group_matrix(m);
  const int n = m.tuple_count(), g = m.group_count();
  std::vector<double> mean = mean_counts(m);

  FlowNetwork net;
  net.node_count = n + g + 2;
  net.source = 0;
  net.sink = n + g + 1;
  net.required_flow = n;
  auto tuple_node = [&](int i) { return 1 + i; };
  auto group_node = [&](int j) { return 1 + n + j; };
  for (int i = 0; i < n; ++i) net.edges.push_back({net.source, tuple_node(i), 0, 1, 0.0});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < g; ++j)
      if (m.p[i][j] > 0.0) net.edges.push_back({tuple_node(i), group_node(j), 0, 1, 0.0});

  std::vector<long long> floors(g);
  std::vector<int> ceil_edge(g, -1);
  for (int j = 0; j < g; ++j) {
    double rj = mean[j];
    long long rounded = std::llround(rj);
    bool integral = std::abs(rj - static_cast<double>(rounded)) <= kProbEps;
    long long fl = integral ? rounded : static_cast<long long>(std::floor(rj));
    floors[j] = fl;
    net.edges.push_back({group_node(j), net.sink, fl, fl, 0.0});
    if (!integral) {
      double down = static_cast<double>(fl) - rj;
      double up = static_cast<double>(fl + 1) - rj;
      ceil_edge[j] = static_cast<int>(net.edges.size());
      net.edges.push_back({group_node(j), net.sink, 0, 1, up * up - down * down});
    }
  }

  FlowResult flow;
  try {
    flow = solve_min_cost_flow(net);
  } catch (const InfeasibleError& e) {
    throw InternalError(std::string("median flow infeasible on a row-stochastic matrix: ") +
                        e.what());
  }

  MedianCounts res;
  res.counts.resize(g);
  long long total = 0;
  for (int j = 0; j < g; ++j) {
    res.counts[j] = floors[j] + (ceil_edge[j] >= 0 ? flow.edge_flow[ceil_edge[j]] : 0);
    if (res.counts[j] != floors[j] && res.counts[j] != floors[j] + 1)
      throw InternalError("median entry escaped the floor/ceil interval");
    total += res.counts[j];
  }
  if (total != n) throw InternalError("median counts sum to " + std::to_string(total) +
                                      ", expected " + std::to_string(n));
  std::vector<double> rd(res.counts.begin(), res.counts.end());
  res.expected_distance = expected_sq_distance(m, rd);
  return res;
}

}  // namespace consensus
