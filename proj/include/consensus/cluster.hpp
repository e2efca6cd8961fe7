#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "consensus/genfunc.hpp"
#include "consensus/model.hpp"

namespace consensus {

// A partition of the tuple keys. Canonical form: members sorted within each
// cluster, clusters sorted by first member.
struct Clustering {
  std::vector<std::vector<std::string>> clusters;

  void canonicalize() {
    for (auto& c : clusters) std::sort(c.begin(), c.end());
    std::sort(clusters.begin(), clusters.end());
  }
};

struct PairwiseWeights {
  std::vector<std::string> keys;        // sorted
  std::vector<std::vector<double>> w;   // w[i][j] = co-cluster probability
};

// w[i][j] = Pr(keys i and j share a value) + Pr(both absent); the diagonal
// is unused.
inline PairwiseWeights pairwise_weights(const AndXorTree& tree) {
  PairwiseWeights pw;
  pw.keys = tree.keys();
  const int n = static_cast<int>(pw.keys.size());
  pw.w.assign(n, std::vector<double>(n, 1.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      pw.w[i][j] = pw.w[j][i] = cocluster_prob(tree, pw.keys[i], pw.keys[j]);
  return pw;
}

// E[d(C, C_pw)] as a linear function of the pairwise weights: a co-clustered
// pair costs 1 - w, a split pair costs w.
inline double clustering_cost(const PairwiseWeights& pw, const Clustering& clustering) {
  const int n = static_cast<int>(pw.keys.size());
  std::map<std::string, int> cluster_of;
  for (std::size_t c = 0; c < clustering.clusters.size(); ++c)
    for (const auto& key : clustering.clusters[c])
      if (!cluster_of.emplace(key, static_cast<int>(c)).second)
        throw DataError("key '" + key + "' appears in two clusters");
  if (static_cast<int>(cluster_of.size()) != n)
    throw DataError("clustering must cover every key exactly once");
  for (const auto& key : pw.keys)
    if (!cluster_of.count(key)) throw DataError("clustering is missing key '" + key + "'");
  double cost = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      bool together = cluster_of[pw.keys[i]] == cluster_of[pw.keys[j]];
      cost += together ? 1.0 - pw.w[i][j] : pw.w[i][j];
    }
  return cost;
}

struct ClusterResult {
  Clustering clustering;
  double expected_cost = 0.0;
};

namespace detail {

inline Clustering pivot_clustering(const PairwiseWeights& pw, std::mt19937_64& rng) {
  const int n = static_cast<int>(pw.keys.size());
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  Clustering out;
  while (!pool.empty()) {
    std::size_t pi = static_cast<std::size_t>(rng() % pool.size());
    int pivot = pool[pi];
    std::vector<std::string> cluster{pw.keys[pivot]};
    std::vector<int> rest;
    for (int v : pool) {
      if (v == pivot) continue;
      if (pw.w[pivot][v] >= 0.5)
        cluster.push_back(pw.keys[v]);
      else
        rest.push_back(v);
    }
    out.clusters.push_back(std::move(cluster));
    pool = std::move(rest);
  }
  out.canonicalize();
  return out;
}

}  // namespace detail

// Best of `trials` randomized pivot runs, scored by the exact linear
// objective. Deterministic for a fixed seed.
inline ClusterResult consensus_cluster(const AndXorTree& tree, int trials, std::uint64_t seed) {
  if (trials < 1) throw UsageError("trials must be at least 1");
  auto pw = pairwise_weights(tree);
  std::mt19937_64 rng(seed);
  ClusterResult best;
  bool have = false;
  for (int t = 0; t < trials; ++t) {
    Clustering c = detail::pivot_clustering(pw, rng);
    double cost = clustering_cost(pw, c);
    if (!have || cost < best.expected_cost - 1e-15) {
      best.clustering = std::move(c);
      best.expected_cost = cost;
      have = true;
    }
  }
  return best;
}

}  // namespace consensus
