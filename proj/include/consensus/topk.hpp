#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "consensus/assignment.hpp"
#include "consensus/genfunc.hpp"
#include "consensus/model.hpp"

namespace consensus {

enum class TopKMetric { symdiff, intersection, footrule, kendall };

struct TopKList {
  std::vector<std::string> items;  // distinct keys, position 1 first
  int k = 0;
};

struct TopKAnswer {
  TopKList list;
  double expected_distance = 0.0;
  bool short_answer = false;  // fewer than k items could be produced
  std::string method;
};

// ---------------------------------------------------------------------------
// Distances between Top-k lists. The internal forms accept lists shorter
// than k (worlds can have fewer than k tuples); the public dist_topk checks
// the full-list precondition.

namespace detail {

inline double symdiff_topk(const std::vector<std::string>& a, const std::vector<std::string>& b,
                           int k) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  int inter = 0;
  for (const auto& x : sa)
    if (sb.count(x)) ++inter;
  int sym = static_cast<int>(sa.size() + sb.size()) - 2 * inter;
  return sym / (2.0 * k);
}

inline double intersection_topk(const std::vector<std::string>& a,
                                const std::vector<std::string>& b, int k) {
  double total = 0.0;
  for (int i = 1; i <= k; ++i) {
    std::vector<std::string> ai(a.begin(), a.begin() + std::min<std::size_t>(i, a.size()));
    std::vector<std::string> bi(b.begin(), b.begin() + std::min<std::size_t>(i, b.size()));
    total += symdiff_topk(ai, bi, i);
  }
  return total / k;
}

// Footrule with location parameter k+1: missing items sit at position k+1.
inline double footrule_topk(const std::vector<std::string>& a, const std::vector<std::string>& b,
                            int k) {
  std::map<std::string, int> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) pa[a[i]] = static_cast<int>(i) + 1;
  for (std::size_t i = 0; i < b.size(); ++i) pb[b[i]] = static_cast<int>(i) + 1;
  double total = 0.0;
  for (const auto& [t, i] : pa) {
    auto it = pb.find(t);
    total += std::abs(i - (it == pb.end() ? k + 1 : it->second));
  }
  for (const auto& [t, j] : pb)
    if (!pa.count(t)) total += (k + 1) - j;
  return total;
}

// Pairs whose order must disagree in every pair of full extensions.
inline double kendall_topk(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::string, int> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) pa[a[i]] = static_cast<int>(i) + 1;
  for (std::size_t i = 0; i < b.size(); ++i) pb[b[i]] = static_cast<int>(i) + 1;
  std::vector<std::string> uni;
  for (const auto& [t, _] : pa) uni.push_back(t);
  for (const auto& [t, _] : pb)
    if (!pa.count(t)) uni.push_back(t);
  double count = 0.0;
  for (std::size_t x = 0; x < uni.size(); ++x)
    for (std::size_t y = x + 1; y < uni.size(); ++y) {
      auto ia = pa.find(uni[x]), ja = pa.find(uni[y]);
      auto ib = pb.find(uni[x]), jb = pb.find(uni[y]);
      bool xa = ia != pa.end(), ya = ja != pa.end();
      bool xb = ib != pb.end(), yb = jb != pb.end();
      if (xa && ya && xb && yb) {
        if ((ia->second < ja->second) != (ib->second < jb->second)) count += 1.0;
      } else if (xa && ya) {  // only one of x,y appears in b
        if (xb && ja->second < ia->second) count += 1.0;
        if (yb && ia->second < ja->second) count += 1.0;
      } else if (xb && yb) {
        if (xa && jb->second < ib->second) count += 1.0;
        if (ya && ib->second < jb->second) count += 1.0;
      } else if ((xa && !ya && !xb && yb) || (!xa && ya && xb && !yb)) {
        count += 1.0;  // one item exclusive to each list: always a disagreement
      }
    }
  return count;
}

inline double topk_distance(const std::vector<std::string>& a, const std::vector<std::string>& b,
                            int k, TopKMetric metric) {
  switch (metric) {
    case TopKMetric::symdiff:
      return symdiff_topk(a, b, k);
    case TopKMetric::intersection:
      return intersection_topk(a, b, k);
    case TopKMetric::footrule:
      return footrule_topk(a, b, k);
    case TopKMetric::kendall:
      return kendall_topk(a, b);
  }
  return 0.0;
}

}  // namespace detail

inline double dist_topk(const TopKList& a, const TopKList& b, TopKMetric metric) {
  if (a.k != b.k) throw UsageError("mismatched k");
  if (static_cast<int>(a.items.size()) != a.k || static_cast<int>(b.items.size()) != b.k)
    throw UsageError("dist_topk requires full length-k lists");
  return detail::topk_distance(a.items, b.items, a.k, metric);
}

// The Top-k answer of a deterministic world: keys ordered by score
// descending, key ascending on ties.
inline std::vector<std::string> topk_of_world(const std::vector<TupleAlternative>& world, int k) {
  std::vector<const TupleAlternative*> alts;
  for (const auto& a : world) alts.push_back(&a);
  std::sort(alts.begin(), alts.end(), [](const TupleAlternative* a, const TupleAlternative* b) {
    double sa = value_number(a->value), sb = value_number(b->value);
    if (sa != sb) return sa > sb;
    return a->key < b->key;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < alts.size() && static_cast<int>(i) < k; ++i)
    out.push_back(alts[i]->key);
  return out;
}

// ---------------------------------------------------------------------------
// Shared profile computation

namespace detail {

inline std::map<std::string, RankProfile> all_profiles(const AndXorTree& tree, int k) {
  std::map<std::string, RankProfile> out;
  for (const auto& key : tree.keys()) out.emplace(key, rank_profile(tree, key, k));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Mean answer under the symmetric difference metric: the k keys with the
// largest Pr(r(t) <= k), i.e. the PT-k answer sized to k.

inline TopKAnswer mean_topk_symdiff(const AndXorTree& tree, int k) {
  detail::require_numeric_scores(tree);
  if (k < 1) throw UsageError("k must be at least 1");
  auto keys = tree.keys();
  if (static_cast<int>(keys.size()) < k)
    throw DataError("fewer than k keys exist (" + std::to_string(keys.size()) + " < " +
                    std::to_string(k) + ")");
  auto profiles = detail::all_profiles(tree, k);
  std::vector<std::pair<double, std::string>> order;
  double sum_all = 0.0;
  for (const auto& [key, prof] : profiles) {
    order.emplace_back(prof.upsilon1, key);
    sum_all += prof.upsilon1;
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  TopKAnswer ans;
  ans.method = "ranking";
  ans.list.k = k;
  double sum_chosen = 0.0;
  for (int i = 0; i < k; ++i) {
    ans.list.items.push_back(order[i].second);
    sum_chosen += order[i].first;
  }
  ans.expected_distance = (k + sum_all - 2.0 * sum_chosen) / (2.0 * k);
  return ans;
}

// ---------------------------------------------------------------------------
// Median answer under symmetric difference: the Top-k answer of some
// nonzero-probability world maximizing sum of Pr(r(t) <= k), found by the
// threshold-restricted tree DP.

namespace detail {

struct MedianDp {
  const AndXorTree& tree;
  const std::map<std::string, double>& P;  // key -> Pr(r(t) <= k)
  int k;
  // Threshold: keep leaves ranking at least as high as (score, key); the
  // sentinel (use_threshold = false) keeps every leaf.
  bool use_threshold = false;
  double thr_score = 0.0;
  std::string thr_key;

  static constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> vals;                 // node -> size -> best value
  std::vector<std::vector<std::vector<double>>> prefix;  // AND node -> child prefix tables

  bool leaf_kept(const TupleAlternative& a) const {
    if (!use_threshold) return true;
    double s = value_number(a.value);
    if (s != thr_score) return s > thr_score;
    return a.key <= thr_key;
  }

  void run() {
    vals.assign(tree.node_count(), {});
    prefix.assign(tree.node_count(), {});
    compute(tree.root());
  }

  void compute(int id) {
    const auto& n = tree.node(id);
    auto& v = vals[id];
    v.assign(k + 1, kNegInf);
    switch (n.kind) {
      case AndXorTree::NodeKind::leaf: {
        const auto& alt = tree.alternative(n.alt);
        if (leaf_kept(alt))
          v[1] = P.at(alt.key);
        else
          v[0] = 0.0;
        break;
      }
      case AndXorTree::NodeKind::or_node: {
        double sum = 0.0;
        bool empty_ok = false;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          sum += n.probs[i];
          if (n.probs[i] <= 0.0) continue;
          compute(n.children[i]);
          const auto& cv = vals[n.children[i]];
          for (int s = 1; s <= k; ++s) v[s] = std::max(v[s], cv[s]);
          if (cv[0] > kNegInf) empty_ok = true;
        }
        if (1.0 - sum > kProbEps) empty_ok = true;
        if (empty_ok) v[0] = 0.0;
        break;
      }
      case AndXorTree::NodeKind::and_node: {
        auto& pre = prefix[id];
        pre.assign(n.children.size() + 1, std::vector<double>(k + 1, kNegInf));
        pre[0][0] = 0.0;
        for (std::size_t h = 0; h < n.children.size(); ++h) {
          compute(n.children[h]);
          const auto& cv = vals[n.children[h]];
          for (int s = 0; s <= k; ++s) {
            if (pre[h][s] == kNegInf) continue;
            for (int q = 0; q + s <= k; ++q) {
              if (cv[q] == kNegInf) continue;
              pre[h + 1][s + q] = std::max(pre[h + 1][s + q], pre[h][s] + cv[q]);
            }
          }
        }
        v = pre[n.children.size()];
        break;
      }
    }
  }

  void reconstruct(int id, int size, std::vector<int>& out_leaves) const {
    const auto& n = tree.node(id);
    switch (n.kind) {
      case AndXorTree::NodeKind::leaf:
        if (size == 1) out_leaves.push_back(id);
        break;
      case AndXorTree::NodeKind::or_node: {
        if (size == 0) {
          // Prefer the residual empty branch; otherwise any child that can be
          // empty (no leaves emitted either way).
          return;
        }
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          if (n.probs[i] <= 0.0) continue;
          if (!vals[n.children[i]].empty() && vals[n.children[i]][size] == vals[id][size]) {
            reconstruct(n.children[i], size, out_leaves);
            return;
          }
        }
        break;
      }
      case AndXorTree::NodeKind::and_node: {
        const auto& pre = prefix[id];
        int s = size;
        std::vector<int> child_size(n.children.size(), 0);
        for (int h = static_cast<int>(n.children.size()); h >= 1; --h) {
          const auto& cv = vals[n.children[h - 1]];
          for (int q = 0; q <= s; ++q) {
            if (cv[q] == kNegInf || pre[h - 1][s - q] == kNegInf) continue;
            if (pre[h - 1][s - q] + cv[q] == pre[h][s]) {
              child_size[h - 1] = q;
              s -= q;
              break;
            }
          }
        }
        for (std::size_t h = 0; h < n.children.size(); ++h)
          reconstruct(n.children[h], child_size[h], out_leaves);
        break;
      }
    }
  }
};

}  // namespace detail

inline TopKAnswer median_topk_symdiff(const AndXorTree& tree, int k) {
  detail::require_numeric_scores(tree);
  if (k < 1) throw UsageError("k must be at least 1");
  auto keys = tree.keys();
  std::map<std::string, double> P;
  double sum_all = 0.0;
  for (const auto& key : keys) {
    double p = rank_profile(tree, key, k).upsilon1;
    P.emplace(key, p);
    sum_all += p;
  }

  struct Candidate {
    double value;
    std::vector<TupleAlternative> leaves;
  };
  std::vector<Candidate> candidates;

  auto harvest = [&](detail::MedianDp& dp, int size) {
    if (size < 0 || dp.vals[tree.root()][size] == detail::MedianDp::kNegInf) return;
    std::vector<int> leaf_nodes;
    dp.reconstruct(tree.root(), size, leaf_nodes);
    Candidate c;
    c.value = dp.vals[tree.root()][size];
    for (int id : leaf_nodes) c.leaves.push_back(tree.alternative(tree.node(id).alt));
    candidates.push_back(std::move(c));
  };

  // Full-length answers: worlds of each threshold-restricted tree of size k.
  std::set<std::pair<double, std::string>> thresholds;
  for (int leaf : tree.leaf_nodes()) {
    const auto& a = tree.alternative(tree.node(leaf).alt);
    thresholds.emplace(value_number(a.value), a.key);
  }
  for (const auto& [score, key] : thresholds) {
    detail::MedianDp dp{tree, P, k};
    dp.use_threshold = true;
    dp.thr_score = score;
    dp.thr_key = key;
    dp.run();
    harvest(dp, k);
  }
  // Short answers are whole worlds with fewer than k tuples.
  {
    detail::MedianDp dp{tree, P, k};
    dp.run();
    for (int s = 0; s < k; ++s) harvest(dp, s);
  }
  if (candidates.empty()) throw InternalError("median DP produced no candidate world");

  const Candidate* best = nullptr;
  std::vector<std::string> best_items;
  for (const auto& c : candidates) {
    auto items = topk_of_world(c.leaves, k);
    if (!best || c.value > best->value ||
        (c.value == best->value &&
         (items.size() > best_items.size() ||
          (items.size() == best_items.size() && items < best_items)))) {
      best = &c;
      best_items = std::move(items);
    }
  }

  TopKAnswer ans;
  ans.method = "tree-dp";
  ans.list.k = k;
  ans.list.items = best_items;
  ans.short_answer = static_cast<int>(best_items.size()) < k;
  double chosen = best->value;
  ans.expected_distance =
      (static_cast<double>(best_items.size()) + sum_all - 2.0 * chosen) / (2.0 * k);
  return ans;
}

// ---------------------------------------------------------------------------
// Mean answer under the intersection metric, exactly, via the assignment
// problem with profit(t, j) = sum_{i=j..k} Pr(r(t) <= i) / i.

namespace detail {

inline double intersection_constant(const std::map<std::string, RankProfile>& profiles, int k) {
  double c = 0.0;
  for (int i = 1; i <= k; ++i) {
    double cum_sum = 0.0;
    for (const auto& [key, prof] : profiles) cum_sum += prof.cum(i);
    c += 0.5 + cum_sum / (2.0 * i);
  }
  return c / k;
}

}  // namespace detail

inline TopKAnswer mean_topk_intersection(const AndXorTree& tree, int k) {
  detail::require_numeric_scores(tree);
  if (k < 1) throw UsageError("k must be at least 1");
  auto keys = tree.keys();
  if (static_cast<int>(keys.size()) < k)
    throw DataError("fewer than k keys exist (" + std::to_string(keys.size()) + " < " +
                    std::to_string(k) + ")");
  auto profiles = detail::all_profiles(tree, k);
  AssignmentInstance inst;
  for (const auto& key : keys) {
    std::vector<double> row(k, 0.0);
    const auto& prof = profiles.at(key);
    for (int j = k; j >= 1; --j)
      row[j - 1] = (j == k ? 0.0 : row[j]) + prof.cum(j) / j;
    inst.profit.push_back(std::move(row));
  }
  auto sol = solve_assignment(inst);
  TopKAnswer ans;
  ans.method = "assignment";
  ans.list.k = k;
  for (int j = 0; j < k; ++j) ans.list.items.push_back(keys[sol.agent_for_position[j]]);
  ans.expected_distance = detail::intersection_constant(profiles, k) - sol.total_profit / k;
  return ans;
}

// H_k-approximation: take the k keys with the largest Upsilon_H.
inline TopKAnswer approx_topk_intersection_upsilonH(const AndXorTree& tree, int k) {
  detail::require_numeric_scores(tree);
  if (k < 1) throw UsageError("k must be at least 1");
  auto keys = tree.keys();
  if (static_cast<int>(keys.size()) < k)
    throw DataError("fewer than k keys exist (" + std::to_string(keys.size()) + " < " +
                    std::to_string(k) + ")");
  auto profiles = detail::all_profiles(tree, k);
  std::vector<std::pair<double, std::string>> order;
  for (const auto& [key, prof] : profiles) order.emplace_back(prof.upsilonH, key);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  TopKAnswer ans;
  ans.method = "upsilon-h";
  ans.list.k = k;
  double a_value = 0.0;
  for (int j = 0; j < k; ++j) {
    const auto& prof = profiles.at(order[j].second);
    ans.list.items.push_back(order[j].second);
    for (int i = j + 1; i <= k; ++i) a_value += prof.cum(i) / i;
  }
  ans.expected_distance = detail::intersection_constant(profiles, k) - a_value / k;
  return ans;
}

// A(tau) = sum_{i<=k} (1/i) sum_{t in tau^i} Pr(r(t) <= i); the quantity the
// intersection-metric mean maximizes, exposed for the H_k bound check.
inline double intersection_objective(const AndXorTree& tree, const TopKList& list) {
  double a = 0.0;
  for (std::size_t j = 0; j < list.items.size(); ++j) {
    auto prof = rank_profile(tree, list.items[j], list.k);
    for (int i = static_cast<int>(j) + 1; i <= list.k; ++i) a += prof.cum(i) / i;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Mean answer under Spearman's footrule with location parameter k+1, exactly,
// via a min-cost assignment.

inline TopKAnswer mean_topk_footrule(const AndXorTree& tree, int k) {
  detail::require_numeric_scores(tree);
  if (k < 1) throw UsageError("k must be at least 1");
  auto keys = tree.keys();
  if (static_cast<int>(keys.size()) < k)
    throw DataError("fewer than k keys exist (" + std::to_string(keys.size()) + " < " +
                    std::to_string(k) + ")");
  auto profiles = detail::all_profiles(tree, k);
  double constant = static_cast<double>(k + 1) * k;
  for (const auto& [key, prof] : profiles)
    constant += (k + 1) * prof.upsilon1 - prof.upsilon2;

  AssignmentInstance inst;
  for (const auto& key : keys) {
    const auto& prof = profiles.at(key);
    std::vector<double> row(k, 0.0);
    for (int i = 1; i <= k; ++i) {
      double cell = prof.upsilon3[i - 1] - 2.0 * i * prof.tail + prof.upsilon2 -
                    2.0 * (k + 1) * prof.upsilon1;
      row[i - 1] = -cell;  // maximize -cost
    }
    inst.profit.push_back(std::move(row));
  }
  auto sol = solve_assignment(inst);
  TopKAnswer ans;
  ans.method = "assignment";
  ans.list.k = k;
  for (int j = 0; j < k; ++j) ans.list.items.push_back(keys[sol.agent_for_position[j]]);
  ans.expected_distance = constant - sol.total_profit;
  return ans;
}

// ---------------------------------------------------------------------------
// Kendall's tau: exact mean is NP-hard, so take the best of the
// footrule-optimal list (2-approximation via the metric equivalence class)
// and randomized pivot orderings driven by pairwise precedence probabilities.

struct KendallOptions {
  int trials = 20;
  std::uint64_t seed = 0;
  std::size_t world_threshold = 5000;  // enumerate up to this many worlds
  std::size_t mc_samples = 100000;
};

// E[d_K(list, topk(pw))]: exact by enumeration when the world count permits,
// Monte Carlo otherwise.
inline double expected_kendall(const AndXorTree& tree, const std::vector<std::string>& items,
                               int k, std::size_t world_threshold, std::size_t mc_samples,
                               std::uint64_t mc_seed) {
  try {
    auto worlds = enumerate_worlds(tree, world_threshold);
    double total = 0.0;
    for (const auto& w : worlds)
      total += w.prob * detail::kendall_topk(items, topk_of_world(w.leaves, k));
    return total;
  } catch (const LimitError&) {
    std::mt19937_64 rng(mc_seed);
    double total = 0.0;
    for (std::size_t s = 0; s < mc_samples; ++s) {
      auto alts = sample_world_alts(tree, rng);
      std::vector<TupleAlternative> world;
      for (int a : alts) world.push_back(tree.alternative(a));
      total += detail::kendall_topk(items, topk_of_world(world, k));
    }
    return total / static_cast<double>(mc_samples);
  }
}

namespace detail {

inline void pivot_order(const std::vector<int>& pool,
                        const std::vector<std::vector<double>>& prec, std::mt19937_64& rng,
                        std::vector<int>& out) {
  if (pool.empty()) return;
  if (pool.size() == 1) {
    out.push_back(pool[0]);
    return;
  }
  std::size_t pi = static_cast<std::size_t>(rng() % pool.size());
  int pivot = pool[pi];
  std::vector<int> left, right;
  for (int v : pool) {
    if (v == pivot) continue;
    if (prec[v][pivot] >= 0.5)
      left.push_back(v);
    else
      right.push_back(v);
  }
  pivot_order(left, prec, rng, out);
  out.push_back(pivot);
  pivot_order(right, prec, rng, out);
}

}  // namespace detail

inline TopKAnswer approx_topk_kendall(const AndXorTree& tree, int k,
                                      const KendallOptions& opts = {}) {
  detail::require_numeric_scores(tree);
  if (k < 1) throw UsageError("k must be at least 1");
  if (opts.trials < 1) throw UsageError("trials must be at least 1");
  auto keys = tree.keys();
  const int n = static_cast<int>(keys.size());
  if (n < k)
    throw DataError("fewer than k keys exist (" + std::to_string(keys.size()) + " < " +
                    std::to_string(k) + ")");

  std::vector<std::vector<std::string>> candidates;
  candidates.push_back(mean_topk_footrule(tree, k).list.items);

  std::vector<std::vector<double>> prec(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) prec[i][j] = precedes_prob(tree, keys[i], keys[j]);
  std::mt19937_64 rng(opts.seed);
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int t = 0; t < opts.trials; ++t) {
    std::vector<int> order;
    detail::pivot_order(pool, prec, rng, order);
    std::vector<std::string> items;
    for (int i = 0; i < k; ++i) items.push_back(keys[order[i]]);
    candidates.push_back(std::move(items));
  }

  TopKAnswer ans;
  ans.method = "footrule+pivot";
  ans.list.k = k;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double e = expected_kendall(tree, candidates[c], k, opts.world_threshold, opts.mc_samples,
                                opts.seed + 0x9e3779b97f4a7c15ULL * (c + 1));
    if (e < best - 1e-15) {
      best = e;
      ans.list.items = candidates[c];
    }
  }
  ans.expected_distance = best;
  return ans;
}

}  // namespace consensus
