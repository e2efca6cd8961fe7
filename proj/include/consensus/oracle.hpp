#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "consensus/aggregate.hpp"
#include "consensus/cluster.hpp"
#include "consensus/model.hpp"
#include "consensus/set_consensus.hpp"
#include "consensus/topk.hpp"

namespace consensus {

// Brute-force ground truth. Exact expected distances by world enumeration
// with a Monte Carlo fallback, and exhaustive argmin searches over answer
// spaces. Deliberately avoids the generating-function machinery so the two
// routes stay independent.

struct OracleOptions {
  std::size_t enum_threshold = kDefaultWorldLimit;
  std::size_t mc_samples = 100000;
  std::uint64_t seed = 0;
};

enum class OracleMethod { enumeration, montecarlo };

struct OracleReport {
  double value = 0.0;
  OracleMethod method = OracleMethod::enumeration;
  std::size_t sample_count = 0;   // worlds enumerated or samples drawn
  double ci_halfwidth = 0.0;      // 95% CI half-width (Monte Carlo only)
};

namespace detail {

inline double set_distance(const std::vector<TupleAlternative>& a,
                           const std::vector<TupleAlternative>& b, SetMetric metric) {
  // Both sorted.
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  double sym = static_cast<double>(a.size() + b.size() - 2 * inter);
  if (metric == SetMetric::symdiff) return sym;
  double uni = static_cast<double>(a.size() + b.size() - inter);
  return uni == 0.0 ? 0.0 : sym / uni;
}

template <typename DistanceOfWorld>
OracleReport expect_over_worlds(const AndXorTree& tree, const OracleOptions& opts,
                                DistanceOfWorld&& dist) {
  OracleReport rep;
  try {
    auto worlds = enumerate_worlds(tree, opts.enum_threshold);
    for (const auto& w : worlds) rep.value += w.prob * dist(w.leaves);
    rep.method = OracleMethod::enumeration;
    rep.sample_count = worlds.size();
    return rep;
  } catch (const LimitError&) {
    std::mt19937_64 rng(opts.seed);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t s = 0; s < opts.mc_samples; ++s) {
      auto alt_ids = sample_world_alts(tree, rng);
      std::vector<TupleAlternative> world;
      for (int a : alt_ids) world.push_back(tree.alternative(a));
      std::sort(world.begin(), world.end());
      double d = dist(world);
      sum += d;
      sumsq += d * d;
    }
    double n = static_cast<double>(opts.mc_samples);
    rep.value = sum / n;
    double var = std::max(0.0, sumsq / n - rep.value * rep.value);
    rep.method = OracleMethod::montecarlo;
    rep.sample_count = opts.mc_samples;
    rep.ci_halfwidth = 1.96 * std::sqrt(var / n);
    return rep;
  }
}

}  // namespace detail

// E[d(answer, pw)] for a set answer.
inline OracleReport expected_set_distance(const AndXorTree& tree,
                                          std::vector<TupleAlternative> answer, SetMetric metric,
                                          const OracleOptions& opts = {}) {
  std::sort(answer.begin(), answer.end());
  answer.erase(std::unique(answer.begin(), answer.end()), answer.end());
  return detail::expect_over_worlds(tree, opts, [&](const std::vector<TupleAlternative>& w) {
    return detail::set_distance(answer, w, metric);
  });
}

// E[d(answer, topk(pw))].
inline OracleReport expected_topk_distance(const AndXorTree& tree, const TopKList& answer,
                                           TopKMetric metric, const OracleOptions& opts = {}) {
  if (answer.k < 1) throw UsageError("k must be at least 1");
  detail::require_numeric_scores(tree);
  return detail::expect_over_worlds(tree, opts, [&](const std::vector<TupleAlternative>& w) {
    return detail::topk_distance(answer.items, topk_of_world(w, answer.k), answer.k, metric);
  });
}

// The clustering a world induces: present keys grouped by value, absent keys
// in one artificial cluster.
inline Clustering clustering_of_world(const std::vector<TupleAlternative>& world,
                                      const std::vector<std::string>& all_keys) {
  std::map<std::string, std::vector<std::string>> by_label;
  std::set<std::string> present;
  for (const auto& a : world) {
    by_label[value_repr(a.value)].push_back(a.key);
    present.insert(a.key);
  }
  Clustering c;
  for (auto& [label, members] : by_label) c.clusters.push_back(members);
  std::vector<std::string> absent;
  for (const auto& k : all_keys)
    if (!present.count(k)) absent.push_back(k);
  if (!absent.empty()) c.clusters.push_back(std::move(absent));
  c.canonicalize();
  return c;
}

// Unordered pairs clustered together in one partition but separated in the
// other.
inline double clustering_disagreement(const Clustering& a, const Clustering& b,
                                      const std::vector<std::string>& keys) {
  std::map<std::string, int> ca, cb;
  for (std::size_t c = 0; c < a.clusters.size(); ++c)
    for (const auto& k : a.clusters[c]) ca[k] = static_cast<int>(c);
  for (std::size_t c = 0; c < b.clusters.size(); ++c)
    for (const auto& k : b.clusters[c]) cb[k] = static_cast<int>(c);
  double count = 0.0;
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = i + 1; j < keys.size(); ++j) {
      bool ta = ca.at(keys[i]) == ca.at(keys[j]);
      bool tb = cb.at(keys[i]) == cb.at(keys[j]);
      if (ta != tb) count += 1.0;
    }
  return count;
}

inline OracleReport expected_cluster_distance(const AndXorTree& tree, const Clustering& answer,
                                              const OracleOptions& opts = {}) {
  auto keys = tree.keys();
  return detail::expect_over_worlds(tree, opts, [&](const std::vector<TupleAlternative>& w) {
    return clustering_disagreement(answer, clustering_of_world(w, keys), keys);
  });
}

// ---------------------------------------------------------------------------
// Group-by oracle: the world distribution of an independent-tuple matrix is
// enumerated as count vectors (or sampled).

namespace detail {

// Distinct realizable count vectors with their probabilities. Throws
// LimitError when the support product exceeds the threshold.
inline std::map<std::vector<long long>, double> count_vector_distribution(
    const GroupMatrix& m, std::size_t limit) {
  double combos = 1.0;
  for (const auto& row : m.p) {
    int support = 0;
    for (double x : row)
      if (x > 0.0) ++support;
    combos *= std::max(1, support);
    if (combos > static_cast<double>(limit))
      throw LimitError("too many group assignments: more than " + std::to_string(limit));
  }
  std::map<std::vector<long long>, double> dist;
  std::vector<long long> counts(m.group_count(), 0);
  std::function<void(int, double)> rec = [&](int i, double prob) {
    if (i == m.tuple_count()) {
      dist[counts] += prob;
      return;
    }
    for (int j = 0; j < m.group_count(); ++j) {
      if (m.p[i][j] <= 0.0) continue;
      ++counts[j];
      rec(i + 1, prob * m.p[i][j]);
      --counts[j];
    }
  };
  rec(0, 1.0);
  return dist;
}

inline double sq_distance(const std::vector<double>& r, const std::vector<long long>& c) {
  double d = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    double diff = r[j] - static_cast<double>(c[j]);
    d += diff * diff;
  }
  return d;
}

}  // namespace detail

inline OracleReport expected_groupby_distance(const GroupMatrix& m, const std::vector<double>& r,
                                              const OracleOptions& opts = {}) {
  validate_group_matrix(m);
  if (static_cast<int>(r.size()) != m.group_count()) throw DataError("dimension mismatch");
  OracleReport rep;
  try {
    auto dist = detail::count_vector_distribution(m, opts.enum_threshold);
    for (const auto& [counts, prob] : dist) rep.value += prob * detail::sq_distance(r, counts);
    rep.method = OracleMethod::enumeration;
    rep.sample_count = dist.size();
    return rep;
  } catch (const LimitError&) {
    std::mt19937_64 rng(opts.seed);
    double sum = 0.0, sumsq = 0.0;
    std::vector<long long> counts(m.group_count());
    for (std::size_t s = 0; s < opts.mc_samples; ++s) {
      std::fill(counts.begin(), counts.end(), 0);
      for (const auto& row : m.p) {
        double u = detail::next_unit(rng), acc = 0.0;
        for (int j = 0; j < m.group_count(); ++j) {
          acc += row[j];
          if (u < acc) {
            ++counts[j];
            break;
          }
        }
      }
      double d = detail::sq_distance(r, counts);
      sum += d;
      sumsq += d * d;
    }
    double n = static_cast<double>(opts.mc_samples);
    rep.value = sum / n;
    double var = std::max(0.0, sumsq / n - rep.value * rep.value);
    rep.method = OracleMethod::montecarlo;
    rep.sample_count = opts.mc_samples;
    rep.ci_halfwidth = 1.96 * std::sqrt(var / n);
    return rep;
  }
}

// ---------------------------------------------------------------------------
// Exhaustive argmin searches. Mean spaces range over all well-formed answers,
// median spaces over answers of enumerated worlds.

inline constexpr std::size_t kDefaultSpaceLimit = 1u << 20;

template <typename Answer>
struct ExhaustiveResult {
  Answer answer{};
  double value = 0.0;
  std::size_t candidates = 0;
};

inline ExhaustiveResult<std::vector<TupleAlternative>> exhaustive_set_optimum(
    const AndXorTree& tree, SetMetric metric, AnswerKind space, const OracleOptions& opts = {},
    std::size_t space_limit = kDefaultSpaceLimit) {
  auto worlds = enumerate_worlds(tree, opts.enum_threshold);
  std::vector<std::vector<TupleAlternative>> candidates;
  if (space == AnswerKind::median) {
    for (const auto& w : worlds) candidates.push_back(w.leaves);
  } else {
    const int n = tree.alternative_count();
    if (n >= 63 || (1ULL << n) > space_limit)
      throw LimitError("answer space too large: 2^" + std::to_string(n) + " subsets");
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
      std::vector<TupleAlternative> s;
      for (int i = 0; i < n; ++i)
        if (mask & (1ULL << i)) s.push_back(tree.alternative(i));
      std::sort(s.begin(), s.end());
      candidates.push_back(std::move(s));
    }
  }
  ExhaustiveResult<std::vector<TupleAlternative>> best;
  best.candidates = candidates.size();
  bool have = false;
  for (const auto& cand : candidates) {
    double e = 0.0;
    for (const auto& w : worlds) e += w.prob * detail::set_distance(cand, w.leaves, metric);
    if (!have || e < best.value - 1e-15) {
      best.answer = cand;
      best.value = e;
      have = true;
    }
  }
  if (!have) throw InternalError("empty candidate space");
  return best;
}

inline ExhaustiveResult<TopKList> exhaustive_topk_optimum(
    const AndXorTree& tree, int k, TopKMetric metric, AnswerKind space,
    const OracleOptions& opts = {}, std::size_t space_limit = kDefaultSpaceLimit) {
  detail::require_numeric_scores(tree);
  auto worlds = enumerate_worlds(tree, opts.enum_threshold);
  std::vector<std::vector<std::string>> candidates;
  if (space == AnswerKind::median) {
    std::set<std::vector<std::string>> seen;
    for (const auto& w : worlds)
      if (seen.insert(topk_of_world(w.leaves, k)).second)
        candidates.push_back(*seen.find(topk_of_world(w.leaves, k)));
  } else {
    auto keys = tree.keys();
    const int n = static_cast<int>(keys.size());
    if (n < k) throw DataError("fewer than k keys exist");
    double perms = 1.0;
    for (int i = 0; i < k; ++i) perms *= n - i;
    if (perms > static_cast<double>(space_limit))
      throw LimitError("answer space too large: " + std::to_string(static_cast<long long>(perms)) +
                       " ordered lists");
    std::vector<std::string> cur;
    std::vector<char> used(n, 0);
    std::function<void()> rec = [&]() {
      if (static_cast<int>(cur.size()) == k) {
        candidates.push_back(cur);
        return;
      }
      for (int i = 0; i < n; ++i) {
        if (used[i]) continue;
        used[i] = 1;
        cur.push_back(keys[i]);
        rec();
        cur.pop_back();
        used[i] = 0;
      }
    };
    rec();
  }
  ExhaustiveResult<TopKList> best;
  best.candidates = candidates.size();
  best.answer.k = k;
  bool have = false;
  for (const auto& cand : candidates) {
    double e = 0.0;
    for (const auto& w : worlds)
      e += w.prob * detail::topk_distance(cand, topk_of_world(w.leaves, k), k, metric);
    if (!have || e < best.value - 1e-15) {
      best.answer.items = cand;
      best.value = e;
      have = true;
    }
  }
  if (!have) throw InternalError("empty candidate space");
  return best;
}

inline ExhaustiveResult<std::vector<long long>> exhaustive_groupby_optimum(
    const GroupMatrix& m, const OracleOptions& opts = {},
    std::size_t space_limit = kDefaultSpaceLimit) {
  auto dist = detail::count_vector_distribution(m, std::max(opts.enum_threshold, space_limit));
  ExhaustiveResult<std::vector<long long>> best;
  best.candidates = dist.size();
  bool have = false;
  for (const auto& [cand, _] : dist) {
    std::vector<double> rd(cand.begin(), cand.end());
    double e = 0.0;
    for (const auto& [counts, prob] : dist) e += prob * detail::sq_distance(rd, counts);
    if (!have || e < best.value - 1e-15) {
      best.answer = cand;
      best.value = e;
      have = true;
    }
  }
  if (!have) throw InternalError("empty candidate space");
  return best;
}

namespace detail {

// All partitions of n items via restricted growth strings.
inline void for_each_partition(int n, std::size_t limit,
                               const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> assign(n, 0);
  std::size_t count = 0;
  std::function<void(int, int)> rec = [&](int i, int max_used) {
    if (i == n) {
      if (++count > limit) throw LimitError("answer space too large: more than " +
                                            std::to_string(limit) + " partitions");
      fn(assign);
      return;
    }
    for (int c = 0; c <= max_used + 1 && c < n; ++c) {
      assign[i] = c;
      rec(i + 1, std::max(max_used, c));
    }
  };
  if (n == 0) {
    fn(assign);
    return;
  }
  rec(0, -1);
}

}  // namespace detail

inline ExhaustiveResult<Clustering> exhaustive_cluster_optimum(
    const AndXorTree& tree, const OracleOptions& opts = {},
    std::size_t space_limit = kDefaultSpaceLimit) {
  auto keys = tree.keys();
  auto worlds = enumerate_worlds(tree, opts.enum_threshold);
  // Enumeration-derived pairwise weights keep this route independent of the
  // generating-function path.
  const int n = static_cast<int>(keys.size());
  std::map<std::string, int> key_idx;
  for (int i = 0; i < n; ++i) key_idx[keys[i]] = i;
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (const auto& world : worlds) {
    auto c = clustering_of_world(world.leaves, keys);
    std::map<std::string, int> cl;
    for (std::size_t ci = 0; ci < c.clusters.size(); ++ci)
      for (const auto& k : c.clusters[ci]) cl[k] = static_cast<int>(ci);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (cl[keys[i]] == cl[keys[j]]) {
          w[i][j] += world.prob;
          w[j][i] += world.prob;
        }
  }
  ExhaustiveResult<Clustering> best;
  bool have = false;
  std::size_t count = 0;
  detail::for_each_partition(n, space_limit, [&](const std::vector<int>& assign) {
    ++count;
    double e = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        e += assign[i] == assign[j] ? 1.0 - w[i][j] : w[i][j];
    if (!have || e < best.value - 1e-15) {
      best.value = e;
      have = true;
      std::map<int, std::vector<std::string>> groups;
      for (int i = 0; i < n; ++i) groups[assign[i]].push_back(keys[i]);
      best.answer.clusters.clear();
      for (auto& [_, members] : groups) best.answer.clusters.push_back(members);
      best.answer.canonicalize();
    }
  });
  best.candidates = count;
  if (!have && n > 0) throw InternalError("empty candidate space");
  return best;
}

}  // namespace consensus
