#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "consensus/model.hpp"

namespace consensus {

// Truncated dense polynomial in up to three variables with nonnegative
// coefficients. Mass whose exponent exceeds a bound is folded into an
// explicit overflow bucket so totals stay intact.
struct Polynomial {
  int var_count = 1;
  std::array<int, 3> bound = {0, 0, 0};  // inclusive max degree per variable
  std::vector<double> coef;
  double overflow = 0.0;

  Polynomial() = default;
  Polynomial(int vars, std::array<int, 3> b) : var_count(vars), bound(b) {
    coef.assign(cells(), 0.0);
  }

  std::size_t cells() const {
    std::size_t n = 1;
    for (int j = 0; j < var_count; ++j) n *= static_cast<std::size_t>(bound[j] + 1);
    return n;
  }

  std::size_t index(int e0, int e1, int e2) const {
    std::size_t idx = static_cast<std::size_t>(e0);
    if (var_count > 1) idx += static_cast<std::size_t>(e1) * (bound[0] + 1);
    if (var_count > 2) idx += static_cast<std::size_t>(e2) * (bound[0] + 1) * (bound[1] + 1);
    return idx;
  }

  bool in_bounds(int e0, int e1, int e2) const {
    return e0 <= bound[0] && (var_count < 2 || e1 <= bound[1]) && (var_count < 3 || e2 <= bound[2]);
  }

  double coeff(int e0, int e1 = 0, int e2 = 0) const {
    if (e0 < 0 || e1 < 0 || e2 < 0) return 0.0;
    if (!in_bounds(e0, e1, e2)) return 0.0;
    return coef[index(e0, e1, e2)];
  }

  double& at(int e0, int e1 = 0, int e2 = 0) { return coef[index(e0, e1, e2)]; }

  double total() const {
    double s = overflow;
    for (double c : coef) s += c;
    return s;
  }
};

// Variable choice per leaf: 0 means the constant 1, j in 1..var_count means x_j.
struct VariableAssignment {
  int var_count = 1;
  std::vector<int> var_of_leaf;  // indexed by leaf_index
};

// Build an assignment from a per-leaf rule.
inline VariableAssignment assign_by(
    const AndXorTree& tree, int var_count,
    const std::function<int(const TupleAlternative&)>& rule) {
  VariableAssignment a;
  a.var_count = var_count;
  a.var_of_leaf.resize(tree.leaf_count());
  for (int leaf_node : tree.leaf_nodes()) {
    const auto& n = tree.node(leaf_node);
    a.var_of_leaf[n.leaf_index] = rule(tree.alternative(n.alt));
  }
  return a;
}

namespace detail {

inline void poly_mul_into(const Polynomial& a, const Polynomial& b, Polynomial& out) {
  // Schoolbook with truncation; out must be zeroed and share shape with a.
  double a_mass = 0.0, b_mass = 0.0;
  for (double c : a.coef) a_mass += c;
  for (double c : b.coef) b_mass += c;
  out.overflow = a.overflow * (b_mass + b.overflow) + b.overflow * a_mass;
  const int v = a.var_count;
  const int a0 = a.bound[0] + 1, a1 = v > 1 ? a.bound[1] + 1 : 1, a2 = v > 2 ? a.bound[2] + 1 : 1;
  for (int i2 = 0; i2 < a2; ++i2)
    for (int i1 = 0; i1 < a1; ++i1)
      for (int i0 = 0; i0 < a0; ++i0) {
        double ca = a.coef[a.index(i0, i1, i2)];
        if (ca == 0.0) continue;
        for (int j2 = 0; j2 < a2; ++j2)
          for (int j1 = 0; j1 < a1; ++j1)
            for (int j0 = 0; j0 < a0; ++j0) {
              double cb = b.coef[b.index(j0, j1, j2)];
              if (cb == 0.0) continue;
              if (out.in_bounds(i0 + j0, i1 + j1, i2 + j2))
                out.at(i0 + j0, i1 + j1, i2 + j2) += ca * cb;
              else
                out.overflow += ca * cb;
            }
      }
}

inline Polynomial eval_node(const AndXorTree& t, int id, const VariableAssignment& assign,
                            const std::array<int, 3>& bounds) {
  const auto& n = t.node(id);
  Polynomial p(assign.var_count, bounds);
  switch (n.kind) {
    case AndXorTree::NodeKind::leaf: {
      int v = assign.var_of_leaf[n.leaf_index];
      if (v == 0) {
        p.at(0, 0, 0) = 1.0;
      } else {
        int e[3] = {0, 0, 0};
        e[v - 1] = 1;
        if (p.in_bounds(e[0], e[1], e[2]))
          p.at(e[0], e[1], e[2]) = 1.0;
        else
          p.overflow = 1.0;
      }
      break;
    }
    case AndXorTree::NodeKind::and_node: {
      p.at(0, 0, 0) = 1.0;
      for (int c : n.children) {
        Polynomial child = eval_node(t, c, assign, bounds);
        Polynomial next(assign.var_count, bounds);
        poly_mul_into(p, child, next);
        p = std::move(next);
      }
      break;
    }
    case AndXorTree::NodeKind::or_node: {
      double sum = 0.0;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        double w = n.probs[i];
        sum += w;
        if (w <= 0.0) continue;
        Polynomial child = eval_node(t, n.children[i], assign, bounds);
        for (std::size_t j = 0; j < p.coef.size(); ++j) p.coef[j] += w * child.coef[j];
        p.overflow += w * child.overflow;
      }
      p.at(0, 0, 0) += std::max(0.0, 1.0 - sum);
      break;
    }
  }
  return p;
}

}  // namespace detail

// Coefficient of prod x_j^{i_j} = total probability of worlds containing
// exactly i_j leaves mapped to x_j, within the truncation bounds.
inline Polynomial evaluate(const AndXorTree& tree, const VariableAssignment& assign,
                           std::array<int, 3> bounds) {
  if (assign.var_count < 1 || assign.var_count > 3)
    throw UsageError("var_count must be between 1 and 3");
  for (int j = 0; j < assign.var_count; ++j)
    if (bounds[j] < 1) throw UsageError("truncation bound must be at least 1");
  for (int j = assign.var_count; j < 3; ++j) bounds[j] = 0;
  if (tree.empty()) throw DataError("cannot evaluate an empty tree");
  return detail::eval_node(tree, tree.root(), assign, bounds);
}

// Pr(alt is in the random world).
inline double marginal(const AndXorTree& tree, const TupleAlternative& alt) {
  auto id = tree.alt_id(alt);
  if (!id) throw DataError("unknown alternative " + alt_repr(alt));
  auto assign = assign_by(tree, 1, [&](const TupleAlternative& a) { return a == alt ? 1 : 0; });
  Polynomial p = evaluate(tree, assign, {1, 0, 0});
  return p.coeff(1);
}

// ---------------------------------------------------------------------------
// Rank machinery. Scores are compared with ties broken by key, so the
// per-world ranking is always a strict order.

namespace detail {

// Does alternative `other` rank above `target` when both are present?
inline bool ranks_above(const TupleAlternative& other, const TupleAlternative& target) {
  double so = value_number(other.value), st = value_number(target.value);
  if (so != st) return so > st;
  return other.key < target.key;
}

inline void require_numeric_scores(const AndXorTree& tree) {
  for (const auto& a : tree.alternatives())
    if (!value_is_number(a.value))
      throw DataError("ranking needs numeric scores; found label " + alt_repr(a));
}

}  // namespace detail

// Pr(r(t) = i) for one alternative of t, i = 1..n (n = distinct key count).
inline std::vector<double> alt_rank_distribution(const AndXorTree& tree,
                                                 const TupleAlternative& alt) {
  detail::require_numeric_scores(tree);
  if (!tree.alt_id(alt)) throw DataError("unknown alternative " + alt_repr(alt));
  int n = static_cast<int>(tree.keys().size());
  auto assign = assign_by(tree, 2, [&](const TupleAlternative& a) {
    if (a == alt) return 2;  // y
    if (a.key != alt.key && detail::ranks_above(a, alt)) return 1;  // x
    return 0;
  });
  Polynomial p = evaluate(tree, assign, {std::max(1, n - 1), 1, 0});
  std::vector<double> dist(n, 0.0);
  for (int i = 1; i <= n; ++i) dist[i - 1] = p.coeff(i - 1, 1);
  return dist;
}

// Per-tuple rank distribution and the derived ranking statistics for a
// Top-k query with the given k.
struct RankProfile {
  std::string key;
  int k = 1;
  std::vector<double> dist;        // dist[i-1] = Pr(r(t) = i), i = 1..n
  std::vector<double> cumulative;  // cumulative[i-1] = Pr(r(t) <= i)
  double tail = 0.0;               // Pr(r(t) > k), absence included
  double upsilon1 = 0.0;           // Pr(r(t) <= k)
  double upsilon2 = 0.0;           // sum_{i<=k} i * Pr(r(t) = i)
  std::vector<double> upsilon3;    // upsilon3[i-1], i = 1..k
  double upsilonH = 0.0;           // sum_{i<=k} Pr(r(t) <= i) / i

  double cum(int i) const {  // Pr(r(t) <= i) for any i >= 1
    if (cumulative.empty()) return 0.0;
    int idx = std::min<int>(i, static_cast<int>(cumulative.size())) - 1;
    return idx < 0 ? 0.0 : cumulative[idx];
  }
};

inline RankProfile rank_profile(const AndXorTree& tree, const std::string& key, int k) {
  detail::require_numeric_scores(tree);
  if (k < 1) throw UsageError("k must be at least 1");
  auto keys = tree.keys();
  int n = static_cast<int>(keys.size());
  if (!std::binary_search(keys.begin(), keys.end(), key))
    throw DataError("unknown key '" + key + "'");

  RankProfile r;
  r.key = key;
  r.k = k;
  r.dist.assign(n, 0.0);
  std::vector<bool> seen(tree.alternative_count(), false);
  for (int leaf : tree.leaf_nodes()) {
    int alt = tree.node(leaf).alt;
    if (seen[alt] || tree.alternative(alt).key != key) continue;
    seen[alt] = true;
    auto d = alt_rank_distribution(tree, tree.alternative(alt));
    for (int i = 0; i < n; ++i) r.dist[i] += d[i];
  }

  r.cumulative.assign(n, 0.0);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += r.dist[i];
    r.cumulative[i] = acc;
  }
  int kk = std::min(k, n);
  r.upsilon1 = r.cum(kk);
  r.tail = 1.0 - r.upsilon1;
  for (int i = 1; i <= kk; ++i) r.upsilon2 += i * r.dist[i - 1];
  r.upsilon3.assign(k, 0.0);
  for (int i = 1; i <= k; ++i) {
    double s = 0.0;
    for (int j = 1; j <= kk; ++j) s += r.dist[j - 1] * std::abs(i - j);
    r.upsilon3[i - 1] = s + i * r.tail;
  }
  for (int i = 1; i <= k; ++i) r.upsilonH += r.cum(i) / i;
  return r;
}

// Pr(r(t_i) < r(t_j)): t_i present and either outranking t_j or t_j absent.
inline double precedes_prob(const AndXorTree& tree, const std::string& key_i,
                            const std::string& key_j) {
  if (key_i == key_j) throw UsageError("precedes_prob requires two distinct keys");
  detail::require_numeric_scores(tree);
  auto keys = tree.keys();
  for (const auto& k : {key_i, key_j})
    if (!std::binary_search(keys.begin(), keys.end(), k))
      throw DataError("unknown key '" + k + "'");
  double total = 0.0;
  std::vector<bool> seen(tree.alternative_count(), false);
  for (int leaf : tree.leaf_nodes()) {
    int alt = tree.node(leaf).alt;
    if (seen[alt] || tree.alternative(alt).key != key_i) continue;
    seen[alt] = true;
    const TupleAlternative& a = tree.alternative(alt);
    auto assign = assign_by(tree, 2, [&](const TupleAlternative& other) {
      if (other == a) return 2;  // y
      if (other.key == key_j && detail::ranks_above(other, a)) return 1;  // x
      return 0;
    });
    Polynomial p = evaluate(tree, assign, {1, 1, 0});
    total += p.coeff(0, 1);
  }
  return total;
}

// Pr(neither key appears in the world).
inline double both_absent_prob(const AndXorTree& tree, const std::string& key_i,
                               const std::string& key_j) {
  auto assign = assign_by(tree, 1, [&](const TupleAlternative& a) {
    return (a.key == key_i || a.key == key_j) ? 1 : 0;
  });
  Polynomial p = evaluate(tree, assign, {1, 0, 0});
  return p.coeff(0);
}

// Pr(both keys take the same value) plus Pr(both absent); absent tuples
// share the artificial absent cluster.
inline double cocluster_prob(const AndXorTree& tree, const std::string& key_i,
                             const std::string& key_j) {
  if (key_i == key_j) throw UsageError("cocluster_prob requires two distinct keys");
  auto keys = tree.keys();
  for (const auto& k : {key_i, key_j})
    if (!std::binary_search(keys.begin(), keys.end(), k))
      throw DataError("unknown key '" + k + "'");
  std::vector<Value> labels_i, labels_j;
  for (const auto& a : tree.alternatives()) {
    if (a.key == key_i) labels_i.push_back(a.value);
    if (a.key == key_j) labels_j.push_back(a.value);
  }
  double total = 0.0;
  for (const auto& lab : labels_i) {
    bool shared = false;
    for (const auto& lj : labels_j) shared |= value_eq(lab, lj);
    if (!shared) continue;
    auto assign = assign_by(tree, 1, [&](const TupleAlternative& a) {
      return ((a.key == key_i || a.key == key_j) && value_eq(a.value, lab)) ? 1 : 0;
    });
    Polynomial p = evaluate(tree, assign, {2, 0, 0});
    total += p.coeff(2);
  }
  return total + both_absent_prob(tree, key_i, key_j);
}

}  // namespace consensus
