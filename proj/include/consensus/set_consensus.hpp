#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "consensus/genfunc.hpp"
#include "consensus/model.hpp"

namespace consensus {

enum class SetMetric { symdiff, jaccard };
enum class AnswerKind { mean, median };

struct WorldAnswer {
  std::vector<TupleAlternative> leaves;  // sorted
  double expected_distance = 0.0;
  AnswerKind kind = AnswerKind::mean;
  SetMetric metric = SetMetric::symdiff;
  std::string diagnostic;  // nonempty when a guarantee failed to materialize
};

namespace detail {

inline std::vector<double> all_marginals(const AndXorTree& tree) {
  std::vector<double> m(tree.alternative_count());
  for (int i = 0; i < tree.alternative_count(); ++i) m[i] = marginal(tree, tree.alternative(i));
  return m;
}

}  // namespace detail

// Exactly the alternatives with marginal > 0.5 (0.5 itself is excluded, the
// smaller of the two optimal choices).
inline WorldAnswer mean_world_symdiff(const AndXorTree& tree) {
  WorldAnswer ans;
  ans.kind = AnswerKind::mean;
  ans.metric = SetMetric::symdiff;
  auto m = detail::all_marginals(tree);
  for (int i = 0; i < tree.alternative_count(); ++i) {
    if (m[i] > 0.5) {
      ans.leaves.push_back(tree.alternative(i));
      ans.expected_distance += 1.0 - m[i];
    } else {
      ans.expected_distance += m[i];
    }
  }
  std::sort(ans.leaves.begin(), ans.leaves.end());
  return ans;
}

// Same set as the mean world. For and/xor correlations this set is meant to
// be a possible world, but that can fail (e.g. every OR edge has probability
// <= 0.5 while the node cannot be empty), so constructibility is checked and
// a diagnostic surfaced instead of guessing.
inline WorldAnswer median_world_symdiff(const AndXorTree& tree) {
  WorldAnswer ans = mean_world_symdiff(tree);
  ans.kind = AnswerKind::median;
  if (world_probability(tree, ans.leaves) <= kWorldEps)
    ans.diagnostic =
        "internal: the >0.5 set is not a possible world of this tree; "
        "no median world matches the mean set on this input";
  return ans;
}

// E[d_J(W, pw)] via the two-variable generating function: x counts members
// of W present in the world, y counts non-members present.
inline double expected_jaccard(const AndXorTree& tree, const std::vector<TupleAlternative>& W) {
  std::vector<char> in_w(tree.alternative_count(), 0);
  int w_size = 0;
  {
    std::vector<int> ids;
    for (const auto& a : W) {
      auto id = tree.alt_id(a);
      if (!id) throw DataError("answer alternative " + alt_repr(a) + " is not a leaf of the tree");
      ids.push_back(*id);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (int id : ids) in_w[id] = 1;
    w_size = static_cast<int>(ids.size());
  }
  int n_keys = static_cast<int>(tree.keys().size());
  if (w_size == 0) {
    // d_J(empty, pw) is 1 unless pw is empty too (0/0 convention -> 0).
    auto assign = assign_by(tree, 1, [&](const TupleAlternative&) { return 1; });
    Polynomial p = evaluate(tree, assign, {std::max(1, n_keys), 0, 0});
    return 1.0 - p.coeff(0);
  }
  auto assign = assign_by(tree, 2, [&](const TupleAlternative& a) {
    return in_w[*tree.alt_id(a)] ? 1 : 2;
  });
  Polynomial p = evaluate(tree, assign, {w_size, std::max(1, n_keys), 0});
  double total = 0.0;
  for (int i = 0; i <= w_size; ++i)
    for (int j = 0; j <= std::max(1, n_keys); ++j) {
      double c = p.coeff(i, j);
      if (c == 0.0) continue;
      double denom = w_size + j;
      if (denom > 0) total += c * (w_size - i + j) / denom;
    }
  return total;
}

// ---------------------------------------------------------------------------
// Structure probes

struct BidBlock {
  std::string key;
  std::vector<std::pair<TupleAlternative, double>> alternatives;
};

// Block-independent-disjoint view: AND of per-key OR blocks of leaves (a bare
// leaf is a probability-1 block). Nested ANDs are flattened.
inline std::optional<std::vector<BidBlock>> as_bid(const AndXorTree& tree) {
  if (tree.empty()) return std::nullopt;
  std::vector<int> blocks;
  std::vector<int> stack{tree.root()};
  if (tree.node(tree.root()).kind != AndXorTree::NodeKind::and_node) {
    blocks.push_back(tree.root());
    stack.clear();
  }
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    for (int c : tree.node(id).children) {
      if (tree.node(c).kind == AndXorTree::NodeKind::and_node)
        stack.push_back(c);
      else
        blocks.push_back(c);
    }
  }
  std::vector<BidBlock> out;
  std::vector<std::string> seen_keys;
  for (int id : blocks) {
    const auto& n = tree.node(id);
    BidBlock b;
    if (n.kind == AndXorTree::NodeKind::leaf) {
      b.key = tree.alternative(n.alt).key;
      b.alternatives.emplace_back(tree.alternative(n.alt), 1.0);
    } else {
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        const auto& c = tree.node(n.children[i]);
        if (c.kind != AndXorTree::NodeKind::leaf) return std::nullopt;
        const auto& alt = tree.alternative(c.alt);
        if (i == 0) b.key = alt.key;
        if (alt.key != b.key) return std::nullopt;
        b.alternatives.emplace_back(alt, n.probs[i]);
      }
      if (b.alternatives.empty()) return std::nullopt;
    }
    for (const auto& k : seen_keys)
      if (k == b.key) return std::nullopt;
    seen_keys.push_back(b.key);
    out.push_back(std::move(b));
  }
  return out;
}

inline bool is_bid(const AndXorTree& tree) { return as_bid(tree).has_value(); }

inline bool is_tuple_independent(const AndXorTree& tree) {
  auto bid = as_bid(tree);
  if (!bid) return false;
  for (const auto& b : *bid)
    if (b.alternatives.size() != 1) return false;
  return true;
}

namespace detail {

// Prefix scan over probability-sorted candidates, minimizing exact expected
// Jaccard distance; ties go to the shorter prefix. Candidates that are not
// possible worlds are skipped when `worlds_only` is set.
inline WorldAnswer jaccard_prefix_scan(const AndXorTree& tree,
                                       std::vector<std::pair<TupleAlternative, double>> cand,
                                       AnswerKind kind, bool worlds_only) {
  std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  WorldAnswer best;
  best.kind = kind;
  best.metric = SetMetric::jaccard;
  bool have = false;
  std::vector<TupleAlternative> prefix;
  for (std::size_t len = 0; len <= cand.size(); ++len) {
    if (len > 0) prefix.push_back(cand[len - 1].first);
    if (worlds_only && world_probability(tree, prefix) <= kWorldEps) continue;
    double d = expected_jaccard(tree, prefix);
    if (!have || d < best.expected_distance - 1e-15) {
      best.leaves = prefix;
      best.expected_distance = d;
      have = true;
    }
  }
  if (!have) throw InternalError("no candidate prefix is a possible world");
  std::sort(best.leaves.begin(), best.leaves.end());
  return best;
}

}  // namespace detail

// Best prefix of the probability-sorted tuple list; the mean world of a
// tuple-independent database is always such a prefix.
inline WorldAnswer mean_world_jaccard_independent(const AndXorTree& tree) {
  auto bid = as_bid(tree);
  if (!bid) throw DataError("tree is not tuple-independent");
  std::vector<std::pair<TupleAlternative, double>> cand;
  for (const auto& b : *bid) {
    if (b.alternatives.size() != 1) throw DataError("tree is not tuple-independent");
    cand.push_back(b.alternatives[0]);
  }
  return detail::jaccard_prefix_scan(tree, std::move(cand), AnswerKind::mean, false);
}

// Per key keep the highest-probability alternative, then run the prefix scan
// over possible-world prefixes.
inline WorldAnswer median_world_jaccard_bid(const AndXorTree& tree) {
  auto bid = as_bid(tree);
  if (!bid) throw DataError("tree is not BID");
  std::vector<std::pair<TupleAlternative, double>> cand;
  for (const auto& b : *bid) {
    const std::pair<TupleAlternative, double>* pick = nullptr;
    for (const auto& alt : b.alternatives) {
      if (!pick || alt.second > pick->second ||
          (alt.second == pick->second && alt.first < pick->first))
        pick = &alt;
    }
    if (pick && pick->second > 0.0) cand.push_back(*pick);
  }
  return detail::jaccard_prefix_scan(tree, std::move(cand), AnswerKind::median, true);
}

}  // namespace consensus
