#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "consensus/errors.hpp"

namespace consensus {

// Absolute tolerance for probability comparisons throughout the library.
inline constexpr double kProbEps = 1e-9;
// Threshold below which a world probability counts as zero.
inline constexpr double kWorldEps = 1e-12;

// A leaf attribute: numeric score or categorical label.
using Value = std::variant<double, std::string>;

inline bool value_is_number(const Value& v) { return v.index() == 0; }

inline double value_number(const Value& v) {
  if (!value_is_number(v)) throw DataError("non-numeric value: " + std::get<std::string>(v));
  return std::get<double>(v);
}

// Canonical text form, used for labels, output and tie-breaking.
inline std::string value_repr(const Value& v) {
  if (value_is_number(v)) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", std::get<double>(v));
    return buf;
  }
  return std::get<std::string>(v);
}

// Numbers order before strings; within a kind, natural order.
inline bool value_less(const Value& a, const Value& b) {
  if (a.index() != b.index()) return a.index() < b.index();
  if (value_is_number(a)) return std::get<double>(a) < std::get<double>(b);
  return std::get<std::string>(a) < std::get<std::string>(b);
}

inline bool value_eq(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (value_is_number(a)) return std::get<double>(a) == std::get<double>(b);
  return std::get<std::string>(a) == std::get<std::string>(b);
}

struct TupleAlternative {
  std::string key;
  Value value;

  friend bool operator==(const TupleAlternative& a, const TupleAlternative& b) {
    return a.key == b.key && value_eq(a.value, b.value);
  }
  friend bool operator<(const TupleAlternative& a, const TupleAlternative& b) {
    if (a.key != b.key) return a.key < b.key;
    return value_less(a.value, b.value);
  }
};

inline std::string alt_repr(const TupleAlternative& a) {
  return "(" + a.key + ", " + value_repr(a.value) + ")";
}

// The correlation model. Leaves are tuple alternatives; inner nodes are
// AND (all children coexist) or OR (at most one child materializes, with
// edge probabilities). Immutable once built; all queries are read-only.
class AndXorTree {
 public:
  enum class NodeKind { leaf, and_node, or_node };

  struct Node {
    NodeKind kind;
    int alt = -1;         // leaf: alternative id
    int leaf_index = -1;  // leaf: dense index into leaf_nodes()
    std::vector<int> children;
    std::vector<double> probs;  // or_node: edge probability per child
  };

  int add_leaf(std::string key, Value value) {
    TupleAlternative alt{std::move(key), std::move(value)};
    int alt_id;
    auto it = alt_ids_.find(alt);
    if (it != alt_ids_.end()) {
      alt_id = it->second;
    } else {
      alt_id = static_cast<int>(alts_.size());
      alts_.push_back(alt);
      alt_ids_.emplace(alt, alt_id);
    }
    Node n;
    n.kind = NodeKind::leaf;
    n.alt = alt_id;
    n.leaf_index = static_cast<int>(leaf_nodes_.size());
    nodes_.push_back(std::move(n));
    leaf_nodes_.push_back(static_cast<int>(nodes_.size()) - 1);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int add_and(std::vector<int> children) {
    Node n;
    n.kind = NodeKind::and_node;
    n.children = std::move(children);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int add_or(std::vector<int> children, std::vector<double> probs) {
    Node n;
    n.kind = NodeKind::or_node;
    n.children = std::move(children);
    n.probs = std::move(probs);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void set_root(int id) { root_ = id; }
  int root() const { return root_; }
  bool empty() const { return root_ < 0; }

  const Node& node(int id) const { return nodes_[id]; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  const std::vector<int>& leaf_nodes() const { return leaf_nodes_; }
  int leaf_count() const { return static_cast<int>(leaf_nodes_.size()); }

  const std::vector<TupleAlternative>& alternatives() const { return alts_; }
  int alternative_count() const { return static_cast<int>(alts_.size()); }
  const TupleAlternative& alternative(int id) const { return alts_[id]; }

  std::optional<int> alt_id(const TupleAlternative& alt) const {
    auto it = alt_ids_.find(alt);
    if (it == alt_ids_.end()) return std::nullopt;
    return it->second;
  }

  // Distinct tuple keys, sorted.
  std::vector<std::string> keys() const {
    std::set<std::string> s;
    for (const auto& a : alts_) s.insert(a.key);
    return {s.begin(), s.end()};
  }

 private:
  std::vector<Node> nodes_;
  std::vector<int> leaf_nodes_;
  std::vector<TupleAlternative> alts_;
  std::map<TupleAlternative, int> alt_ids_;
  int root_ = -1;
};

struct PossibleWorld {
  std::vector<TupleAlternative> leaves;  // sorted, key-distinct
  double prob = 0.0;
};

// ---------------------------------------------------------------------------
// Validation

struct ValidationEntry {
  std::string path;  // JSON-pointer-style node path, "" = root
  std::string kind;  // "probability" | "key" | "structure"
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  bool ok() const { return entries.empty(); }
};

namespace detail {

inline void collect_keys(const AndXorTree& t, int id, std::set<std::string>& out) {
  const auto& n = t.node(id);
  if (n.kind == AndXorTree::NodeKind::leaf) {
    out.insert(t.alternative(n.alt).key);
    return;
  }
  for (int c : n.children) collect_keys(t, c, out);
}

inline void validate_node(const AndXorTree& t, int id, const std::string& path, bool is_root,
                          ValidationReport& rep) {
  const auto& n = t.node(id);
  switch (n.kind) {
    case AndXorTree::NodeKind::leaf: {
      if (t.alternative(n.alt).key.empty())
        rep.entries.push_back({path, "structure", "leaf has an empty key"});
      break;
    }
    case AndXorTree::NodeKind::and_node: {
      if (n.children.empty() && !is_root)
        rep.entries.push_back({path, "structure", "non-root AND node has no children"});
      // Key constraint: two leaves with the same key must have an OR LCA, so
      // no key may occur in two different children of an AND node.
      std::map<std::string, int> seen;  // key -> child index
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        std::set<std::string> keys;
        collect_keys(t, n.children[i], keys);
        for (const auto& k : keys) {
          auto [it, inserted] = seen.emplace(k, static_cast<int>(i));
          if (!inserted)
            rep.entries.push_back(
                {path, "key",
                 "key '" + k + "' occurs under AND children " + std::to_string(it->second) +
                     " and " + std::to_string(i) + " (their LCA is an AND node)"});
        }
      }
      for (std::size_t i = 0; i < n.children.size(); ++i)
        validate_node(t, n.children[i], path + "/children/" + std::to_string(i), false, rep);
      break;
    }
    case AndXorTree::NodeKind::or_node: {
      double sum = 0.0;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        double p = n.probs[i];
        if (!(p >= 0.0))
          rep.entries.push_back({path + "/children/" + std::to_string(i), "probability",
                                 "edge probability " + std::to_string(p) + " is negative"});
        sum += p;
      }
      if (sum > 1.0 + kProbEps) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.12g", sum);
        rep.entries.push_back(
            {path, "probability", std::string("child probabilities sum to ") + buf + " > 1"});
      }
      for (std::size_t i = 0; i < n.children.size(); ++i)
        validate_node(t, n.children[i], path + "/children/" + std::to_string(i) + "/child", false,
                      rep);
      break;
    }
  }
}

}  // namespace detail

inline ValidationReport validate(const AndXorTree& tree) {
  ValidationReport rep;
  if (tree.empty()) {
    rep.entries.push_back({"", "structure", "tree has no root"});
    return rep;
  }
  detail::validate_node(tree, tree.root(), "", true, rep);
  return rep;
}

// ---------------------------------------------------------------------------
// BID construction

struct BidRow {
  std::string key;
  Value value;
  double prob;
};

// AND root with one OR block per distinct key (first-appearance order),
// one leaf per alternative. Tuple-independent input is the one-alternative
// special case; empty input gives the empty relation (childless AND root).
inline AndXorTree from_bid(const std::vector<BidRow>& rows) {
  AndXorTree t;
  std::vector<std::string> key_order;
  std::map<std::string, std::vector<const BidRow*>> by_key;
  for (const auto& r : rows) {
    if (r.key.empty()) throw DataError("BID row has an empty key");
    if (!(r.prob >= 0.0 && r.prob <= 1.0 + kProbEps))
      throw DataError("BID row " + alt_repr({r.key, r.value}) + " has probability " +
                      std::to_string(r.prob) + " outside [0, 1]");
    auto [it, inserted] = by_key.emplace(r.key, std::vector<const BidRow*>{});
    if (inserted) key_order.push_back(r.key);
    for (const BidRow* prev : it->second)
      if (value_eq(prev->value, r.value))
        throw DataError("duplicate (key, value) pair " + alt_repr({r.key, r.value}));
    it->second.push_back(&r);
  }
  std::vector<int> blocks;
  for (const auto& k : key_order) {
    const auto& alts = by_key[k];
    double sum = 0.0;
    std::vector<int> leaves;
    std::vector<double> probs;
    for (const BidRow* r : alts) {
      sum += r->prob;
      leaves.push_back(t.add_leaf(r->key, r->value));
      probs.push_back(r->prob);
    }
    if (sum > 1.0 + kProbEps)
      throw DataError("alternatives of key '" + k + "' have probabilities summing to " +
                      std::to_string(sum) + " > 1");
    blocks.push_back(t.add_or(std::move(leaves), std::move(probs)));
  }
  t.set_root(t.add_and(std::move(blocks)));
  return t;
}

// ---------------------------------------------------------------------------
// World enumeration

namespace detail {

// Worlds of a subtree as atom-id sets, merged by set. Atoms are either
// alternative ids (public enumeration) or leaf indices (coefficient checks).
using AtomWorlds = std::map<std::vector<int>, double>;

template <typename AtomOf>
AtomWorlds enumerate_atoms(const AndXorTree& t, int id, std::size_t limit, AtomOf&& atom_of) {
  const auto& n = t.node(id);
  AtomWorlds out;
  switch (n.kind) {
    case AndXorTree::NodeKind::leaf:
      out.emplace(std::vector<int>{atom_of(n)}, 1.0);
      break;
    case AndXorTree::NodeKind::and_node: {
      out.emplace(std::vector<int>{}, 1.0);
      for (int c : n.children) {
        AtomWorlds child = enumerate_atoms(t, c, limit, atom_of);
        AtomWorlds next;
        for (const auto& [sa, pa] : out) {
          for (const auto& [sb, pb] : child) {
            std::vector<int> merged;
            merged.reserve(sa.size() + sb.size());
            std::merge(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(merged));
            merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
            next[std::move(merged)] += pa * pb;
            if (next.size() > limit)
              throw LimitError("too many worlds: reached " + std::to_string(next.size()) +
                               " (limit " + std::to_string(limit) + ")");
          }
        }
        out = std::move(next);
      }
      break;
    }
    case AndXorTree::NodeKind::or_node: {
      double sum = 0.0;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        double p = n.probs[i];
        sum += p;
        if (p <= 0.0) continue;
        AtomWorlds child = enumerate_atoms(t, n.children[i], limit, atom_of);
        for (auto& [s, q] : child) {
          out[s] += p * q;
          if (out.size() > limit)
            throw LimitError("too many worlds: reached " + std::to_string(out.size()) +
                             " (limit " + std::to_string(limit) + ")");
        }
      }
      double residual = 1.0 - sum;
      if (residual > kProbEps) out[std::vector<int>{}] += residual;
      break;
    }
  }
  return out;
}

}  // namespace detail

inline constexpr std::size_t kDefaultWorldLimit = 50000;

// Every nonzero-probability world exactly once, as sets of tuple alternatives;
// worlds reachable through different branches are merged. Sorted by leaf set.
inline std::vector<PossibleWorld> enumerate_worlds(const AndXorTree& tree,
                                                   std::size_t limit = kDefaultWorldLimit) {
  std::vector<PossibleWorld> out;
  if (tree.empty()) throw DataError("cannot enumerate an empty tree");
  auto atoms = detail::enumerate_atoms(tree, tree.root(), limit,
                                       [](const AndXorTree::Node& n) { return n.alt; });
  for (const auto& [ids, p] : atoms) {
    if (p <= kWorldEps) continue;
    PossibleWorld w;
    w.prob = p;
    for (int a : ids) w.leaves.push_back(tree.alternative(a));
    std::sort(w.leaves.begin(), w.leaves.end());
    out.push_back(std::move(w));
  }
  return out;
}

// Leaf-identity enumeration: worlds as sorted leaf-index sets. Distinct leaves
// carrying the same (key, value) stay distinct here.
inline std::vector<std::pair<std::vector<int>, double>> enumerate_leaf_worlds(
    const AndXorTree& tree, std::size_t limit = kDefaultWorldLimit) {
  if (tree.empty()) throw DataError("cannot enumerate an empty tree");
  auto atoms = detail::enumerate_atoms(tree, tree.root(), limit,
                                       [](const AndXorTree::Node& n) { return n.leaf_index; });
  std::vector<std::pair<std::vector<int>, double>> out;
  for (auto& [ids, p] : atoms)
    if (p > kWorldEps) out.emplace_back(ids, p);
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

inline double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline void sample_leaves(const AndXorTree& t, int id, std::mt19937_64& rng,
                          std::vector<int>& out_alts) {
  const auto& n = t.node(id);
  switch (n.kind) {
    case AndXorTree::NodeKind::leaf:
      out_alts.push_back(n.alt);
      break;
    case AndXorTree::NodeKind::and_node:
      for (int c : n.children) sample_leaves(t, c, rng, out_alts);
      break;
    case AndXorTree::NodeKind::or_node: {
      double u = next_unit(rng);
      double acc = 0.0;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        acc += n.probs[i];
        if (u < acc) {
          sample_leaves(t, n.children[i], rng, out_alts);
          return;
        }
      }
      break;  // residual: empty
    }
  }
}

}  // namespace detail

// One draw of the recursive process, as a sorted alternative-id set.
inline std::vector<int> sample_world_alts(const AndXorTree& tree, std::mt19937_64& rng) {
  std::vector<int> alts;
  detail::sample_leaves(tree, tree.root(), rng, alts);
  std::sort(alts.begin(), alts.end());
  alts.erase(std::unique(alts.begin(), alts.end()), alts.end());
  return alts;
}

// ---------------------------------------------------------------------------
// Exact probability of a given alternative set being the world

namespace detail {

inline void subtree_alts(const AndXorTree& t, int id, std::vector<std::vector<int>>& memo) {
  const auto& n = t.node(id);
  std::vector<int>& out = memo[id];
  if (n.kind == AndXorTree::NodeKind::leaf) {
    out = {n.alt};
    return;
  }
  std::set<int> s;
  for (int c : n.children) {
    subtree_alts(t, c, memo);
    s.insert(memo[c].begin(), memo[c].end());
  }
  out.assign(s.begin(), s.end());
}

inline std::vector<int> intersect_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline double exact_set_prob(const AndXorTree& t, int id, const std::vector<int>& target,
                             const std::vector<std::vector<int>>& alts_memo) {
  const auto& n = t.node(id);
  std::vector<int> local = intersect_sorted(target, alts_memo[id]);
  switch (n.kind) {
    case AndXorTree::NodeKind::leaf:
      return local.size() == 1 ? 1.0 : 0.0;
    case AndXorTree::NodeKind::and_node: {
      double p = 1.0;
      for (int c : n.children) {
        p *= exact_set_prob(t, c, local, alts_memo);
        if (p == 0.0) return 0.0;
      }
      return p;
    }
    case AndXorTree::NodeKind::or_node: {
      double sum = 0.0, total = 0.0;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        total += n.probs[i];
        if (n.probs[i] <= 0.0) continue;
        int c = n.children[i];
        // The chosen child must be able to produce all of `local`.
        if (intersect_sorted(local, alts_memo[c]).size() == local.size())
          sum += n.probs[i] * exact_set_prob(t, c, local, alts_memo);
      }
      if (local.empty()) sum += std::max(0.0, 1.0 - total);
      return sum;
    }
  }
  return 0.0;
}

}  // namespace detail

// Probability that the random world equals exactly this alternative set.
inline double world_probability(const AndXorTree& tree, const std::vector<TupleAlternative>& set) {
  std::vector<int> ids;
  for (const auto& a : set) {
    auto id = tree.alt_id(a);
    if (!id) return 0.0;
    ids.push_back(*id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<std::vector<int>> memo(tree.node_count());
  detail::subtree_alts(tree, tree.root(), memo);
  return detail::exact_set_prob(tree, tree.root(), ids, memo);
}

// Deterministic per seed: OR picks one child or nothing, AND unions children.
// The reported prob is the exact probability of the sampled set.
inline PossibleWorld sample_world(const AndXorTree& tree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto alts = sample_world_alts(tree, rng);
  PossibleWorld w;
  for (int a : alts) w.leaves.push_back(tree.alternative(a));
  std::sort(w.leaves.begin(), w.leaves.end());
  w.prob = world_probability(tree, w.leaves);
  return w;
}

}  // namespace consensus
