#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "consensus/genfunc.hpp"
#include "consensus/model.hpp"
#include "fixtures.hpp"
#include "testutil.hpp"

using namespace consensus;

namespace {

std::map<std::vector<TupleAlternative>, double> worlds_by_set(const AndXorTree& t,
                                                              std::size_t limit = 50000) {
  std::map<std::vector<TupleAlternative>, double> out;
  for (const auto& w : enumerate_worlds(t, limit)) out[w.leaves] = w.prob;
  return out;
}

}  // namespace

TEST_CASE("validate accepts the three-world fixture tree") {
  auto tree = fixtures::threeworlds_tree();
  REQUIRE(validate(tree).ok());
}

TEST_CASE("validate flags probability-constraint violations") {
  AndXorTree t;
  int a = t.add_leaf("t1", 1.0);
  int b = t.add_leaf("t2", 2.0);
  t.set_root(t.add_or({a, b}, {0.7, 0.5}));
  auto rep = validate(t);
  REQUIRE_FALSE(rep.ok());
  REQUIRE(rep.entries.size() == 1);
  CHECK(rep.entries[0].kind == "probability");
}

TEST_CASE("validate flags key-constraint violations with the node path") {
  AndXorTree t;
  int a = t.add_leaf("t1", 1.0);
  int b = t.add_leaf("t1", 2.0);
  t.set_root(t.add_and({a, b}));
  auto rep = validate(t);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.entries[0].kind == "key");
  CHECK(rep.entries[0].path == "");
  CHECK(rep.entries[0].message.find("t1") != std::string::npos);

  // Same key under an OR is the intended mutual-exclusion encoding.
  AndXorTree ok;
  int c = ok.add_leaf("t1", 1.0);
  int d = ok.add_leaf("t1", 2.0);
  ok.set_root(ok.add_or({c, d}, {0.5, 0.5}));
  CHECK(validate(ok).ok());
}

TEST_CASE("validate flags negative probabilities and empty keys") {
  AndXorTree t;
  int a = t.add_leaf("", 1.0);
  t.set_root(t.add_or({a}, {-0.25}));
  auto rep = validate(t);
  std::set<std::string> kinds;
  for (const auto& e : rep.entries) kinds.insert(e.kind);
  CHECK(kinds.count("probability"));
  CHECK(kinds.count("structure"));
}

TEST_CASE("from_bid builds one OR block per key") {
  auto t = from_bid({{"t1", std::string("a"), 0.4}, {"t1", std::string("b"), 0.6}});
  REQUIRE(validate(t).ok());
  const auto& root = t.node(t.root());
  REQUIRE(root.kind == AndXorTree::NodeKind::and_node);
  REQUIRE(root.children.size() == 1);
  CHECK(t.node(root.children[0]).kind == AndXorTree::NodeKind::or_node);
  auto worlds = worlds_by_set(t);
  REQUIRE(worlds.size() == 2);
  CHECK(worlds.at({{"t1", std::string("a")}}) == Catch::Approx(0.4));
  CHECK(worlds.at({{"t1", std::string("b")}}) == Catch::Approx(0.6));
}

TEST_CASE("from_bid rejects bad rows") {
  CHECK_THROWS_AS(from_bid({{"t1", 1.0, 0.4}, {"t1", 1.0, 0.3}}), DataError);
  CHECK_THROWS_AS(from_bid({{"t1", 1.0, 0.7}, {"t1", 2.0, 0.6}}), DataError);
  CHECK_THROWS_AS(from_bid({{"t1", 1.0, 1.5}}), DataError);
}

TEST_CASE("from_bid on empty input yields the single empty world") {
  auto t = from_bid({});
  REQUIRE(validate(t).ok());
  auto worlds = enumerate_worlds(t);
  REQUIRE(worlds.size() == 1);
  CHECK(worlds[0].leaves.empty());
  CHECK(worlds[0].prob == Catch::Approx(1.0));
}

TEST_CASE("enumerate_worlds reproduces the fixture worlds") {
  auto tree = fixtures::threeworlds_tree();
  auto worlds = worlds_by_set(tree);
  REQUIRE(worlds.size() == 3);
  std::vector<TupleAlternative> pw1{{"t1", 1.0}, {"t2", 5.0}, {"t3", 6.0}};
  std::vector<TupleAlternative> pw2{{"t1", 7.0}, {"t3", 9.0}, {"t4", 0.0}};
  std::vector<TupleAlternative> pw3{{"t3", 8.0}, {"t4", 4.0}, {"t5", 3.0}};
  CHECK(worlds.at(pw1) == Catch::Approx(0.3));
  CHECK(worlds.at(pw2) == Catch::Approx(0.3));
  CHECK(worlds.at(pw3) == Catch::Approx(0.4));
}

TEST_CASE("enumerate_worlds adds the OR residual as the empty world") {
  AndXorTree t;
  int a = t.add_leaf("t1", 1.0);
  t.set_root(t.add_or({a}, {0.9}));
  auto worlds = worlds_by_set(t);
  REQUIRE(worlds.size() == 2);
  CHECK(worlds.at({}) == Catch::Approx(0.1));
  CHECK(worlds.at({{"t1", 1.0}}) == Catch::Approx(0.9));
}

TEST_CASE("three independent coin tuples give eight equiprobable worlds") {
  auto t = from_bid({{"t1", 1.0, 0.5}, {"t2", 2.0, 0.5}, {"t3", 3.0, 0.5}});
  auto worlds = enumerate_worlds(t);
  REQUIRE(worlds.size() == 8);
  for (const auto& w : worlds) CHECK(w.prob == Catch::Approx(0.125));
}

TEST_CASE("enumerate_worlds merges duplicate leaf sets across branches") {
  AndXorTree t;
  int a = t.add_leaf("t1", 1.0);
  int b = t.add_leaf("t1", 1.0);
  t.set_root(t.add_or({a, b}, {0.5, 0.5}));
  auto worlds = enumerate_worlds(t);
  REQUIRE(worlds.size() == 1);
  CHECK(worlds[0].prob == Catch::Approx(1.0));
  // Leaf-level enumeration keeps the branches apart.
  CHECK(enumerate_leaf_worlds(t).size() == 2);
}

TEST_CASE("enumerate_worlds enforces the limit with the count reached") {
  auto t = from_bid({{"t1", 1.0, 0.5}, {"t2", 2.0, 0.5}, {"t3", 3.0, 0.5}});
  try {
    enumerate_worlds(t, 4);
    FAIL("expected LimitError");
  } catch (const LimitError& e) {
    CHECK(std::string(e.what()).find("too many worlds") != std::string::npos);
  }
}

TEST_CASE("world probabilities sum to one on random trees") {
  testutil::Rng rng(7);
  for (int i = 0; i < 60; ++i) {
    testutil::TreeGenOptions opts;
    opts.max_leaves = 10;
    auto tree = testutil::gen_tree(rng, opts);
    REQUIRE(validate(tree).ok());
    double sum = 0.0;
    for (const auto& w : enumerate_worlds(tree)) {
      sum += w.prob;
      std::set<std::string> keys;
      for (const auto& alt : w.leaves) REQUIRE(keys.insert(alt.key).second);
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("marginal equals the enumeration mass of worlds containing the alternative") {
  testutil::Rng rng(11);
  for (int i = 0; i < 40; ++i) {
    testutil::TreeGenOptions opts;
    opts.max_leaves = 9;
    auto tree = testutil::gen_tree(rng, opts);
    auto worlds = enumerate_worlds(tree);
    for (const auto& alt : tree.alternatives()) {
      double expect = 0.0;
      for (const auto& w : worlds)
        if (std::binary_search(w.leaves.begin(), w.leaves.end(), alt)) expect += w.prob;
      CHECK(marginal(tree, alt) == Catch::Approx(expect).margin(1e-9));
    }
  }
}

TEST_CASE("marginals of the fixture alternatives match the worlds") {
  auto tree = fixtures::threeworlds_tree();
  CHECK(marginal(tree, {"t3", 6.0}) == Catch::Approx(0.3));
  CHECK(marginal(tree, {"t4", 4.0}) == Catch::Approx(0.4));
  CHECK_THROWS_AS(marginal(tree, {"t9", 1.0}), DataError);
}

TEST_CASE("a leaf under the root AND is always present") {
  AndXorTree t;
  int a = t.add_leaf("t1", 1.0);
  int b = t.add_leaf("t2", 2.0);
  int orn = t.add_or({b}, {0.5});
  t.set_root(t.add_and({a, orn}));
  CHECK(marginal(t, {"t1", 1.0}) == Catch::Approx(1.0));
}

TEST_CASE("sample_world is deterministic per seed and matches enumeration empirically") {
  auto tree = fixtures::threeworlds_tree();
  auto w1 = sample_world(tree, 42);
  auto w2 = sample_world(tree, 42);
  CHECK(w1.leaves == w2.leaves);
  CHECK(w1.prob == Catch::Approx(w2.prob));

  std::mt19937_64 rng(123);
  std::map<std::vector<int>, int> freq;
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) ++freq[sample_world_alts(tree, rng)];
  REQUIRE(freq.size() == 3);
  auto worlds = enumerate_worlds(tree);
  for (const auto& w : worlds) {
    std::vector<int> ids;
    for (const auto& a : w.leaves) ids.push_back(*tree.alt_id(a));
    std::sort(ids.begin(), ids.end());
    double empirical = static_cast<double>(freq[ids]) / samples;
    CHECK(std::abs(empirical - w.prob) < 0.02);
  }
}

TEST_CASE("sample_world on a deterministic tree returns the unique world") {
  AndXorTree t;
  int a = t.add_leaf("t1", 1.0);
  t.set_root(t.add_or({a}, {1.0}));
  auto w = sample_world(t, 5);
  REQUIRE(w.leaves.size() == 1);
  CHECK(w.prob == Catch::Approx(1.0));
}

TEST_CASE("sampled marginals converge to marginal()") {
  testutil::Rng rng(17);
  testutil::TreeGenOptions opts;
  opts.max_leaves = 7;
  auto tree = testutil::gen_tree(rng, opts);
  std::mt19937_64 sampler(99);
  std::map<int, int> hits;
  const int samples = 50000;
  for (int i = 0; i < samples; ++i)
    for (int a : sample_world_alts(tree, sampler)) ++hits[a];
  for (int a = 0; a < tree.alternative_count(); ++a) {
    double expect = marginal(tree, tree.alternative(a));
    double got = static_cast<double>(hits[a]) / samples;
    CHECK(std::abs(got - expect) < 0.02);
  }
}

TEST_CASE("world_probability sums branches reaching the same alternative set") {
  AndXorTree t;
  int a = t.add_leaf("t1", 1.0);
  int b = t.add_leaf("t1", 1.0);
  t.set_root(t.add_or({a, b}, {0.5, 0.3}));
  CHECK(world_probability(t, {{"t1", 1.0}}) == Catch::Approx(0.8));
  CHECK(world_probability(t, {}) == Catch::Approx(0.2));
}

TEST_CASE("world_probability matches enumeration") {
  testutil::Rng rng(23);
  for (int i = 0; i < 30; ++i) {
    testutil::TreeGenOptions opts;
    opts.max_leaves = 8;
    auto tree = testutil::gen_tree(rng, opts);
    auto worlds = enumerate_worlds(tree);
    for (const auto& w : worlds)
      CHECK(world_probability(tree, w.leaves) == Catch::Approx(w.prob).margin(1e-9));
    // A set that is not a world has probability zero.
    std::vector<TupleAlternative> all = tree.alternatives();
    std::sort(all.begin(), all.end());
    bool is_world = false;
    for (const auto& w : worlds) is_world |= w.leaves == all;
    if (!is_world) CHECK(world_probability(tree, all) <= 1e-12);
  }
}
