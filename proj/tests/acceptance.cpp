// Acceptance suite: runs each criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.
//
// Usage: acceptance [path-to-consensusdb-cli]

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "consensus/consensus.hpp"
#include "fixtures.hpp"
#include "testutil.hpp"

using namespace consensus;

namespace {

std::string g_cli_path;
int g_failures = 0;

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      detail = msg;
    }
  }
};

void run_criterion(int number, const std::string& title, double time_limit_s,
                   const std::function<void(Check&)>& body) {
  Check check;
  auto start = std::chrono::steady_clock::now();
  try {
    body(check);
  } catch (const std::exception& e) {
    check.require(false, std::string("exception: ") + e.what());
  }
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (check.ok && elapsed >= time_limit_s)
    check.require(false, "runtime " + std::to_string(elapsed) + "s exceeds " +
                             std::to_string(time_limit_s) + "s");
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s criterion %d (%6.2fs): %s%s%s",
                check.ok ? "PASS" : "FAIL", number, elapsed, title.c_str(),
                check.ok ? "" : " -- ", check.ok ? "" : check.detail.c_str());
  std::cout << buf << std::endl;
  if (!check.ok) ++g_failures;
}

// Enumeration-side Pr(r(t) <= k) for every key, independent of genfunc.
std::map<std::string, double> rank_mass_by_enumeration(const std::vector<PossibleWorld>& worlds,
                                                       const std::vector<std::string>& keys,
                                                       int k) {
  std::map<std::string, double> p;
  for (const auto& key : keys) p[key] = 0.0;
  for (const auto& w : worlds) {
    auto items = topk_of_world(w.leaves, k);
    for (const auto& t : items) p[t] += w.prob;
  }
  return p;
}

std::pair<int, std::string> run_command(const std::string& cmd) {
  std::array<char, 4096> buf;
  std::string out;
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) return {-1, ""};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  return {WEXITSTATUS(pclose(pipe)), out};
}

// --- criteria ---------------------------------------------------------------

void criterion1(Check& c) {
  auto tree = parse_tree(fixtures::kThreeWorldsJson);
  auto worlds = enumerate_worlds(tree);
  c.require(worlds.size() == 3, "expected 3 worlds, got " + std::to_string(worlds.size()));
  std::map<std::vector<TupleAlternative>, double> by_set;
  for (const auto& w : worlds) by_set[w.leaves] = w.prob;
  const std::vector<std::pair<std::vector<TupleAlternative>, double>> expect = {
      {{{"t1", 1.0}, {"t2", 5.0}, {"t3", 6.0}}, 0.3},
      {{{"t1", 7.0}, {"t3", 9.0}, {"t4", 0.0}}, 0.3},
      {{{"t3", 8.0}, {"t4", 4.0}, {"t5", 3.0}}, 0.4},
  };
  for (const auto& [set, prob] : expect) {
    auto it = by_set.find(set);
    c.require(it != by_set.end(), "missing an expected world");
    if (it != by_set.end())
      c.require(std::abs(it->second - prob) <= 1e-12, "world probability off");
  }
  auto dist = alt_rank_distribution(tree, {"t3", 6.0});
  c.require(std::abs(dist[0] - 0.3) <= 1e-12,
            "Pr(r((t3,6))=1) = " + std::to_string(dist[0]) + ", want 0.3");
}

void criterion2(Check& c) {
  testutil::Rng rng(1002);
  for (int iter = 0; iter < 200; ++iter) {
    testutil::TreeGenOptions opts;
    opts.min_leaves = 6;
    opts.max_leaves = 12;
    auto tree = testutil::gen_tree(rng, opts);
    int vars = 1 + rng.below(3);
    auto assign =
        assign_by(tree, vars, [&](const TupleAlternative&) { return rng.below(vars + 1); });
    int n = tree.leaf_count();
    Polynomial p = evaluate(tree, assign, {n, vars > 1 ? n : 0, vars > 2 ? n : 0});
    std::map<std::array<int, 3>, double> expect;
    for (const auto& [leafset, prob] : enumerate_leaf_worlds(tree)) {
      std::array<int, 3> e{0, 0, 0};
      for (int leaf : leafset) {
        int v = assign.var_of_leaf[leaf];
        if (v > 0) ++e[v - 1];
      }
      expect[e] += prob;
    }
    for (int e0 = 0; e0 <= n; ++e0)
      for (int e1 = 0; e1 <= (vars > 1 ? n : 0); ++e1)
        for (int e2 = 0; e2 <= (vars > 2 ? n : 0); ++e2) {
          auto it = expect.find({e0, e1, e2});
          double want = it == expect.end() ? 0.0 : it->second;
          if (std::abs(p.coeff(e0, e1, e2) - want) > 1e-9) {
            c.require(false, "coefficient mismatch at tree " + std::to_string(iter));
            return;
          }
        }
  }
}

void criterion3(Check& c) {
  testutil::Rng rng(1003);
  for (int iter = 0; iter < 100; ++iter) {
    testutil::TreeGenOptions opts;
    opts.min_leaves = 4;
    opts.max_leaves = 10;
    auto tree = testutil::gen_tree(rng, opts);
    auto mw = testutil::worlds_as_masks(tree);
    const int n = tree.alternative_count();
    double best = 1e300;
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask)
      best = std::min(best, testutil::expected_symdiff_mask(mw, mask));
    auto ans = mean_world_symdiff(tree);
    std::uint64_t got = 0;
    for (const auto& a : ans.leaves) got |= 1ULL << *tree.alt_id(a);
    if (std::abs(testutil::expected_symdiff_mask(mw, got) - best) > 1e-9 ||
        std::abs(ans.expected_distance - best) > 1e-9) {
      c.require(false, "mean_world_symdiff missed the subset optimum at " + std::to_string(iter));
      return;
    }
    // expected_jaccard against enumeration on random answers.
    for (int probe = 0; probe < 3; ++probe) {
      std::uint64_t mask = rng.eng() & ((1ULL << n) - 1);
      std::vector<TupleAlternative> w;
      for (int i = 0; i < n; ++i)
        if (mask & (1ULL << i)) w.push_back(tree.alternative(i));
      if (std::abs(expected_jaccard(tree, w) - testutil::expected_jaccard_mask(mw, mask)) > 1e-9) {
        c.require(false, "expected_jaccard mismatch at " + std::to_string(iter));
        return;
      }
    }
  }
  for (int iter = 0; iter < 100; ++iter) {
    int n = 1 + rng.below(10);
    auto tree = testutil::gen_independent(rng, n);
    auto mw = testutil::worlds_as_masks(tree);
    double best = 1e300;
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask)
      best = std::min(best, testutil::expected_jaccard_mask(mw, mask));
    auto ans = mean_world_jaccard_independent(tree);
    std::uint64_t got = 0;
    for (const auto& a : ans.leaves) got |= 1ULL << *tree.alt_id(a);
    if (std::abs(testutil::expected_jaccard_mask(mw, got) - best) > 1e-9) {
      c.require(false, "jaccard mean missed the subset optimum at " + std::to_string(iter));
      return;
    }
  }
}

// Shares instances between criteria 4 and 6a.
struct TopkInstance {
  AndXorTree tree;
  int k;
};

std::vector<TopkInstance> topk_instances() {
  std::vector<TopkInstance> out;
  testutil::Rng rng(1004);
  while (out.size() < 50) {
    testutil::TreeGenOptions opts;
    opts.min_leaves = 4;
    opts.max_leaves = 7;
    auto tree = testutil::gen_tree(rng, opts);
    int n = static_cast<int>(tree.keys().size());
    int k = 1 + rng.below(3);
    if (n < k) continue;
    out.push_back({std::move(tree), k});
  }
  return out;
}

void criterion4(Check& c) {
  auto instances = topk_instances();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& [tree, k] = instances[i];
    for (auto metric :
         {TopKMetric::symdiff, TopKMetric::intersection, TopKMetric::footrule}) {
      auto best = exhaustive_topk_optimum(tree, k, metric, AnswerKind::mean);
      TopKAnswer ans;
      switch (metric) {
        case TopKMetric::symdiff:
          ans = mean_topk_symdiff(tree, k);
          break;
        case TopKMetric::intersection:
          ans = mean_topk_intersection(tree, k);
          break;
        default:
          ans = mean_topk_footrule(tree, k);
      }
      double got = expected_topk_distance(tree, ans.list, metric).value;
      if (std::abs(got - best.value) > 1e-9) {
        c.require(false, "solver missed the optimum (instance " + std::to_string(i) + ", metric " +
                             std::to_string(static_cast<int>(metric)) + ": " +
                             std::to_string(got) + " vs " + std::to_string(best.value) + ")");
        return;
      }
    }
  }
}

void criterion5(Check& c) {
  testutil::Rng rng(1005);
  for (int iter = 0; iter < 50; ++iter) {
    testutil::TreeGenOptions opts;
    opts.min_leaves = 6;
    opts.max_leaves = 12;
    auto tree = testutil::gen_tree(rng, opts);
    int k = 1 + rng.below(3);
    auto worlds = enumerate_worlds(tree);
    auto keys = tree.keys();
    auto p_enum = rank_mass_by_enumeration(worlds, keys, k);
    double best = -1.0;
    std::set<std::vector<std::string>> world_lists;
    for (const auto& w : worlds) {
      auto items = topk_of_world(w.leaves, k);
      world_lists.insert(items);
      double v = 0.0;
      for (const auto& t : items) v += p_enum[t];
      best = std::max(best, v);
    }
    auto ans = median_topk_symdiff(tree, k);
    if (!world_lists.count(ans.list.items)) {
      c.require(false, "median answer is not a world top-k at " + std::to_string(iter));
      return;
    }
    double got = 0.0;
    for (const auto& t : ans.list.items) got += p_enum[t];
    if (got < best - 1e-9) {
      c.require(false, "median answer is not maximal at " + std::to_string(iter) + " (" +
                           std::to_string(got) + " < " + std::to_string(best) + ")");
      return;
    }
  }
}

void criterion6(Check& c) {
  // (a) The H_k bound on every criterion-4 instance.
  auto instances = topk_instances();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& [tree, k] = instances[i];
    double hk = 0.0;
    for (int j = 1; j <= k; ++j) hk += 1.0 / j;
    double a_star = intersection_objective(tree, mean_topk_intersection(tree, k).list);
    double a_h = intersection_objective(tree, approx_topk_intersection_upsilonH(tree, k).list);
    if (a_h < a_star / hk - 1e-9) {
      c.require(false, "H_k bound violated at instance " + std::to_string(i));
      return;
    }
  }
  // (b) Kendall best-of-20 within twice the exhaustive optimum on
  // instances with at most 10 worlds.
  testutil::Rng rng(1006);
  int done = 0;
  while (done < 25) {
    testutil::TreeGenOptions opts;
    opts.max_leaves = 7;
    auto tree = testutil::gen_tree(rng, opts);
    auto keys = tree.keys();
    if (keys.empty()) continue;
    auto worlds = enumerate_worlds(tree);
    if (worlds.size() > 10) continue;
    int k = 1 + rng.below(std::min<int>(3, static_cast<int>(keys.size())));
    ++done;
    auto best = exhaustive_topk_optimum(tree, k, TopKMetric::kendall, AnswerKind::mean);
    KendallOptions kopts;
    kopts.trials = 20;
    kopts.seed = 20090601;
    auto ans = approx_topk_kendall(tree, k, kopts);
    double got = expected_topk_distance(tree, ans.list, TopKMetric::kendall).value;
    if (got > 2.0 * best.value + 1e-9) {
      c.require(false, "kendall answer exceeded twice the optimum (" + std::to_string(got) +
                           " vs " + std::to_string(best.value) + ")");
      return;
    }
  }
}

void criterion7(Check& c) {
  testutil::Rng rng(1007);
  for (int iter = 0; iter < 100; ++iter) {
    int n = 1 + rng.below(10), m = 1 + rng.below(4);
    auto gm = testutil::gen_group_matrix(rng, n, m);
    auto mean = mean_counts(gm);
    auto med = median_counts(gm);
    for (int j = 0; j < m; ++j) {
      double diff = med.counts[j] - mean[j];
      if (diff < -1.0 - 1e-9 || diff > 1.0 + 1e-9) {
        c.require(false, "median entry outside the floor/ceil interval at " +
                             std::to_string(iter));
        return;
      }
    }
    auto dist = detail::count_vector_distribution(gm, 1u << 21);
    double best_sq = 1e300;
    for (const auto& [vec, _] : dist) {
      double d = 0.0;
      for (int j = 0; j < m; ++j) d += (vec[j] - mean[j]) * (vec[j] - mean[j]);
      best_sq = std::min(best_sq, d);
    }
    double got_sq = 0.0;
    for (int j = 0; j < m; ++j) got_sq += (med.counts[j] - mean[j]) * (med.counts[j] - mean[j]);
    if (std::abs(got_sq - best_sq) > 1e-9) {
      c.require(false, "median is not the nearest realizable vector at " + std::to_string(iter));
      return;
    }
    // 4-approximation against the exhaustive expected-distance median.
    double opt = 1e300;
    for (const auto& [vec, _] : dist) {
      double e = 0.0;
      for (const auto& [counts, prob] : dist) {
        double d = 0.0;
        for (int j = 0; j < m; ++j) d += (vec[j] - counts[j]) * (vec[j] - counts[j]);
        e += prob * d;
      }
      opt = std::min(opt, e);
    }
    std::vector<double> rd(med.counts.begin(), med.counts.end());
    double got_e = 0.0;
    for (const auto& [counts, prob] : dist) {
      double d = 0.0;
      for (int j = 0; j < m; ++j) d += (rd[j] - counts[j]) * (rd[j] - counts[j]);
      got_e += prob * d;
    }
    if (got_e > 4.0 * opt + 1e-9) {
      c.require(false, "4-approximation violated at " + std::to_string(iter));
      return;
    }
  }
}

void criterion8(Check& c) {
  testutil::Rng rng(1008);
  for (int iter = 0; iter < 50; ++iter) {
    testutil::TreeGenOptions opts;
    opts.min_leaves = 4;
    opts.max_leaves = 8;
    opts.numeric_scores = false;
    auto tree = testutil::gen_tree(rng, opts);
    auto keys = tree.keys();
    const int n = static_cast<int>(keys.size());
    if (n > 8) continue;
    auto worlds = enumerate_worlds(tree);
    // Enumeration-side weights.
    std::vector<std::vector<double>> w_enum(n, std::vector<double>(n, 0.0));
    for (const auto& world : worlds) {
      auto cl = clustering_of_world(world.leaves, keys);
      std::map<std::string, int> id;
      for (std::size_t ci = 0; ci < cl.clusters.size(); ++ci)
        for (const auto& kk : cl.clusters[ci]) id[kk] = static_cast<int>(ci);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (id[keys[i]] == id[keys[j]]) {
            w_enum[i][j] += world.prob;
            w_enum[j][i] += world.prob;
          }
    }
    auto pw = pairwise_weights(tree);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::abs(pw.w[i][j] - w_enum[i][j]) > 1e-9) {
          c.require(false, "pairwise weight mismatch at " + std::to_string(iter));
          return;
        }
    // Objective identity on a random clustering.
    Clustering probe;
    int buckets = 1 + rng.below(std::max(1, n));
    probe.clusters.assign(buckets, {});
    for (const auto& kk : keys) probe.clusters[rng.below(buckets)].push_back(kk);
    probe.clusters.erase(std::remove_if(probe.clusters.begin(), probe.clusters.end(),
                                        [](const auto& v) { return v.empty(); }),
                         probe.clusters.end());
    if (n > 0) {
      double linear = clustering_cost(pw, probe);
      double direct = 0.0;
      for (const auto& world : worlds)
        direct += world.prob * clustering_disagreement(probe, clustering_of_world(world.leaves, keys), keys);
      if (std::abs(linear - direct) > 1e-9) {
        c.require(false, "objective identity failed at " + std::to_string(iter));
        return;
      }
    }
    auto best = exhaustive_cluster_optimum(tree);
    auto got = consensus_cluster(tree, 20, 424242);
    if (got.expected_cost > 2.0 * best.value + 1e-9) {
      c.require(false, "pivot cost exceeded twice the optimum at " + std::to_string(iter));
      return;
    }
  }
}

void criterion9(Check& c) {
  if (g_cli_path.empty()) {
    c.require(false, "no CLI path given (pass the consensusdb binary as argv[1])");
    return;
  }
  std::string data = std::string(TEST_DATA_DIR);
  std::vector<std::string> cmds = {
      g_cli_path + " worlds " + data + "/threeworlds.json",
      g_cli_path + " marginals " + data + "/bid4.csv",
      g_cli_path + " topk " + data + "/threeworlds.json -k 2 --metric symdiff --kind mean",
      g_cli_path + " topk " + data + "/threeworlds.json -k 2 --metric kendall --kind mean --trials 8 --seed 5",
      g_cli_path + " topk " + data + "/bid4.csv -k 3 --metric footrule --kind mean",
      g_cli_path + " topk " + data + "/bid4.csv -k 2 --metric symdiff --kind median",
      g_cli_path + " set-consensus " + data + "/threeworlds.json --metric symdiff --kind mean",
      g_cli_path + " groupby " + data + "/groups.csv --kind median",
      g_cli_path + " cluster " + data + "/labels.json --trials 12 --seed 9",
      g_cli_path + " eval " + data + "/threeworlds.json --query topk --metric intersection --answer '[\"t3\",\"t4\"]' -k 2",
      g_cli_path + " eval " + data + "/labels.json --query cluster --answer '[[\"a\",\"b\"],[\"c\"]]' --seed 1",
  };
  for (const auto& cmd : cmds) {
    auto first = run_command(cmd);
    auto second = run_command(cmd);
    if (first.first != 0 || second.first != 0) {
      c.require(false, "command failed: " + cmd);
      return;
    }
    if (first.second != second.second || first.second.empty()) {
      c.require(false, "output differs between runs: " + cmd);
      return;
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli_path = argv[1];
  std::cout << "consensus acceptance suite" << std::endl;
  run_criterion(1, "reference fixture fidelity (worlds, probabilities, rank coefficient)", 1.0, criterion1);
  run_criterion(2, "generating-function coefficients vs enumeration, 200 random trees", 30.0,
                criterion2);
  run_criterion(3, "set consensus optimality and Jaccard expectations", 60.0, criterion3);
  run_criterion(4, "Top-k mean solvers equal exhaustive argmin (3 metrics)", 120.0, criterion4);
  run_criterion(5, "median Top-k DP maximal among world answers", 60.0, criterion5);
  run_criterion(6, "approximation bounds (H_k ranking, Kendall best-of-20)", 120.0, criterion6);
  run_criterion(7, "aggregate median: nearest realizable vector, floor/ceil, 4-approx", 60.0,
                criterion7);
  run_criterion(8, "clustering weights, objective identity, pivot 2x bound", 120.0, criterion8);
  run_criterion(9, "CLI determinism: byte-identical JSON across runs", 120.0, criterion9);
  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
