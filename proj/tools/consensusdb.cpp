// consensusdb: consensus (mean/median) answers for queries over
// probabilistic and/xor trees, plus a brute-force evaluation oracle.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "consensus/consensus.hpp"

namespace {

using namespace consensus;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t world_limit_default() {
  if (const char* env = std::getenv("CONSENSUSDB_WORLD_LIMIT")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
      throw UsageError("invalid CONSENSUSDB_WORLD_LIMIT value: " + std::string(env));
    return static_cast<std::size_t>(v);
  }
  return kDefaultWorldLimit;
}

bool ci_mode() { return std::getenv("CONSENSUSDB_CI") != nullptr; }

Dataset load_dataset(const std::string& path) { return parse_dataset(read_file(path), path); }

AndXorTree load_tree(const std::string& path) {
  Dataset d = load_dataset(path);
  if (!d.tree)
    throw DataError(path + " looks like a group matrix; this command needs a tree or BID file");
  if (d.format == DatasetFormat::tree_json) {
    auto report = validate(*d.tree);
    if (!report.ok()) {
      std::string msg = "tree violates constraints:";
      for (const auto& e : report.entries)
        msg += "\n  [" + e.kind + "] " + (e.path.empty() ? "(root)" : e.path) + ": " + e.message;
      throw DataError(msg);
    }
  }
  return *std::move(d.tree);
}

GroupMatrix load_groups(const std::string& path) {
  Dataset d = load_dataset(path);
  if (d.groups) return *std::move(d.groups);
  return group_matrix_from_tree(load_tree(path));
}

void emit(const ordered_json& answer, const ordered_json& expected_distance,
          const std::string& method, ordered_json diagnostics = ordered_json::object()) {
  ordered_json out;
  out["answer"] = answer;
  out["expected_distance"] = expected_distance;
  out["method"] = method;
  out["diagnostics"] = std::move(diagnostics);
  std::cout << out.dump() << "\n";
}

ordered_json leaves_to_json(const std::vector<TupleAlternative>& leaves) {
  ordered_json arr = ordered_json::array();
  for (const auto& a : leaves) {
    ordered_json j;
    j["key"] = a.key;
    j["value"] = value_to_json(a.value);
    arr.push_back(std::move(j));
  }
  return arr;
}

SetMetric parse_set_metric(const std::string& s) {
  if (s == "symdiff") return SetMetric::symdiff;
  if (s == "jaccard") return SetMetric::jaccard;
  throw UsageError("unknown set metric: " + s);
}

TopKMetric parse_topk_metric(const std::string& s) {
  if (s == "symdiff") return TopKMetric::symdiff;
  if (s == "intersection") return TopKMetric::intersection;
  if (s == "footrule") return TopKMetric::footrule;
  if (s == "kendall") return TopKMetric::kendall;
  throw UsageError("unknown top-k metric: " + s);
}

void require_seed_in_ci(bool seed_given) {
  if (ci_mode() && !seed_given)
    throw UsageError("randomized command requires --seed when CONSENSUSDB_CI is set");
}

// --- subcommand bodies ------------------------------------------------------

void run_validate(const std::string& file, int& exit_code) {
  Dataset d = load_dataset(file);
  if (!d.tree) throw DataError(file + " is a group matrix; validate needs a tree or BID file");
  auto report = validate(*d.tree);
  ordered_json violations = ordered_json::array();
  for (const auto& e : report.entries) {
    ordered_json v;
    v["path"] = e.path.empty() ? "(root)" : e.path;
    v["kind"] = e.kind;
    v["message"] = e.message;
    violations.push_back(std::move(v));
  }
  ordered_json answer;
  answer["valid"] = report.ok();
  answer["violations"] = std::move(violations);
  emit(answer, nullptr, "validate");
  exit_code = report.ok() ? 0 : 2;
}

void run_worlds(const std::string& file, std::size_t limit) {
  AndXorTree tree = load_tree(file);
  auto worlds = enumerate_worlds(tree, limit);
  ordered_json arr = ordered_json::array();
  for (const auto& w : worlds) {
    ordered_json j;
    j["leaves"] = leaves_to_json(w.leaves);
    j["prob"] = json_number(w.prob);
    arr.push_back(std::move(j));
  }
  ordered_json answer;
  answer["count"] = worlds.size();
  answer["worlds"] = std::move(arr);
  emit(answer, nullptr, "enumeration");
}

void run_marginals(const std::string& file) {
  AndXorTree tree = load_tree(file);
  ordered_json arr = ordered_json::array();
  for (const auto& alt : tree.alternatives()) {
    ordered_json j;
    j["key"] = alt.key;
    j["value"] = value_to_json(alt.value);
    j["marginal"] = json_number(marginal(tree, alt));
    arr.push_back(std::move(j));
  }
  std::sort(arr.begin(), arr.end(), [](const ordered_json& a, const ordered_json& b) {
    if (a["key"] != b["key"]) return a["key"] < b["key"];
    return a["value"].dump() < b["value"].dump();
  });
  emit(arr, nullptr, "genfunc");
}

void run_set_consensus(const std::string& file, const std::string& metric_s,
                       const std::string& kind_s) {
  AndXorTree tree = load_tree(file);
  SetMetric metric = parse_set_metric(metric_s);
  WorldAnswer ans;
  if (metric == SetMetric::symdiff)
    ans = kind_s == "mean" ? mean_world_symdiff(tree) : median_world_symdiff(tree);
  else
    ans = kind_s == "mean" ? mean_world_jaccard_independent(tree) : median_world_jaccard_bid(tree);
  ordered_json answer;
  answer["leaves"] = leaves_to_json(ans.leaves);
  answer["kind"] = kind_s;
  answer["metric"] = metric_s;
  ordered_json diag = ordered_json::object();
  if (!ans.diagnostic.empty()) {
    diag["warnings"] = ordered_json::array({ans.diagnostic});
    std::cerr << ans.diagnostic << "\n";
  }
  emit(answer, json_number(ans.expected_distance), "analytic", std::move(diag));
}

void run_topk(const std::string& file, int k, const std::string& metric_s,
              const std::string& kind_s, const std::string& approx, int trials,
              std::uint64_t seed, bool seed_given, std::size_t limit) {
  TopKMetric metric = parse_topk_metric(metric_s);
  if (!approx.empty() && (kind_s != "mean" || metric != TopKMetric::intersection))
    throw UsageError("--approx applies to the mean intersection metric only");
  AndXorTree tree = load_tree(file);
  TopKAnswer ans;
  if (kind_s == "median") {
    if (metric != TopKMetric::symdiff)
      throw UsageError("median top-k answers are supported for --metric symdiff only");
    ans = median_topk_symdiff(tree, k);
  } else {
    switch (metric) {
      case TopKMetric::symdiff:
        ans = mean_topk_symdiff(tree, k);
        break;
      case TopKMetric::intersection:
        ans = approx == "upsilon-h" ? approx_topk_intersection_upsilonH(tree, k)
                                    : mean_topk_intersection(tree, k);
        break;
      case TopKMetric::footrule:
        ans = mean_topk_footrule(tree, k);
        break;
      case TopKMetric::kendall: {
        require_seed_in_ci(seed_given);
        KendallOptions opts;
        opts.trials = trials;
        opts.seed = seed;
        opts.world_threshold = std::min<std::size_t>(limit, 5000);
        ans = approx_topk_kendall(tree, k, opts);
        break;
      }
    }
  }
  ordered_json diag = ordered_json::object();
  if (ans.short_answer) {
    diag["short"] = true;
    std::cerr << "warning: no possible world has " << k << " tuples; returning "
              << ans.list.items.size() << "\n";
  }
  emit(ordered_json(ans.list.items), json_number(ans.expected_distance), ans.method,
       std::move(diag));
}

void run_groupby(const std::string& file, const std::string& kind_s) {
  GroupMatrix m = load_groups(file);
  ordered_json answer;
  answer["groups"] = m.groups;
  if (kind_s == "mean") {
    auto r = mean_counts(m);
    ordered_json counts = ordered_json::array();
    for (double x : r) counts.push_back(json_number(x));
    answer["counts"] = std::move(counts);
    emit(answer, json_number(expected_sq_distance(m, r)), "closed-form");
  } else {
    auto med = median_counts(m);
    answer["counts"] = med.counts;
    emit(answer, json_number(med.expected_distance), "min-cost-flow");
  }
}

void run_cluster(const std::string& file, int trials, std::uint64_t seed, bool seed_given) {
  require_seed_in_ci(seed_given);
  AndXorTree tree = load_tree(file);
  auto res = consensus_cluster(tree, trials, seed);
  ordered_json answer;
  answer["clusters"] = res.clustering.clusters;
  emit(answer, json_number(res.expected_cost), "pivot");
}

void run_eval(const std::string& file, const std::string& query, const std::string& metric_s,
              const std::string& answer_text, int k, std::size_t samples, std::uint64_t seed,
              bool seed_given, std::size_t limit) {
  ordered_json parsed;
  try {
    parsed = ordered_json::parse(answer_text);
  } catch (const ordered_json::parse_error& e) {
    throw DataError(std::string("--answer is not valid JSON: ") + e.what());
  }
  OracleOptions opts;
  opts.enum_threshold = limit;
  opts.mc_samples = samples;
  opts.seed = seed;
  OracleReport rep;

  if (query == "set") {
    AndXorTree tree = load_tree(file);
    if (!parsed.is_array()) throw DataError("set answer must be an array of {key,value} objects");
    std::vector<TupleAlternative> w;
    for (const auto& item : parsed) {
      if (!item.is_object() || !item.contains("key") || !item.contains("value"))
        throw DataError("set answer entries must be {key,value} objects");
      Value v = item["value"].is_number() ? Value(item["value"].get<double>())
                                          : Value(item["value"].get<std::string>());
      w.push_back({item["key"].get<std::string>(), std::move(v)});
    }
    rep = expected_set_distance(tree, w, parse_set_metric(metric_s), opts);
  } else if (query == "topk") {
    AndXorTree tree = load_tree(file);
    if (!parsed.is_array()) throw DataError("topk answer must be an array of keys");
    TopKList list;
    for (const auto& item : parsed) list.items.push_back(item.get<std::string>());
    list.k = k > 0 ? k : static_cast<int>(list.items.size());
    rep = expected_topk_distance(tree, list, parse_topk_metric(metric_s), opts);
  } else if (query == "groupby") {
    GroupMatrix m = load_groups(file);
    if (!parsed.is_array()) throw DataError("groupby answer must be an array of counts");
    std::vector<double> r;
    for (const auto& item : parsed) r.push_back(item.get<double>());
    rep = expected_groupby_distance(m, r, opts);
  } else if (query == "cluster") {
    AndXorTree tree = load_tree(file);
    if (!parsed.is_array()) throw DataError("cluster answer must be an array of key arrays");
    Clustering c;
    for (const auto& item : parsed) {
      std::vector<std::string> members;
      for (const auto& kkey : item) members.push_back(kkey.get<std::string>());
      c.clusters.push_back(std::move(members));
    }
    auto keys = tree.keys();
    std::set<std::string> covered;
    for (const auto& cl : c.clusters)
      for (const auto& kkey : cl)
        if (!covered.insert(kkey).second) throw DataError("key '" + kkey + "' repeats");
    for (const auto& kkey : keys)
      if (!covered.count(kkey)) throw DataError("cluster answer is missing key '" + kkey + "'");
    rep = expected_cluster_distance(tree, c, opts);
  } else {
    throw UsageError("unknown query kind: " + query);
  }
  if (rep.method == OracleMethod::montecarlo) require_seed_in_ci(seed_given);

  ordered_json diag;
  diag["sample_count"] = rep.sample_count;
  if (rep.method == OracleMethod::montecarlo) {
    diag["ci_halfwidth"] = json_number(rep.ci_halfwidth);
    diag["seed"] = seed;
  }
  emit(parsed, json_number(rep.value),
       rep.method == OracleMethod::enumeration ? "enumeration" : "montecarlo", std::move(diag));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus answers for queries over probabilistic and/xor trees"};
  app.require_subcommand(1);

  std::string file, metric, kind = "mean", approx, query, answer_text;
  int k = 1, trials = 20;
  std::uint64_t seed = 0;
  std::size_t limit = 0, samples = 100000;

  auto add_file = [&](CLI::App* cmd) {
    cmd->add_option("file", file, "dataset file")->required();
  };

  auto* c_validate = app.add_subcommand("validate", "check tree constraints");
  add_file(c_validate);

  auto* c_worlds = app.add_subcommand("worlds", "enumerate possible worlds");
  add_file(c_worlds);
  c_worlds->add_option("--limit", limit, "maximum number of worlds");

  auto* c_marginals = app.add_subcommand("marginals", "per-alternative membership probabilities");
  add_file(c_marginals);

  auto* c_set = app.add_subcommand("set-consensus", "mean/median world under a set metric");
  add_file(c_set);
  c_set->add_option("--metric", metric, "symdiff|jaccard")->required();
  c_set->add_option("--kind", kind, "mean|median")
      ->required()
      ->check(CLI::IsMember({"mean", "median"}));

  auto* c_topk = app.add_subcommand("topk", "mean/median Top-k answer");
  add_file(c_topk);
  c_topk->add_option("-k", k, "list length")->required();
  c_topk->add_option("--metric", metric, "symdiff|intersection|footrule|kendall")->required();
  c_topk->add_option("--kind", kind, "mean|median")
      ->required()
      ->check(CLI::IsMember({"mean", "median"}));
  c_topk->add_option("--approx", approx, "upsilon-h")->check(CLI::IsMember({"upsilon-h"}));
  c_topk->add_option("--trials", trials, "pivot trials (kendall)");
  auto* topk_seed = c_topk->add_option("--seed", seed, "random seed (kendall)");

  auto* c_groupby = app.add_subcommand("groupby", "mean/median group-by counts");
  add_file(c_groupby);
  c_groupby->add_option("--kind", kind, "mean|median")
      ->required()
      ->check(CLI::IsMember({"mean", "median"}));

  auto* c_cluster = app.add_subcommand("cluster", "consensus clustering");
  add_file(c_cluster);
  c_cluster->add_option("--trials", trials, "pivot trials");
  auto* cluster_seed = c_cluster->add_option("--seed", seed, "random seed");

  auto* c_eval = app.add_subcommand("eval", "expected distance of a given answer");
  add_file(c_eval);
  c_eval->add_option("--query", query, "set|topk|groupby|cluster")->required();
  c_eval->add_option("--metric", metric, "distance metric");
  c_eval->add_option("--answer", answer_text, "answer as JSON")->required();
  c_eval->add_option("-k", k, "list length (topk)");
  c_eval->add_option("--samples", samples, "Monte Carlo samples");
  auto* eval_seed = c_eval->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    std::size_t default_limit = world_limit_default();
    if (limit == 0) limit = default_limit;
    int exit_code = 0;
    if (c_validate->parsed()) {
      run_validate(file, exit_code);
    } else if (c_worlds->parsed()) {
      run_worlds(file, limit);
    } else if (c_marginals->parsed()) {
      run_marginals(file);
    } else if (c_set->parsed()) {
      run_set_consensus(file, metric, kind);
    } else if (c_topk->parsed()) {
      run_topk(file, k, metric, kind, approx, trials, seed, topk_seed->count() > 0, limit);
    } else if (c_groupby->parsed()) {
      run_groupby(file, kind);
    } else if (c_cluster->parsed()) {
      run_cluster(file, trials, seed, cluster_seed->count() > 0);
    } else if (c_eval->parsed()) {
      k = c_eval->count("-k") > 0 ? k : 0;
      run_eval(file, query, metric, answer_text, k, samples, seed, eval_seed->count() > 0, limit);
    }
    return exit_code;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const LimitError& e) {
    std::cerr << "limit exceeded: " << e.what() << "\n";
    return 3;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
