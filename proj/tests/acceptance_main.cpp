/**
 * Acceptance suite. Each criterion runs the deterministic mock world at its
 * pinned tolerance and prints one PASS/FAIL line; the exit code is the number
 * of failed criteria.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "zsicl/backends.hpp"
#include "zsicl/baselines.hpp"
#include "zsicl/corpus.hpp"
#include "zsicl/demostore.hpp"
#include "zsicl/engine.hpp"
#include "zsicl/harness.hpp"
#include "zsicl/inference.hpp"
#include "zsicl/prompt.hpp"

using namespace zsicl;

namespace {

struct Checker {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
  void expect_near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s: got %.12g, want %.12g (tol %g)", what.c_str(),
                    got, want, tol);
      expect(false, buf);
    }
  }
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// ---------------------------------------------------------------------------
// Shared mock scenarios
// ---------------------------------------------------------------------------

// 50 problems, 5 tasks. Each task has 8 easy problems (confidently correct
// unassisted) and 2 "deep" ones that are confidently wrong unless the prompt
// carries three helpful same-task demonstrations. Deep prompts keep the task
// vocabulary dominant so retrieval ranks their own task's demos first.
Corpus cross_domain_corpus(MockWorldConfig& world) {
  std::vector<Problem> problems;
  const char* themes[] = {
      "hockey baseball striker goal plausible sport athlete",
      "premise conclusion syllogism valid deduction logic fallacy",
      "comedy thriller director film sequel cinema actor",
      "sum product remainder integer odd arithmetic multiply",
      "because therefore caused outcome responsible blame intent"};
  for (int t = 0; t < 5; ++t) {
    for (int i = 0; i < 10; ++i) {
      Problem p;
      const bool deep = (i == 4 || i == 9);
      p.id = "t" + std::to_string(t) + "-q" + std::to_string(i);
      p.task_id = "task" + std::to_string(t);
      const std::string theme = themes[t];
      if (deep) {
        p.prompt = "Tricky riddle: decide yes or no for this " + theme + " " + theme +
                   " question, variant " + std::to_string(i) + " of the set.";
      } else {
        p.prompt = "Decide yes or no for this " + theme + " " + theme +
                   " question, instance " + std::to_string(i) + " of the set.";
      }
      p.label_space = {"yes", "no"};
      p.gold_label = ((t + i) % 2 == 0) ? "yes" : "no";
      world.p0_overrides[p.id] = deep ? 0.37 : 0.85 + 0.01 * (i % 5);
      problems.push_back(p);
    }
  }
  world.clamp_lo = 0.1;
  world.clamp_hi = 0.95;
  world.beta = 0.06;
  world.gamma = 0.1;
  return Corpus(std::move(problems));
}

EngineConfig cross_domain_engine_config(std::uint64_t seed) {
  EngineConfig cfg;
  cfg.iterations = 5;
  cfg.expand_k = 3;
  cfg.retrieve_k = 8;
  cfg.seed = seed;
  return cfg;
}

// ---------------------------------------------------------------------------
// Criterion 1: order-optimality against exhaustive enumeration
// ---------------------------------------------------------------------------

// Independent transition replica for the 4-problem world: with at most
// m = 3 stored demos every one of them enters the prompt, so a step depends
// only on (problem, set of prior predictions).
namespace oracle {

struct World {
  std::map<std::string, double> p0;
  double beta = 0.15;
  double gamma = 0.4;
  double lo = 0.05;
  double hi = 0.95;
};

struct Solved {
  std::string id;
  bool correct;
};

// Binary labels with gold first: reward and correctness of one step.
std::pair<double, bool> step(const World& w, const std::string& id,
                             const std::vector<Solved>& store) {
  int helpful = 0, harmful = 0;
  for (const Solved& s : store) (s.correct ? helpful : harmful)++;
  const double p =
      std::clamp(w.p0.at(id) + w.beta * helpful - w.gamma * harmful, w.lo, w.hi);
  const bool correct = p >= 0.5;  // exact tie argmaxes to the first label (gold)
  return {std::max(p, 1.0 - p), correct};
}

}  // namespace oracle

Checker criterion1() {
  Checker c;
  Timer timer;

  oracle::World w;
  w.p0 = {{"q1", 0.58}, {"q2", 0.49}, {"q3", 0.66}, {"q4", 0.73}};

  std::vector<Problem> problems;
  for (const auto& [id, p0] : w.p0) {
    problems.push_back(
        test::make_problem(id, "nav", "question " + id, {"yes", "no"}, "yes"));
  }
  const Corpus corpus{std::move(problems)};
  MockWorldConfig world;
  world.beta = w.beta;
  world.gamma = w.gamma;
  world.clamp_lo = w.lo;
  world.clamp_hi = w.hi;
  for (const auto& [id, p0] : w.p0) world.p0_overrides[id] = p0;
  MockModelBackend model(world, corpus);
  HashingEmbeddingBackend embedder;

  EngineConfig cfg;
  cfg.iterations = 15;
  cfg.expand_k = 3;
  cfg.seed = 7;
  cfg.cache_enabled = false;  // pure transitions, comparable to the enumeration
  Engine engine(corpus, model, embedder, cfg);
  const RunTrace trace = engine.run();

  // Enumerate every ordering of the remaining problems after the engine's root.
  const std::string root = trace.root_problem_id;
  std::vector<std::string> rest;
  for (const auto& [id, p0] : w.p0) {
    if (id != root) rest.push_back(id);
  }
  std::sort(rest.begin(), rest.end());
  const auto [root_reward, root_ok] = oracle::step(w, root, {});
  double best = -1.0;
  int best_count = 0;
  do {
    std::vector<oracle::Solved> store = {{root, root_ok}};
    double total = root_reward;
    for (const std::string& id : rest) {
      const auto [r, ok] = oracle::step(w, id, store);
      total += r;
      store.push_back({id, ok});
    }
    if (total > best + 1e-15) {
      best = total;
      best_count = 1;
    } else if (total > best - 1e-15) {
      ++best_count;
    }
  } while (std::next_permutation(rest.begin(), rest.end()));
  c.expect(best_count == 1, "the engineered world must have a unique optimal ordering");

  double engine_best = -1.0;
  for (const auto& traj : trace.trajectories) {
    double total = 0.0;
    for (const auto& s : traj) total += s.reward;
    engine_best = std::max(engine_best, total);
  }
  c.expect(engine_best == best, "best discovered trajectory reward must equal the "
                                "brute-force maximum exactly");
  c.expect(timer.seconds() < 5.0, "runtime exceeded 5 s");
  {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "best=%.6f over 6 orderings, %.2fs", best,
                  timer.seconds());
    c.note(buf);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 2: value arithmetic at 1e-9
// ---------------------------------------------------------------------------

Checker criterion2() {
  Checker c;

  // Retrieval-initialized value.
  StoreView empty;
  c.expect(retrieval_value(empty, test::axis_query(), 30) == 0.0, "empty store value");
  DemoStore two;
  two.add(test::demo_with("d1", 0.8, 0.9));
  two.add(test::demo_with("d2", 0.6, 0.5));
  c.expect_near(retrieval_value(two.view(), test::axis_query(), 30), 1.4, 1e-9,
                "two-demo value");

  // Top-k restriction against an independently sorted oracle.
  rng::Stream stream(2024);
  struct Pair {
    double conf, sim;
  };
  std::vector<Pair> pairs;
  DemoStore forty;
  for (int i = 0; i < 40; ++i) {
    const double conf = 0.5 + stream.unit() * 0.45;
    const double sim = 2.0 * stream.unit() - 1.0;
    pairs.push_back({conf, sim});
    forty.add(test::demo_with("d" + std::to_string(i), conf, sim));
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.sim > b.sim; });
  double expected = 0.0;
  for (int i = 0; i < 30; ++i) expected += pairs[i].conf + pairs[i].sim;
  c.expect_near(retrieval_value(forty.view(), test::axis_query(), 30), expected / 30.0,
                1e-9, "top-30-of-40 value");

  // Action value with and without a backed-up child mean.
  const Corpus corpus{{test::make_problem("d1", "nav", "P-d1", {"yes", "no"}, "yes"),
                       test::make_problem("d2", "nav", "P-d2", {"yes", "no"}, "yes"),
                       test::make_problem("t", "nav", "P-t", {"yes", "no"}, "yes")}};
  MockWorldConfig world;
  MockModelBackend model(world, corpus);
  test::FixedEmbeddingBackend embedder;
  embedder.set("P-d1", test::vec_with_similarity(0.9));
  embedder.set("P-d2", test::vec_with_similarity(0.5));
  embedder.set("P-t", test::axis_query());

  SearchNode root;
  root.action = "d1";
  root.demo = test::demo_with("d1", 0.8, 0.9);
  root.depth = 1;
  auto childp = std::make_unique<SearchNode>();
  childp->action = "d2";
  childp->demo = test::demo_with("d2", 0.6, 0.5);
  childp->depth = 2;
  childp->parent = &root;
  SearchNode* child = childp.get();
  root.children.emplace("d2", std::move(childp));

  {
    Engine engine(corpus, model, embedder, EngineConfig{});
    c.expect_near(engine.action_value(*child, "t"), 1.4, 1e-9, "value without child");
    auto grand = std::make_unique<SearchNode>();
    grand->action = "t";
    grand->parent = child;
    grand->depth = 3;
    grand->future_reward_sum = 1.2;
    grand->future_reward_count = 2;
    child->children.emplace("t", std::move(grand));
    c.expect_near(engine.action_value(*child, "t"), 2.0, 1e-9, "value with child Q=0.6");
  }
  {
    EngineConfig cfg;
    cfg.q_weight = 0.0;
    Engine engine(corpus, model, embedder, cfg);
    c.expect_near(engine.action_value(*child, "t"), 1.4, 1e-9, "q_weight=0 ablation");
  }

  // Selection score.
  c.expect_near(exploration_bonus(1, 1, 5.0), 0.0, 1e-12, "ln(1) bonus");
  c.expect(std::isinf(exploration_bonus(4, 0, 5.0)), "unvisited child bonus");
  c.expect_near(1.2 + exploration_bonus(8, 2, 5.0), 6.298, 1e-3, "recomputed score @1e-3");
  c.expect_near(1.2 + exploration_bonus(8, 2, 5.0), 6.298334950844045, 1e-9,
                "recomputed score @1e-9");

  // Mock formula arithmetic.
  const Corpus mock_corpus{
      {test::make_problem("q1", "nav", "is one less than two?", {"yes", "no"}, "yes"),
       test::make_problem("q2", "nav", "is two less than three?", {"yes", "no"}, "yes"),
       test::make_problem("q3", "nav", "is three less than four?", {"yes", "no"}, "yes"),
       test::make_problem("q4", "nav", "pick a", {"a", "b", "c", "d"}, "a")}};
  auto demo_of = [](const std::string& id, const std::string& label) {
    PseudoDemonstration d;
    d.problem_id = id;
    d.predicted_label = label;
    d.distribution.probs = {0.8, 0.2};
    d.confidence = 0.8;
    return d;
  };
  {
    MockWorldConfig w;
    w.p0 = 0.7;
    c.expect_near(
        mock_predict_formula(mock_corpus.by_id("q1"), {}, w, mock_corpus).probs[0], 0.7,
        1e-9, "mock base case");
  }
  {
    MockWorldConfig w;
    w.p0 = 0.7;
    w.beta = 0.1;
    const std::vector<PseudoDemonstration> demos = {demo_of("q2", "yes"),
                                                    demo_of("q3", "yes")};
    c.expect_near(
        mock_predict_formula(mock_corpus.by_id("q1"), demos, w, mock_corpus).probs[0],
        0.9, 1e-9, "two helpful demos");
  }
  {
    MockWorldConfig w;
    w.p0 = 0.9;
    w.beta = 0.1;
    w.clamp_hi = 0.95;
    const std::vector<PseudoDemonstration> demos = {demo_of("q2", "yes"),
                                                    demo_of("q3", "yes")};
    c.expect_near(
        mock_predict_formula(mock_corpus.by_id("q1"), demos, w, mock_corpus).probs[0],
        0.95, 1e-9, "clamped bonus");
  }
  {
    MockWorldConfig w;
    w.p0 = 0.6;
    w.beta = 0.1;
    w.gamma = 0.2;
    const std::vector<PseudoDemonstration> demos = {demo_of("q2", "yes"),
                                                    demo_of("q3", "no")};
    c.expect_near(
        mock_predict_formula(mock_corpus.by_id("q1"), demos, w, mock_corpus).probs[0],
        0.5, 1e-9, "helpful plus harmful");
  }
  {
    MockWorldConfig w;
    w.p0 = 0.7;
    const auto dist = mock_predict_formula(mock_corpus.by_id("q4"), {}, w, mock_corpus);
    for (int i = 1; i < 4; ++i) {
      c.expect_near(dist.probs[static_cast<std::size_t>(i)], 0.1, 1e-9,
                    "uniform remainder");
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 3: tree invariants after a seeded run (n=20, tau=10)
// ---------------------------------------------------------------------------

struct ReplayStats {
  double sum = 0.0;
  long count = 0;
  int visits = 0;
};

void replay(const RunTrace& trace, std::map<std::vector<std::string>, ReplayStats>& out) {
  for (const auto& traj : trace.trajectories) {
    std::vector<std::string> prefix = {traj[0].problem_id};
    out[prefix].visits += 1;
    for (std::size_t t = 1; t < traj.size(); ++t) {
      prefix.push_back(traj[t].problem_id);
      auto& s = out[prefix];
      s.visits += 1;
      double suffix = 0.0;
      long n = 0;
      for (std::size_t u = t; u < traj.size(); ++u) {
        suffix += traj[u].reward;
        ++n;
      }
      s.sum += suffix;
      s.count += n;
    }
  }
}

void walk_tree(Checker& c, const SearchNode& node, std::vector<std::string>& prefix,
               const std::map<std::vector<std::string>, ReplayStats>& stats) {
  prefix.push_back(node.action);
  if (node.visits > 0) {
    const auto it = stats.find(prefix);
    if (it == stats.end()) {
      c.expect(false, "visited node missing from the trajectory replay");
    } else {
      c.expect(node.visits == it->second.visits, "visit count mismatch vs replay");
      if (prefix.size() > 1) {
        c.expect(node.future_reward_count == it->second.count,
                 "pooled reward count mismatch");
        c.expect_near(node.q(), it->second.sum / static_cast<double>(it->second.count),
                      1e-9, "pooled mean Q");
      }
    }
  }
  int child_visits = 0;
  for (const auto& [id, child] : node.children) {
    walk_tree(c, *child, prefix, stats);
    child_visits += child->visits;
  }
  c.expect(node.visits >= child_visits, "N(parent) >= sum N(children)");
  prefix.pop_back();
}

Checker criterion3() {
  Checker c;
  const Corpus corpus = test::binary_corpus(20, "nav");
  MockWorldConfig world;
  world.p0_spread = 0.25;
  world.seed = 424242;
  MockModelBackend model(world, corpus);
  HashingEmbeddingBackend embedder;
  EngineConfig cfg;
  cfg.iterations = 10;
  cfg.seed = 31337;
  Engine engine(corpus, model, embedder, cfg);
  const RunTrace trace = engine.run();

  c.expect(engine.root()->visits == 10, "N(root) == tau");
  c.expect(trace.trajectories.size() == 10, "one trajectory per iteration");
  for (const auto& traj : trace.trajectories) {
    std::set<std::string> seen;
    for (const auto& s : traj) seen.insert(s.problem_id);
    c.expect(traj.size() == corpus.size() && seen.size() == corpus.size(),
             "trajectory is a permutation");
  }
  std::map<std::vector<std::string>, ReplayStats> stats;
  replay(trace, stats);
  std::vector<std::string> prefix;
  walk_tree(c, *engine.root(), prefix, stats);
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 4: action cache efficiency (n=50, tau=5, k_a=3)
// ---------------------------------------------------------------------------

Checker criterion4() {
  Checker c;
  Timer timer;
  MockWorldConfig world;
  const Corpus corpus = cross_domain_corpus(world);
  world.seed = 1234;
  MockModelBackend model(world, corpus);
  HashingEmbeddingBackend embedder;

  EngineConfig cfg = cross_domain_engine_config(99);
  cfg.cache_enabled = true;
  Engine cached_engine(corpus, model, embedder, cfg);
  const RunTrace cached = cached_engine.run();
  cfg.cache_enabled = false;
  Engine plain_engine(corpus, model, embedder, cfg);
  const RunTrace plain = plain_engine.run();

  c.expect(cached.cache_hits > 0, "cache must actually hit");
  c.expect(cached.model_calls <= 0.6 * static_cast<double>(plain.model_calls),
           "cached calls must be at most 0.6x the uncached calls");

  const Prior prior = compute_prior(corpus, model);
  const Report cached_report = score_run(cached, corpus, &prior);
  const Report plain_report = score_run(plain, corpus, &prior);
  int diffs = 0;
  for (std::size_t i = 0; i < cached_report.per_problem.size(); ++i) {
    if (cached_report.per_problem[i].final_label !=
        plain_report.per_problem[i].final_label) {
      ++diffs;
    }
  }
  c.expect(diffs * 10 <= static_cast<int>(corpus.size()),
           "answers differ on more than 10% of problems");
  c.expect(timer.seconds() < 30.0, "runtime exceeded 30 s");
  {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "calls %ld vs %ld (x%.2f), %d/%zu answers differ, %.2fs",
                  cached.model_calls, plain.model_calls,
                  static_cast<double>(plain.model_calls) / cached.model_calls, diffs,
                  corpus.size(), timer.seconds());
    c.note(buf);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 5: exploration efficiency (DUCT >= UCT >= MC over 20 seeds)
// ---------------------------------------------------------------------------

Checker criterion5() {
  Checker c;
  Timer timer;
  MockWorldConfig proto;
  const Corpus corpus = cross_domain_corpus(proto);
  HashingEmbeddingBackend embedder;

  double acc_duct = 0.0, acc_uct = 0.0, acc_mc = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    MockWorldConfig world = proto;
    world.seed = 5000 + static_cast<std::uint64_t>(seed);
    MockModelBackend model(world, corpus);
    EngineConfig cfg = cross_domain_engine_config(static_cast<std::uint64_t>(seed));
    cfg.cache_enabled = false;  // equal inference budget across strategies
    const Prior prior = compute_prior(corpus, model);
    {
      Engine engine(corpus, model, embedder, cfg);
      acc_duct += *score_run(engine.run(), corpus, &prior).overall_accuracy;
    }
    acc_uct += *score_run(run_vanilla_uct(corpus, model, embedder, cfg), corpus, &prior)
                    .overall_accuracy;
    acc_mc +=
        *score_run(run_mc(corpus, model, embedder, cfg), corpus, &prior).overall_accuracy;
  }
  acc_duct /= seeds;
  acc_uct /= seeds;
  acc_mc /= seeds;
  c.expect(acc_duct >= acc_uct, "DUCT must not trail vanilla UCT");
  c.expect(acc_uct >= acc_mc, "vanilla UCT must not trail MC");
  c.expect(timer.seconds() < 300.0, "runtime exceeded 5 min");
  {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "duct=%.4f uct=%.4f mc=%.4f over %d seeds, %.1fs",
                  acc_duct, acc_uct, acc_mc, seeds, timer.seconds());
    c.note(buf);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 6: calibration invariance and the engineered flip
// ---------------------------------------------------------------------------

Checker criterion6() {
  Checker c;
  const Corpus corpus = test::binary_corpus(14, "nav");
  MockWorldConfig world;
  world.p0_spread = 0.3;
  world.seed = 777;
  MockModelBackend model(world, corpus);
  HashingEmbeddingBackend embedder;
  EngineConfig cfg;
  cfg.iterations = 5;
  cfg.seed = 4;
  Engine engine(corpus, model, embedder, cfg);
  const RunTrace trace = engine.run();

  const Prior uniform = Prior::uniform_for(corpus);
  const Report plain = score_run(trace, corpus, nullptr);
  const Report calibrated = score_run(trace, corpus, &uniform);
  int flips = 0;
  for (std::size_t i = 0; i < plain.per_problem.size(); ++i) {
    if (plain.per_problem[i].final_label != calibrated.per_problem[i].final_label) {
      ++flips;
    }
  }
  c.expect(flips == 0, "uniform prior flipped " + std::to_string(flips) + " labels");

  // Engineered biased example: mean [0.6,0.4] against prior [0.8,0.2].
  const Problem biased = test::make_problem("b", "t", "q", {"yes", "no"}, "yes");
  PredictionEvent ev;
  ev.problem_id = "b";
  ev.distribution.probs = {0.6, 0.4};
  Prior skewed;
  skewed.set({"yes", "no"}, {0.8, 0.2});
  const auto agg = aggregate_calibrated(biased, {&ev}, skewed);
  c.expect_near(agg.scores[0], 0.75, 1e-9, "calibrated score for the first label");
  c.expect_near(agg.scores[1], 2.0, 1e-9, "calibrated score for the second label");
  c.expect(agg.label == "no", "skewed prior must flip the biased aggregate");
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 7: baseline budget accounting
// ---------------------------------------------------------------------------

Checker criterion7() {
  Checker c;
  MockWorldConfig world;
  const Corpus corpus = cross_domain_corpus(world);
  world.seed = 55;
  MockModelBackend model(world, corpus);
  HashingEmbeddingBackend embedder;
  EngineConfig cfg = cross_domain_engine_config(3);

  const long n = static_cast<long>(corpus.size());
  c.expect(run_mc(corpus, model, embedder, cfg).model_calls == n,
           "MC must use exactly n model calls");
  c.expect(run_greedy(corpus, model, embedder, cfg).model_calls == n,
           "greedy must use exactly n model calls");

  const Corpus small = test::binary_corpus(10, "nav");
  MockWorldConfig small_world;
  small_world.p0_spread = 0.2;
  small_world.seed = 12;
  MockModelBackend small_model(small_world, small);
  const RunTrace beam = run_beam(small, small_model, embedder, cfg, 3, 5);
  c.expect(beam.trajectories.size() == 5,
           "beam(width=3, keep=5) must emit exactly 5 terminal trajectories");
  c.expect(beam.model_calls <= 5L * 3L * static_cast<long>(small.size()),
           "beam call budget exceeded keep*width*n");
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 8: byte-identical reports modulo the wall-time line
// ---------------------------------------------------------------------------

std::string strip_wall_time(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.find("wall_time_ms") != std::string::npos) continue;
    out += line;
    out += '\n';
  }
  return out;
}

Checker criterion8() {
  Checker c;
  const auto dir = std::filesystem::temp_directory_path() / "zsicl_acceptance_c8";
  std::filesystem::create_directories(dir);
  MockWorldConfig world;
  const Corpus corpus = cross_domain_corpus(world);
  save_corpus(corpus, dir / "corpus.jsonl");
  {
    std::ofstream cfg(dir / "exp.cfg");
    cfg << "corpus = " << (dir / "corpus.jsonl").string() << "\n"
        << "strategy = dawn\n"
        << "seed = 42\n"
        << "iterations = 5\n"
        << "retrieve_k = 8\n"
        << "mock_p0 = 0.85\n"
        << "mock_beta = 0.06\n"
        << "mock_gamma = 0.1\n"
        << "mock_clamp_lo = 0.1\n";
  }
  const std::string out1 = (dir / "report1.json").string();
  const std::string out2 = (dir / "report2.json").string();
  const int rc1 =
      cli_main({"run", "--config", (dir / "exp.cfg").string(), "--output", out1});
  const int rc2 =
      cli_main({"run", "--config", (dir / "exp.cfg").string(), "--output", out2});
  c.expect(rc1 == 0 && rc2 == 0, "cli run must exit 0");

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const std::string a = slurp(out1);
  const std::string b = slurp(out2);
  c.expect(!a.empty(), "report must not be empty");
  c.expect(strip_wall_time(a) == strip_wall_time(b),
           "reports must be byte-identical apart from wall time");
  std::filesystem::remove_all(dir);
  return c;
}

// ---------------------------------------------------------------------------
// Criterion 9: prompt fidelity golden files
// ---------------------------------------------------------------------------

Checker criterion9() {
  Checker c;
  std::vector<Problem> problems;
  problems.push_back(test::make_problem(
      "snark", "snarks",
      "Which statement is sarcastic?\nOptions:\n(A) But his eyes were on the ball, "
      "shouldn't be a red\n(B) But his cleats were on the ball, shouldn't be a red",
      {"(A)", "(B)"}, "(B)"));
  problems.push_back(test::make_problem(
      "sports1", "sports",
      "Is the following sentence plausible? \"John Carlson scored in the third period.\"",
      {"yes", "no"}, "yes"));
  problems.push_back(test::make_problem(
      "sports2", "sports",
      "Is the following sentence plausible? \"Elias Lindholm beat the buzzer.\"",
      {"yes", "no"}, "no"));
  problems.push_back(test::make_problem(
      "query", "sports",
      "Is the following sentence plausible? \"Marcelo got on the end of a through ball.\"",
      {"yes", "no"}, "yes"));
  problems.push_back(test::make_problem(
      "light", "physics",
      "Objects that absorb light appear A.black    B.white    C.dark    D.bright",
      {"A", "B", "C", "D"}, "A"));
  problems.push_back(test::make_problem(
      "burn", "physics",
      "Paper will burn at approximately what temperature in Fahrenheit?\nA.986 degrees  "
      "  B.2125 degrees    C.3985 degrees    D.451 degrees",
      {"A", "B", "C", "D"}, "D"));
  const Corpus corpus{std::move(problems)};

  auto labeled = [](std::string id, std::string label) {
    PseudoDemonstration d;
    d.problem_id = std::move(id);
    d.predicted_label = std::move(label);
    d.distribution.probs = {1.0};
    d.confidence = 1.0;
    return d;
  };

  const std::string bbh_expected =
      "Q: Which statement is sarcastic?\n"
      "Options:\n"
      "(A) But his eyes were on the ball, shouldn't be a red\n"
      "(B) But his cleats were on the ball, shouldn't be a red\n"
      "A: (B)\n"
      "Q: Is the following sentence plausible? \"John Carlson scored in the third "
      "period.\"\n"
      "A: yes\n"
      "Q: Is the following sentence plausible? \"Elias Lindholm beat the buzzer.\"\n"
      "A: no\n"
      "Q: Is the following sentence plausible? \"Marcelo got on the end of a through "
      "ball.\"\n"
      "A:";
  const std::string bbh = render_prompt(
      corpus.by_id("query"),
      {labeled("snark", "(B)"), labeled("sports1", "yes"), labeled("sports2", "no")},
      corpus, TemplateId::bbh);
  c.expect(bbh == bbh_expected, "BBH-style block structure must match byte-exactly");

  const std::string mmlu_expected =
      "Question: Objects that absorb light appear A.black    B.white    C.dark    "
      "D.bright\n"
      "Answer: A\n"
      "Question: Paper will burn at approximately what temperature in Fahrenheit?\n"
      "A.986 degrees    B.2125 degrees    C.3985 degrees    D.451 degrees\n"
      "Answer:";
  const std::string mmlu = render_prompt(corpus.by_id("burn"), {labeled("light", "A")},
                                         corpus, TemplateId::mmlu);
  c.expect(mmlu == mmlu_expected, "MMLU-style block structure must match byte-exactly");

  c.expect(render_prompt(corpus.by_id("query"), {}, corpus, TemplateId::bbh) ==
               "Q: Is the following sentence plausible? \"Marcelo got on the end of a "
               "through ball.\"\nA:",
           "zero-shot prompt must be a bare question block");
  return c;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Checker()> fn;
  };
  const std::vector<Entry> criteria = {
      {1, "order-optimality oracle (exhaustive enumeration)", criterion1},
      {2, "value arithmetic unit suite (1e-9)", criterion2},
      {3, "tree invariants and pooled-mean replay (n=20, tau=10)", criterion3},
      {4, "action cache efficiency (n=50, tau=5)", criterion4},
      {5, "exploration efficiency ordering (20 seeds)", criterion5},
      {6, "calibration invariance and engineered flip", criterion6},
      {7, "baseline budget accounting", criterion7},
      {8, "deterministic byte-identical reports", criterion8},
      {9, "prompt template fidelity", criterion9},
  };

  int failed = 0;
  for (const Entry& entry : criteria) {
    Checker result;
    try {
      result = entry.fn();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %d: %s%s%s\n", result.ok ? "PASS" : "FAIL", entry.id,
                entry.name, result.detail.empty() ? "" : " -- ", result.detail.c_str());
    if (!result.ok) ++failed;
  }
  if (failed > 0) {
    std::printf("%d criterion(s) failed\n", failed);
  } else {
    std::printf("all %zu criteria passed\n", criteria.size());
  }
  return failed;
}
