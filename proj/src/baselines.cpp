#include "zsicl/baselines.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "zsicl/demostore.hpp"
#include "zsicl/rng.hpp"

namespace zsicl {

namespace {

constexpr std::pair<std::string_view, StrategyId> kStrategies[] = {
    {"dawn", StrategyId::dawn},
    {"mc_random", StrategyId::mc_random},
    {"greedy_duct", StrategyId::greedy_duct},
    {"beam", StrategyId::beam},
    {"mcts_vanilla_uct", StrategyId::mcts_vanilla_uct},
    {"order_random", StrategyId::order_random},
    {"order_sequential", StrategyId::order_sequential},
};

std::unordered_map<std::string, std::vector<double>> embed_corpus(
    const Corpus& corpus, EmbeddingBackend& embedder) {
  std::unordered_map<std::string, std::vector<double>> out;
  for (const Problem& p : corpus.problems()) {
    out.emplace(p.id, embedder.embed(p.prompt));
  }
  return out;
}

// Shared single-pass transition loop: construct demos, predict, update store.
RunTrace run_single_pass(const Corpus& corpus, ModelBackend& model,
                         EmbeddingBackend& embedder, const EngineConfig& cfg,
                         const std::vector<std::string>& order,
                         std::string_view rng_tag) {
  cfg.validate();
  const auto embeddings = embed_corpus(corpus, embedder);
  rng::Stream demo_rng(rng::derive_seed(cfg.seed, rng_tag));

  RunTrace trace;
  DemoStore store;
  std::vector<TrajectoryStep> trajectory;
  for (const std::string& id : order) {
    const Problem& problem = corpus.by_id(id);
    const auto demos = construct_demos(
        store.view(), embeddings.at(id), static_cast<std::size_t>(cfg.demos_per_prompt),
        static_cast<std::size_t>(cfg.effective_pool_k()), demo_rng, cfg.demo_selection);
    LabelDistribution dist = model.predict_with_demos(problem, demos);
    dist.validate(problem.label_space.size());
    ++trace.model_calls;
    std::vector<std::string> demo_ids;
    demo_ids.reserve(demos.size());
    for (const auto& d : demos) demo_ids.push_back(d.problem_id);
    trace.events.push_back(
        PredictionEvent{id, dist, std::move(demo_ids), 0, Phase::single_pass, false});
    PseudoDemonstration demo = make_demo(problem, std::move(dist), embeddings.at(id));
    trajectory.push_back(TrajectoryStep{id, demo.confidence});
    store.add(std::move(demo));
  }
  trace.trajectories.push_back(std::move(trajectory));
  return trace;
}

std::vector<std::string> corpus_ids(const Corpus& corpus) {
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const Problem& p : corpus.problems()) ids.push_back(p.id);
  return ids;
}

}  // namespace

StrategyId parse_strategy(std::string_view name) {
  for (const auto& [key, id] : kStrategies) {
    if (key == name) return id;
  }
  std::string known;
  for (const auto& [key, id] : kStrategies) {
    if (!known.empty()) known += ", ";
    known += key;
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) +
                              "' (expected one of: " + known + ")");
}

std::string_view strategy_name(StrategyId id) {
  for (const auto& [key, sid] : kStrategies) {
    if (sid == id) return key;
  }
  return "unknown";
}

RunTrace run_mc(const Corpus& corpus, ModelBackend& model, EmbeddingBackend& embedder,
                const EngineConfig& cfg) {
  std::vector<std::string> order = corpus_ids(corpus);
  rng::Stream stream(rng::derive_seed(cfg.seed, "mc-order"));
  stream.shuffle(order);
  return run_single_pass(corpus, model, embedder, cfg, order, "mc-demos");
}

RunTrace run_greedy(const Corpus& corpus, ModelBackend& model,
                    EmbeddingBackend& embedder, const EngineConfig& cfg) {
  cfg.validate();
  const auto embeddings = embed_corpus(corpus, embedder);
  rng::Stream demo_rng(rng::derive_seed(cfg.seed, "search-demos"));

  RunTrace trace;
  DemoStore store;
  std::vector<TrajectoryStep> trajectory;
  std::vector<std::string> remaining = corpus_ids(corpus);
  std::sort(remaining.begin(), remaining.end());
  while (!remaining.empty()) {
    // Argmax of the retrieval value; remaining is id-sorted so strict '>'
    // keeps the lowest id on ties.
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const double v = retrieval_value(store.view(), embeddings.at(remaining[i]),
                                       static_cast<std::size_t>(cfg.retrieve_k));
      if (v > best_value) {
        best_value = v;
        best = i;
      }
    }
    const std::string id = remaining[best];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));

    const Problem& problem = corpus.by_id(id);
    const auto demos = construct_demos(
        store.view(), embeddings.at(id), static_cast<std::size_t>(cfg.demos_per_prompt),
        static_cast<std::size_t>(cfg.effective_pool_k()), demo_rng, cfg.demo_selection);
    LabelDistribution dist = model.predict_with_demos(problem, demos);
    dist.validate(problem.label_space.size());
    ++trace.model_calls;
    std::vector<std::string> demo_ids;
    for (const auto& d : demos) demo_ids.push_back(d.problem_id);
    trace.events.push_back(
        PredictionEvent{id, dist, std::move(demo_ids), 0, Phase::single_pass, false});
    PseudoDemonstration demo = make_demo(problem, std::move(dist), embeddings.at(id));
    trajectory.push_back(TrajectoryStep{id, demo.confidence});
    store.add(std::move(demo));
  }
  trace.trajectories.push_back(std::move(trajectory));
  return trace;
}

RunTrace run_beam(const Corpus& corpus, ModelBackend& model, EmbeddingBackend& embedder,
                  const EngineConfig& cfg, int beam_width, int keep) {
  cfg.validate();
  if (beam_width < 1) throw std::invalid_argument("beam_width must be >= 1");
  if (keep < 1) throw std::invalid_argument("keep must be >= 1");
  const auto embeddings = embed_corpus(corpus, embedder);
  rng::Stream demo_rng(rng::derive_seed(cfg.seed, "search-demos"));

  struct BeamPath {
    DemoStore store;
    std::vector<TrajectoryStep> steps;
    std::vector<PredictionEvent> events;
    double score_sum = 0.0;  // running sum of (value-at-choice + reward)

    double score() const {
      return steps.empty() ? 0.0 : score_sum / static_cast<double>(steps.size());
    }
  };

  RunTrace trace;
  std::vector<BeamPath> frontier(1);
  for (std::size_t step = 0; step < corpus.size(); ++step) {
    std::vector<BeamPath> candidates;
    for (BeamPath& path : frontier) {
      std::vector<std::string> remaining;
      for (const Problem& p : corpus.problems()) {
        if (!path.store.contains(p.id)) remaining.push_back(p.id);
      }
      std::sort(remaining.begin(), remaining.end());
      struct Scored {
        std::string id;
        double value;
      };
      std::vector<Scored> scored;
      scored.reserve(remaining.size());
      for (std::string& id : remaining) {
        const double v = retrieval_value(path.store.view(), embeddings.at(id),
                                         static_cast<std::size_t>(cfg.retrieve_k));
        scored.push_back(Scored{std::move(id), v});
      }
      const std::size_t width = std::min<std::size_t>(beam_width, scored.size());
      std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(width),
                        scored.end(), [](const Scored& a, const Scored& b) {
                          if (a.value != b.value) return a.value > b.value;
                          return a.id < b.id;
                        });
      for (std::size_t i = 0; i < width; ++i) {
        const std::string& id = scored[i].id;
        const Problem& problem = corpus.by_id(id);
        const auto demos = construct_demos(path.store.view(), embeddings.at(id),
                                           static_cast<std::size_t>(cfg.demos_per_prompt),
                                           static_cast<std::size_t>(cfg.effective_pool_k()),
                                           demo_rng, cfg.demo_selection);
        LabelDistribution dist = model.predict_with_demos(problem, demos);
        dist.validate(problem.label_space.size());
        ++trace.model_calls;
        std::vector<std::string> demo_ids;
        for (const auto& d : demos) demo_ids.push_back(d.problem_id);

        BeamPath extended = path;  // copies store, steps, events
        PseudoDemonstration demo = make_demo(problem, std::move(dist), embeddings.at(id));
        extended.events.push_back(PredictionEvent{id, demo.distribution,
                                                  std::move(demo_ids), 0,
                                                  Phase::single_pass, false});
        extended.steps.push_back(TrajectoryStep{id, demo.confidence});
        extended.score_sum += scored[i].value + demo.confidence;
        extended.store.add(std::move(demo));
        candidates.push_back(std::move(extended));
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const BeamPath& a, const BeamPath& b) {
                if (a.score() != b.score()) return a.score() > b.score();
                // Deterministic tie-break on the id sequences.
                for (std::size_t i = 0; i < std::min(a.steps.size(), b.steps.size()); ++i) {
                  if (a.steps[i].problem_id != b.steps[i].problem_id) {
                    return a.steps[i].problem_id < b.steps[i].problem_id;
                  }
                }
                return false;
              });
    if (candidates.size() > static_cast<std::size_t>(keep)) {
      candidates.resize(static_cast<std::size_t>(keep));
    }
    frontier = std::move(candidates);
  }

  // Surviving trajectories, best first; events follow trajectory order with
  // the iteration field recording the final rank.
  for (std::size_t rank = 0; rank < frontier.size(); ++rank) {
    for (PredictionEvent& ev : frontier[rank].events) {
      ev.iteration = static_cast<int>(rank);
      trace.events.push_back(std::move(ev));
    }
    trace.trajectories.push_back(std::move(frontier[rank].steps));
  }
  return trace;
}

RunTrace run_vanilla_uct(const Corpus& corpus, ModelBackend& model,
                         EmbeddingBackend& embedder, const EngineConfig& cfg) {
  EngineConfig ablated = cfg;
  ablated.use_value_init = false;
  Engine engine(corpus, model, embedder, ablated);
  return engine.run();
}

RunTrace run_fixed_order(const Corpus& corpus, ModelBackend& model,
                         EmbeddingBackend& embedder, const EngineConfig& cfg,
                         FixedOrder order) {
  std::vector<std::string> ids;
  if (order == FixedOrder::random) {
    ids = corpus_ids(corpus);
    rng::Stream stream(rng::derive_seed(cfg.seed, "fixed-order"));
    stream.shuffle(ids);
  } else {
    // Task blocks in first-appearance order, corpus order within each block.
    for (const std::string& task : corpus.task_order()) {
      for (const Problem& p : corpus.problems()) {
        if (p.task_id == task) ids.push_back(p.id);
      }
    }
  }
  return run_single_pass(corpus, model, embedder, cfg, ids, "fixed-demos");
}

}  // namespace zsicl
