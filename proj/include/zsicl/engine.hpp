#pragma once

/**
 * Demonstration-aware MCTS over problem orderings.
 *
 * Each tree node is one solved problem; the path from the root is a partial
 * permutation of the corpus, and the node's effective demo store is the path
 * delta chain (each node owns only its own demonstration; a scoring snapshot
 * is materialized lazily and memoized).
 *
 * Action values blend a retrieval-based initializer with the backed-up mean
 * of future rewards:
 *
 *   value(s, a)     = init(s, a) + q_weight * Q(child)
 *   init(s, a)      = mean over the retrieve_k demos most similar to a's
 *                     problem of (confidence + similarity); 0 on empty store
 *   selection score = value + explore_weight * sqrt(ln N(s) / N(child)),
 *                     +inf while N(child) == 0
 *
 * Iterations run selection to a leaf, then expand the expand_k best-valued
 * actions per step until the permutation completes, choosing the max-reward
 * child each step; rewards (prediction confidence) are back-propagated as
 * pooled means over all future rewards. An action cache keyed by the running
 * max value short-circuits transitions once an action's value clears
 * cache_threshold.
 */

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "zsicl/backends.hpp"
#include "zsicl/corpus.hpp"
#include "zsicl/demostore.hpp"
#include "zsicl/rng.hpp"
#include "zsicl/trace.hpp"

namespace zsicl {

struct EngineConfig {
  int iterations = 5;            // search iterations after root initialization
  int retrieve_k = 30;           // demos averaged into the value initializer
  int expand_k = 3;              // actions materialized per expansion step
  double q_weight = 1.0;         // backed-up value weight inside the action value
  double explore_weight = 5.0;   // exploration constant in the selection score
  double cache_threshold = 1.5;  // action cache admission threshold
  int demos_per_prompt = 3;      // 3 for BBH-style tasks, 4 for MMLU-style
  int pool_k = 0;                // demo construction pool; 0 means retrieve_k
  std::uint64_t seed = 0;
  bool cache_enabled = true;
  bool cache_in_expansion = true;  // false restricts the cache to simulation steps
  bool use_value_init = true;      // false: plain UCT + seeded random expansion
  DemoSelection demo_selection = DemoSelection::topk_diverse;

  int effective_pool_k() const { return pool_k > 0 ? pool_k : retrieve_k; }
  void validate() const;
};

// Selection score for a visited parent. Returns +inf when child_visits == 0.
double exploration_bonus(int parent_visits, int child_visits, double explore_weight);

// Mean of (confidence + similarity) over the k demos most similar to the
// query; 0 on an empty store. The retrieval-based value initializer shared by
// the engine and the greedy/beam baselines.
double retrieval_value(const StoreView& view, std::span<const double> query_embedding,
                       std::size_t k);

struct SearchNode {
  std::string action;  // problem solved to create this node
  PseudoDemonstration demo;
  double reward = 0.0;
  int visits = 0;
  // Pooled future rewards backed up through the edge into this node.
  double future_reward_sum = 0.0;
  long future_reward_count = 0;
  int depth = 1;  // problems solved on the root-to-node path
  SearchNode* parent = nullptr;
  std::map<std::string, std::unique_ptr<SearchNode>> children;  // id-ordered

  double q() const {
    return future_reward_count > 0
               ? future_reward_sum / static_cast<double>(future_reward_count)
               : 0.0;
  }

  // Lazily materialized path store and per-action value-init memo.
  mutable std::unique_ptr<StoreView> snapshot;
  mutable std::unordered_map<std::string, double> init_memo;
};

class ActionCache {
 public:
  struct Entry {
    PseudoDemonstration demo;
    double reward = 0.0;
    double dq_max = 0.0;
    std::vector<std::string> demo_ids;  // provenance of the cached prediction
  };

  const Entry* find(const std::string& action) const;

  // Tracks the running max value per action; writes (or overwrites) the entry
  // when dq_value exceeds both that max and the threshold. Returns whether an
  // entry was written.
  bool record(const std::string& action, const PseudoDemonstration& demo, double reward,
              std::vector<std::string> demo_ids, double dq_value, double threshold);

  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, Entry> entries_;
  std::unordered_map<std::string, double> max_seen_;
};

class Engine {
 public:
  Engine(const Corpus& corpus, ModelBackend& model, EmbeddingBackend& embedder,
         EngineConfig cfg);

  // Root problem solved zero-shot, then cfg.iterations search iterations.
  // Fully deterministic given (corpus, cfg.seed, deterministic backends).
  RunTrace run();

  // Inspection surface for tests and invariant checks (valid after run()).
  const SearchNode* root() const { return root_.get(); }
  const ActionCache& action_cache() const { return cache_; }
  const EngineConfig& config() const { return cfg_; }

  // Scoring ops, exposed for direct unit verification.
  double value_init(const SearchNode& node, const Problem& action) const;  // Q0
  double action_value(const SearchNode& node, const std::string& action_id) const;  // DQ
  double selection_score(const SearchNode& parent, const std::string& action_id) const;

  // Descends from the root while the current node is visited and has
  // children, taking the max-score child (ties -> lowest id); the returned
  // path ends at a leaf or unvisited node.
  std::vector<SearchNode*> select_path();

  std::span<const double> embedding_of(const std::string& problem_id) const;

 private:
  SearchNode* expand_step(SearchNode& node, int iteration, Phase phase, RunTrace& trace);
  void backprop(std::span<SearchNode* const> path);
  const StoreView& snapshot_of(const SearchNode& node) const;
  std::vector<std::string> legal_actions(const SearchNode& node) const;
  bool terminal(const SearchNode& node) const;

  const Corpus* corpus_;
  ModelBackend* model_;
  EmbeddingBackend* embedder_;
  EngineConfig cfg_;
  std::unordered_map<std::string, std::vector<double>> embeddings_;
  std::unique_ptr<SearchNode> root_;
  ActionCache cache_;
  rng::Stream demo_rng_;
  rng::Stream expand_rng_;  // only consumed when use_value_init is off
};

}  // namespace zsicl
