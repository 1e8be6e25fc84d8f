#pragma once

/**
 * Alternative traversal strategies sharing the engine's transition machinery
 * (construct demos, predict, update store): single-pass orders (random,
 * sequential-by-task, value-greedy), beam search over partial orders, and
 * plain-UCT tree search as the value-initializer ablation.
 */

#include <string>
#include <string_view>

#include "zsicl/backends.hpp"
#include "zsicl/corpus.hpp"
#include "zsicl/engine.hpp"
#include "zsicl/trace.hpp"

namespace zsicl {

enum class StrategyId {
  dawn,  // the demonstration-aware MCTS engine
  mc_random,
  greedy_duct,
  beam,
  mcts_vanilla_uct,
  order_random,
  order_sequential,
};

// Throws with the list of valid names on an unknown string.
StrategyId parse_strategy(std::string_view name);
std::string_view strategy_name(StrategyId id);

// Single seeded-random permutation, one prediction per problem.
RunTrace run_mc(const Corpus& corpus, ModelBackend& model, EmbeddingBackend& embedder,
                const EngineConfig& cfg);

// Single pass; each step solves the unsolved problem with the highest
// retrieval-initialized value against the current store (ties -> lowest id).
RunTrace run_greedy(const Corpus& corpus, ModelBackend& model,
                    EmbeddingBackend& embedder, const EngineConfig& cfg);

// Beam over partial orders: every path expands its beam_width best-valued
// actions, paths are scored by the running mean of (value-at-choice +
// realized reward) per step, and the best keep paths survive. The returned
// trace holds the keep terminal trajectories and their events.
RunTrace run_beam(const Corpus& corpus, ModelBackend& model, EmbeddingBackend& embedder,
                  const EngineConfig& cfg, int beam_width = 3, int keep = 5);

// Engine run with the value initializer forced to zero: plain UCT selection
// and seeded random expansion. Same per-step prediction budget as the
// cache-disabled engine.
RunTrace run_vanilla_uct(const Corpus& corpus, ModelBackend& model,
                         EmbeddingBackend& embedder, const EngineConfig& cfg);

enum class FixedOrder { random, sequential };

// Single pass in a seeded-random order, or grouped by task in corpus task
// order (within a task, corpus order).
RunTrace run_fixed_order(const Corpus& corpus, ModelBackend& model,
                         EmbeddingBackend& embedder, const EngineConfig& cfg,
                         FixedOrder order);

}  // namespace zsicl
