#pragma once

/**
 * Pseudo-demonstration storage and retrieval. Stores are append-only and
 * insertion-ordered; retrieval is an exact top-k cosine scan over a
 * contiguous embedding matrix (the corpus bounds the store size, so a linear
 * scan is the right tool). Demonstration construction is TopK+Diverse:
 * retrieve a relevance pool, then round-robin across pseudo-label groups.
 */

#include <cstddef>
#include <deque>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zsicl/rng.hpp"
#include "zsicl/types.hpp"

namespace zsicl {

// Cosine similarity of unit vectors (their dot product).
// Throws std::invalid_argument on dimension mismatch.
double similarity(std::span<const double> a, std::span<const double> b);

struct ScoredDemo {
  const PseudoDemonstration* demo = nullptr;
  double score = 0.0;
  std::size_t insertion = 0;  // position in the store, breaks score ties
};

// Read-only scoring surface: demo pointers plus their embeddings packed
// row-major for the batched kernels.
class StoreView {
 public:
  void append(const PseudoDemonstration& demo);

  std::size_t size() const { return demos_.size(); }
  bool empty() const { return demos_.empty(); }
  const PseudoDemonstration& at(std::size_t i) const { return *demos_[i]; }

  // min(k, size) entries by descending similarity to the query embedding;
  // ties resolve to the earlier insertion. Deterministic.
  std::vector<ScoredDemo> retrieve_topk(std::span<const double> query,
                                        std::size_t k) const;

 private:
  std::vector<const PseudoDemonstration*> demos_;
  std::vector<double> matrix_;
  std::size_t dim_ = 0;
};

class DemoStore {
 public:
  DemoStore() = default;
  DemoStore(const DemoStore& other);
  DemoStore& operator=(const DemoStore& other);

  // Throws on duplicate problem_id: one path never solves a problem twice.
  void add(PseudoDemonstration demo);

  bool contains(std::string_view problem_id) const;
  std::size_t size() const { return demos_.size(); }
  // Insertion order.
  const PseudoDemonstration& at(std::size_t i) const { return demos_[i]; }
  const StoreView& view() const { return view_; }

 private:
  std::deque<PseudoDemonstration> demos_;  // stable addresses for the view
  std::unordered_map<std::string, std::size_t> ids_;
  StoreView view_;
};

// How the demonstration list for a prompt is drawn from the store.
//   topk_diverse  relevance pool, then label-stratified sampling (default)
//   topk          the m most similar demos, plain
//   random        m uniform draws from the whole store
enum class DemoSelection { topk_diverse, topk, random };

DemoSelection parse_demo_selection(std::string_view name);
std::string_view demo_selection_name(DemoSelection s);

/**
 * TopK+Diverse construction: pool the pool_k most similar demos, group them
 * by pseudo-label, then round-robin over the groups in descending order of
 * each group's best similarity, drawing a random untaken member per turn
 * until m demos are chosen or the pool runs out. The result is returned in
 * descending-similarity order. Deterministic under a fixed rng state.
 *
 * Requires m >= 1 and pool_k >= m. An empty store yields an empty list (the
 * caller falls back to zero-shot).
 */
std::vector<PseudoDemonstration> construct_demos(
    const StoreView& view, std::span<const double> query_embedding, std::size_t m,
    std::size_t pool_k, rng::Stream& rng,
    DemoSelection selection = DemoSelection::topk_diverse);

}  // namespace zsicl
