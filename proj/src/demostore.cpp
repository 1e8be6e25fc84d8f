#include "zsicl/demostore.hpp"

#include <algorithm>
#include <stdexcept>

#include "zsicl/simd/kernels.hpp"

namespace zsicl {

double similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("similarity: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  return simd::kernels().dot(a.data(), b.data(), a.size());
}

void StoreView::append(const PseudoDemonstration& demo) {
  if (demos_.empty()) {
    dim_ = demo.embedding.size();
  } else if (demo.embedding.size() != dim_) {
    throw std::invalid_argument("store view: mixed embedding dimensions");
  }
  demos_.push_back(&demo);
  matrix_.insert(matrix_.end(), demo.embedding.begin(), demo.embedding.end());
}

std::vector<ScoredDemo> StoreView::retrieve_topk(std::span<const double> query,
                                                 std::size_t k) const {
  if (k < 1) throw std::invalid_argument("retrieve_topk: k must be >= 1");
  if (demos_.empty()) return {};
  if (query.size() != dim_) {
    throw std::invalid_argument("retrieve_topk: query dimension mismatch");
  }
  std::vector<double> scores(demos_.size());
  simd::kernels().batch_dot(query.data(), matrix_.data(), demos_.size(), dim_,
                            scores.data());
  std::vector<ScoredDemo> ranked(demos_.size());
  for (std::size_t i = 0; i < demos_.size(); ++i) {
    ranked[i] = ScoredDemo{demos_[i], scores[i], i};
  }
  const std::size_t take = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + take, ranked.end(),
                    [](const ScoredDemo& a, const ScoredDemo& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.insertion < b.insertion;
                    });
  ranked.resize(take);
  return ranked;
}

DemoStore::DemoStore(const DemoStore& other) : demos_(other.demos_), ids_(other.ids_) {
  for (const PseudoDemonstration& d : demos_) view_.append(d);
}

DemoStore& DemoStore::operator=(const DemoStore& other) {
  if (this != &other) {
    DemoStore copy(other);
    std::swap(demos_, copy.demos_);
    std::swap(ids_, copy.ids_);
    std::swap(view_, copy.view_);
  }
  return *this;
}

void DemoStore::add(PseudoDemonstration demo) {
  if (!ids_.emplace(demo.problem_id, demos_.size()).second) {
    throw std::runtime_error("demo store already holds '" + demo.problem_id +
                             "' (problem solved twice on one path)");
  }
  demos_.push_back(std::move(demo));
  view_.append(demos_.back());
}

bool DemoStore::contains(std::string_view problem_id) const {
  return ids_.count(std::string(problem_id)) > 0;
}

DemoSelection parse_demo_selection(std::string_view name) {
  if (name == "topk_diverse") return DemoSelection::topk_diverse;
  if (name == "topk") return DemoSelection::topk;
  if (name == "random") return DemoSelection::random;
  throw std::invalid_argument("unknown demo selection '" + std::string(name) +
                              "' (expected topk_diverse, topk, or random)");
}

std::string_view demo_selection_name(DemoSelection s) {
  switch (s) {
    case DemoSelection::topk_diverse: return "topk_diverse";
    case DemoSelection::topk: return "topk";
    case DemoSelection::random: return "random";
  }
  return "unknown";
}

namespace {

std::vector<PseudoDemonstration> sorted_output(std::vector<const ScoredDemo*> picked) {
  std::sort(picked.begin(), picked.end(), [](const ScoredDemo* a, const ScoredDemo* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->insertion < b->insertion;
  });
  std::vector<PseudoDemonstration> out;
  out.reserve(picked.size());
  for (const ScoredDemo* sd : picked) out.push_back(*sd->demo);
  return out;
}

}  // namespace

std::vector<PseudoDemonstration> construct_demos(const StoreView& view,
                                                 std::span<const double> query_embedding,
                                                 std::size_t m, std::size_t pool_k,
                                                 rng::Stream& rng,
                                                 DemoSelection selection) {
  if (m < 1) throw std::invalid_argument("construct_demos: m must be >= 1");
  if (pool_k < m) throw std::invalid_argument("construct_demos: pool_k must be >= m");
  if (view.empty()) return {};

  if (selection == DemoSelection::random) {
    // Uniform without replacement over the whole store.
    std::vector<std::size_t> idx(view.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const std::size_t take = std::min(m, idx.size());
    std::vector<ScoredDemo> scored;
    scored.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      scored.push_back(ScoredDemo{&view.at(idx[i]),
                                  similarity(view.at(idx[i]).embedding, query_embedding),
                                  idx[i]});
    }
    std::vector<const ScoredDemo*> picked;
    for (const ScoredDemo& sd : scored) picked.push_back(&sd);
    return sorted_output(std::move(picked));
  }

  const std::vector<ScoredDemo> pool = view.retrieve_topk(query_embedding, pool_k);

  if (selection == DemoSelection::topk) {
    std::vector<const ScoredDemo*> picked;
    for (std::size_t i = 0; i < std::min(m, pool.size()); ++i) picked.push_back(&pool[i]);
    return sorted_output(std::move(picked));
  }

  // Label groups in first-appearance order; the pool is already sorted by
  // descending similarity, so that order matches each group's best score.
  std::vector<std::vector<const ScoredDemo*>> groups;
  std::unordered_map<std::string_view, std::size_t> group_of;
  for (const ScoredDemo& sd : pool) {
    const std::string_view label = sd.demo->predicted_label;
    auto [it, fresh] = group_of.emplace(label, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(&sd);
  }

  std::vector<const ScoredDemo*> picked;
  picked.reserve(std::min(m, pool.size()));
  while (picked.size() < std::min(m, pool.size())) {
    for (auto& group : groups) {
      if (picked.size() >= m) break;
      if (group.empty()) continue;
      const std::size_t at = rng.below(group.size());
      picked.push_back(group[at]);
      group.erase(group.begin() + static_cast<std::ptrdiff_t>(at));
    }
  }
  return sorted_output(std::move(picked));
}

}  // namespace zsicl
