#include "zsicl/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace zsicl {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::root: return "root";
    case Phase::expansion: return "expansion";
    case Phase::simulation: return "simulation";
    case Phase::single_pass: return "single_pass";
  }
  return "unknown";
}

void EngineConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (retrieve_k < 1) throw std::invalid_argument("retrieve_k must be >= 1");
  if (expand_k < 1) throw std::invalid_argument("expand_k must be >= 1");
  if (explore_weight < 0.0) throw std::invalid_argument("explore_weight must be >= 0");
  if (q_weight < 0.0) throw std::invalid_argument("q_weight must be >= 0");
  if (!(cache_threshold > 0.0)) throw std::invalid_argument("cache_threshold must be > 0");
  if (demos_per_prompt < 1) throw std::invalid_argument("demos_per_prompt must be >= 1");
  if (effective_pool_k() < demos_per_prompt) {
    throw std::invalid_argument("pool_k must be >= demos_per_prompt");
  }
}

double exploration_bonus(int parent_visits, int child_visits, double explore_weight) {
  if (child_visits == 0) return std::numeric_limits<double>::infinity();
  if (parent_visits < 1) throw std::logic_error("exploration bonus needs a visited parent");
  return explore_weight *
         std::sqrt(std::log(static_cast<double>(parent_visits)) / child_visits);
}

double retrieval_value(const StoreView& view, std::span<const double> query_embedding,
                       std::size_t k) {
  if (view.empty()) return 0.0;
  const auto top = view.retrieve_topk(query_embedding, k);
  double sum = 0.0;
  for (const ScoredDemo& sd : top) sum += sd.demo->confidence + sd.score;
  return sum / static_cast<double>(top.size());
}

const ActionCache::Entry* ActionCache::find(const std::string& action) const {
  auto it = entries_.find(action);
  return it == entries_.end() ? nullptr : &it->second;
}

bool ActionCache::record(const std::string& action, const PseudoDemonstration& demo,
                         double reward, std::vector<std::string> demo_ids,
                         double dq_value, double threshold) {
  const auto prior = max_seen_.find(action);
  const bool beats_prior = prior == max_seen_.end() || dq_value > prior->second;
  const bool write = dq_value > threshold && beats_prior;
  if (write) {
    entries_[action] = Entry{demo, reward, dq_value, std::move(demo_ids)};
  }
  if (prior == max_seen_.end()) {
    max_seen_.emplace(action, dq_value);
  } else if (dq_value > prior->second) {
    prior->second = dq_value;
  }
  return write;
}

Engine::Engine(const Corpus& corpus, ModelBackend& model, EmbeddingBackend& embedder,
               EngineConfig cfg)
    : corpus_(&corpus),
      model_(&model),
      embedder_(&embedder),
      cfg_(cfg),
      demo_rng_(rng::derive_seed(cfg.seed, "demos")),
      expand_rng_(rng::derive_seed(cfg.seed, "expand")) {
  cfg_.validate();
  for (const Problem& p : corpus.problems()) {
    embeddings_.emplace(p.id, embedder_->embed(p.prompt));
  }
}

std::span<const double> Engine::embedding_of(const std::string& problem_id) const {
  return embeddings_.at(problem_id);
}

bool Engine::terminal(const SearchNode& node) const {
  return static_cast<std::size_t>(node.depth) == corpus_->size();
}

const StoreView& Engine::snapshot_of(const SearchNode& node) const {
  if (!node.snapshot) {
    std::vector<const SearchNode*> chain;
    for (const SearchNode* cur = &node; cur; cur = cur->parent) chain.push_back(cur);
    auto view = std::make_unique<StoreView>();
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      view->append((*it)->demo);
    }
    node.snapshot = std::move(view);
  }
  return *node.snapshot;
}

std::vector<std::string> Engine::legal_actions(const SearchNode& node) const {
  std::unordered_set<std::string_view> solved;
  for (const SearchNode* cur = &node; cur; cur = cur->parent) solved.insert(cur->action);
  std::vector<std::string> out;
  out.reserve(corpus_->size() - solved.size());
  for (const Problem& p : corpus_->problems()) {
    if (!solved.count(p.id)) out.push_back(p.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double Engine::value_init(const SearchNode& node, const Problem& action) const {
  if (auto it = node.init_memo.find(action.id); it != node.init_memo.end()) {
    return it->second;
  }
  const double v = retrieval_value(snapshot_of(node), embeddings_.at(action.id),
                                   static_cast<std::size_t>(cfg_.retrieve_k));
  node.init_memo.emplace(action.id, v);
  return v;
}

double Engine::action_value(const SearchNode& node, const std::string& action_id) const {
  for (const SearchNode* cur = &node; cur; cur = cur->parent) {
    if (cur->action == action_id) {
      throw std::logic_error("action '" + action_id + "' already solved on this path");
    }
  }
  double init = 0.0;
  if (cfg_.use_value_init) init = value_init(node, corpus_->by_id(action_id));
  double child_q = 0.0;
  if (auto it = node.children.find(action_id); it != node.children.end()) {
    child_q = it->second->q();
  }
  return init + cfg_.q_weight * child_q;
}

double Engine::selection_score(const SearchNode& parent, const std::string& action_id) const {
  const auto it = parent.children.find(action_id);
  if (it == parent.children.end()) {
    throw std::logic_error("selection score requires an existing child");
  }
  if (it->second->visits == 0) return std::numeric_limits<double>::infinity();
  return action_value(parent, action_id) +
         exploration_bonus(parent.visits, it->second->visits, cfg_.explore_weight);
}

std::vector<SearchNode*> Engine::select_path() {
  std::vector<SearchNode*> path{root_.get()};
  SearchNode* cur = root_.get();
  while (cur->visits > 0 && !cur->children.empty()) {
    SearchNode* best = nullptr;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& [id, child] : cur->children) {  // id order breaks ties low
      const double score = selection_score(*cur, id);
      if (score > best_score) {
        best_score = score;
        best = child.get();
      }
    }
    cur = best;
    path.push_back(cur);
  }
  return path;
}

SearchNode* Engine::expand_step(SearchNode& node, int iteration, Phase phase,
                                RunTrace& trace) {
  if (!node.children.empty()) {
    throw std::logic_error("expand_step on an already-expanded node");
  }
  std::vector<std::string> legal = legal_actions(node);
  if (legal.empty()) throw std::logic_error("expand_step on a terminal node");

  struct Candidate {
    std::string id;
    double dq = 0.0;
  };
  std::vector<Candidate> chosen;
  const std::size_t width = std::min<std::size_t>(cfg_.expand_k, legal.size());
  if (cfg_.use_value_init) {
    std::vector<Candidate> all;
    all.reserve(legal.size());
    for (std::string& id : legal) {
      const double dq = value_init(node, corpus_->by_id(id));
      all.push_back(Candidate{std::move(id), dq});
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(width),
                      all.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.dq != b.dq) return a.dq > b.dq;
                        return a.id < b.id;
                      });
    all.resize(width);
    chosen = std::move(all);
  } else {
    expand_rng_.shuffle(legal);
    for (std::size_t i = 0; i < width; ++i) {
      chosen.push_back(Candidate{std::move(legal[i]), 0.0});
    }
  }

  const bool consult_cache =
      cfg_.cache_enabled && (phase == Phase::simulation || cfg_.cache_in_expansion);
  for (const Candidate& cand : chosen) {
    const Problem& problem = corpus_->by_id(cand.id);
    auto child = std::make_unique<SearchNode>();
    child->action = cand.id;
    child->parent = &node;
    child->depth = node.depth + 1;

    const ActionCache::Entry* hit = consult_cache ? cache_.find(cand.id) : nullptr;
    if (hit) {
      child->demo = hit->demo;
      child->reward = hit->reward;
      trace.events.push_back(PredictionEvent{cand.id, hit->demo.distribution,
                                             hit->demo_ids, iteration, phase, true});
      ++trace.cache_hits;
    } else {
      const auto demos = construct_demos(
          snapshot_of(node), embeddings_.at(cand.id),
          static_cast<std::size_t>(cfg_.demos_per_prompt),
          static_cast<std::size_t>(cfg_.effective_pool_k()), demo_rng_,
          cfg_.demo_selection);
      LabelDistribution dist = model_->predict_with_demos(problem, demos);
      dist.validate(problem.label_space.size());
      ++trace.model_calls;
      std::vector<std::string> demo_ids;
      demo_ids.reserve(demos.size());
      for (const auto& d : demos) demo_ids.push_back(d.problem_id);
      trace.events.push_back(
          PredictionEvent{cand.id, dist, demo_ids, iteration, phase, false});
      child->demo = make_demo(problem, std::move(dist), embeddings_.at(cand.id));
      child->reward = child->demo.confidence;
      if (cfg_.cache_enabled) {
        cache_.record(cand.id, child->demo, child->reward, std::move(demo_ids),
                      cand.dq, cfg_.cache_threshold);
      }
    }
    node.children.emplace(cand.id, std::move(child));
  }

  SearchNode* best = nullptr;
  for (const auto& [id, child] : node.children) {  // id order breaks ties low
    if (!best || child->reward > best->reward) best = child.get();
  }
  return best;
}

void Engine::backprop(std::span<SearchNode* const> path) {
  double suffix = 0.0;
  long count = 0;
  for (std::size_t t = path.size(); t-- > 1;) {
    suffix += path[t]->reward;
    count += 1;
    path[t]->future_reward_sum += suffix;
    path[t]->future_reward_count += count;
  }
  for (SearchNode* node : path) node->visits += 1;
}

RunTrace Engine::run() {
  RunTrace trace;
  root_.reset();

  rng::Stream root_rng(rng::derive_seed(cfg_.seed, "root"));
  const Problem& root_problem =
      corpus_->problems()[root_rng.below(corpus_->size())];
  try {
    LabelDistribution dist = model_->predict_with_demos(root_problem, {});
    dist.validate(root_problem.label_space.size());
    ++trace.model_calls;
    trace.events.push_back(
        PredictionEvent{root_problem.id, dist, {}, 0, Phase::root, false});
    root_ = std::make_unique<SearchNode>();
    root_->action = root_problem.id;
    root_->demo = make_demo(root_problem, std::move(dist), embeddings_.at(root_problem.id));
    root_->reward = root_->demo.confidence;
    trace.root_problem_id = root_problem.id;
  } catch (const std::exception& e) {
    trace.valid = false;
    trace.error = e.what();
    return trace;
  }

  for (int iter = 1; iter <= cfg_.iterations; ++iter) {
    const std::size_t event_mark = trace.events.size();
    std::vector<std::pair<SearchNode*, std::string>> added;
    try {
      std::vector<SearchNode*> path = select_path();
      SearchNode* cur = path.back();
      bool first_step = true;
      while (!terminal(*cur)) {
        SearchNode* parent = cur;
        cur = expand_step(*parent, iter, first_step ? Phase::expansion : Phase::simulation,
                          trace);
        for (const auto& [id, child] : parent->children) added.emplace_back(parent, id);
        first_step = false;
        path.push_back(cur);
      }
      backprop(path);
      std::vector<TrajectoryStep> trajectory;
      trajectory.reserve(path.size());
      for (const SearchNode* node : path) {
        trajectory.push_back(TrajectoryStep{node->action, node->reward});
      }
      trace.trajectories.push_back(std::move(trajectory));
    } catch (const std::exception& e) {
      // Discard the partial iteration: drop its events and tree additions.
      trace.events.resize(event_mark);
      for (auto it = added.rbegin(); it != added.rend(); ++it) {
        it->first->children.erase(it->second);
      }
      trace.valid = false;
      trace.error = e.what();
      return trace;
    }
  }
  return trace;
}

}  // namespace zsicl
