#include "zsicl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace zsicl {

std::string Prior::space_key(const std::vector<std::string>& labels) {
  std::string key;
  for (const std::string& label : labels) {
    key += label;
    key += '\x1f';
  }
  return key;
}

void Prior::set(const std::vector<std::string>& labels, std::vector<double> probs) {
  if (labels.size() != probs.size()) {
    throw std::invalid_argument("prior arity does not match label space");
  }
  for (double& p : probs) p = std::max(p, floor_);
  by_space_[space_key(labels)] = std::move(probs);
}

const std::vector<double>* Prior::find(const std::vector<std::string>& labels) const {
  auto it = by_space_.find(space_key(labels));
  return it == by_space_.end() ? nullptr : &it->second;
}

Prior Prior::uniform_for(const Corpus& corpus) {
  Prior prior;
  for (const Problem& p : corpus.problems()) {
    if (!prior.find(p.label_space)) {
      prior.set(p.label_space,
                std::vector<double>(p.label_space.size(),
                                    1.0 / static_cast<double>(p.label_space.size())));
    }
  }
  return prior;
}

Prior compute_prior(const Corpus& corpus, ModelBackend& backend, double floor) {
  if (!backend.provides_scores()) {
    throw std::runtime_error(
        "calibration needs label distributions, but backend '" + backend.identity() +
        "' only one-hots a generated label");
  }
  struct Group {
    const std::vector<std::string>* labels;
    std::vector<double> sum;
    std::size_t count = 0;
  };
  std::map<std::string, Group> groups;
  for (const Problem& p : corpus.problems()) {
    LabelDistribution dist = backend.predict_zero_shot(p);
    dist.validate(p.label_space.size());
    auto [it, fresh] = groups.try_emplace(Prior::space_key(p.label_space));
    if (fresh) {
      it->second.labels = &p.label_space;
      it->second.sum.assign(p.label_space.size(), 0.0);
    }
    for (std::size_t i = 0; i < dist.probs.size(); ++i) it->second.sum[i] += dist.probs[i];
    ++it->second.count;
  }
  Prior prior(floor);
  for (auto& [key, group] : groups) {
    std::vector<double> mean(group.sum.size());
    double total = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      mean[i] = group.sum[i] / static_cast<double>(group.count);
      total += mean[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::logic_error("prior for a label space does not sum to 1");
    }
    prior.set(*group.labels, std::move(mean));
  }
  return prior;
}

namespace {

std::vector<double> mean_distribution(const Problem& problem,
                                      const std::vector<const PredictionEvent*>& events) {
  if (events.empty()) {
    throw std::runtime_error("no prediction events for problem '" + problem.id + "'");
  }
  std::vector<double> mean(problem.label_space.size(), 0.0);
  for (const PredictionEvent* ev : events) {
    ev->distribution.validate(problem.label_space.size());
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += ev->distribution.probs[i];
  }
  for (double& v : mean) v /= static_cast<double>(events.size());
  return mean;
}

AggregateResult from_scores(const Problem& problem, std::vector<double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return AggregateResult{best, problem.label_space[best], std::move(scores)};
}

}  // namespace

AggregateResult aggregate(const Problem& problem,
                          const std::vector<const PredictionEvent*>& events) {
  return from_scores(problem, mean_distribution(problem, events));
}

AggregateResult aggregate_calibrated(const Problem& problem,
                                     const std::vector<const PredictionEvent*>& events,
                                     const Prior& prior) {
  if (events.empty()) {
    throw std::runtime_error("no prediction events for problem '" + problem.id + "'");
  }
  const std::vector<double>* p = prior.find(problem.label_space);
  if (!p) {
    throw std::runtime_error("no prior for the label space of problem '" + problem.id + "'");
  }
  std::vector<double> scores(problem.label_space.size(), 0.0);
  for (const PredictionEvent* ev : events) {
    ev->distribution.validate(problem.label_space.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] += ev->distribution.probs[i] / (*p)[i];
    }
  }
  for (double& s : scores) s /= static_cast<double>(events.size());
  return from_scores(problem, std::move(scores));
}

Report score_run(const RunTrace& trace, const Corpus& corpus, const Prior* prior) {
  if (!trace.valid) {
    throw std::invalid_argument("trace is flagged invalid: " + trace.error);
  }
  std::unordered_map<std::string_view, std::vector<const PredictionEvent*>> by_problem;
  for (const PredictionEvent& ev : trace.events) {
    by_problem[ev.problem_id].push_back(&ev);
  }

  Report report;
  report.model_calls = trace.model_calls;
  report.cache_hits = trace.cache_hits;
  report.calibrated = prior != nullptr;
  report.root_problem_id = trace.root_problem_id;

  struct TaskTally {
    long correct = 0;
    long with_gold = 0;
  };
  std::unordered_map<std::string_view, TaskTally> tasks;
  long correct_total = 0;
  long gold_total = 0;
  for (const Problem& problem : corpus.problems()) {
    auto it = by_problem.find(problem.id);
    const auto events = it == by_problem.end()
                            ? std::vector<const PredictionEvent*>{}
                            : it->second;
    const AggregateResult agg = prior ? aggregate_calibrated(problem, events, *prior)
                                      : aggregate(problem, events);
    ProblemResult result;
    result.id = problem.id;
    result.task_id = problem.task_id;
    result.final_label = agg.label;
    result.gold = problem.gold_label;
    result.event_count = static_cast<int>(events.size());
    if (problem.gold_label) {
      result.correct = agg.label == *problem.gold_label;
      TaskTally& tally = tasks[problem.task_id];
      ++tally.with_gold;
      ++gold_total;
      if (*result.correct) {
        ++tally.correct;
        ++correct_total;
      }
    }
    report.per_problem.push_back(std::move(result));
  }
  if (gold_total > 0) {
    report.overall_accuracy =
        static_cast<double>(correct_total) / static_cast<double>(gold_total);
  }
  for (const std::string& task : corpus.task_order()) {
    auto it = tasks.find(task);
    if (it != tasks.end() && it->second.with_gold > 0) {
      report.per_task_accuracy.emplace_back(
          task, static_cast<double>(it->second.correct) /
                    static_cast<double>(it->second.with_gold));
    }
  }
  return report;
}

}  // namespace zsicl
