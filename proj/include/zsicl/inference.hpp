#pragma once

/**
 * From prediction events to final answers: per-problem aggregation averages
 * every recorded distribution; calibration divides each label's probability
 * by a corpus-wide zero-shot prior for that label before the argmax.
 */

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zsicl/backends.hpp"
#include "zsicl/corpus.hpp"
#include "zsicl/trace.hpp"

namespace zsicl {

class Prior {
 public:
  explicit Prior(double floor = 1e-6) : floor_(floor) {}

  static std::string space_key(const std::vector<std::string>& labels);

  // Stores a per-label-space prior, flooring entries to avoid zero divisors.
  void set(const std::vector<std::string>& labels, std::vector<double> probs);
  const std::vector<double>* find(const std::vector<std::string>& labels) const;

  double floor() const { return floor_; }
  const std::map<std::string, std::vector<double>>& by_space() const { return by_space_; }

  // Uniform prior over every label space in the corpus; calibrating with it
  // never changes an argmax.
  static Prior uniform_for(const Corpus& corpus);

 private:
  std::map<std::string, std::vector<double>> by_space_;
  double floor_;
};

// Element-wise mean of zero-shot distributions, grouped by label space.
// Costs one zero-shot call per problem. Throws when the backend cannot
// provide real distributions (one-hot fallback would poison the prior).
Prior compute_prior(const Corpus& corpus, ModelBackend& backend, double floor = 1e-6);

struct AggregateResult {
  std::size_t label_index = 0;
  std::string label;
  std::vector<double> scores;  // mean probabilities, or calibrated ratios
};

// Mean distribution over all events; argmax ties resolve to label-space
// order. Throws on zero events (a planning bug upstream).
AggregateResult aggregate(const Problem& problem,
                          const std::vector<const PredictionEvent*>& events);

// score(y) = mean over events of Pr(y)/prior(y); scores are intentionally
// left unnormalized, only the argmax is consumed.
AggregateResult aggregate_calibrated(const Problem& problem,
                                     const std::vector<const PredictionEvent*>& events,
                                     const Prior& prior);

struct ProblemResult {
  std::string id;
  std::string task_id;
  std::string final_label;
  std::optional<std::string> gold;
  std::optional<bool> correct;
  int event_count = 0;
};

struct Report {
  std::vector<ProblemResult> per_problem;  // corpus order
  // Tasks in corpus task order; only tasks with any gold labels appear.
  std::vector<std::pair<std::string, double>> per_task_accuracy;
  std::optional<double> overall_accuracy;
  long model_calls = 0;
  long cache_hits = 0;
  long prior_calls = 0;
  bool calibrated = false;
  std::vector<std::string> warnings;
  std::string root_problem_id;
  std::string strategy;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;
  std::vector<std::pair<std::string, std::string>> config_echo;
};

// Scores a completed trace: aggregated (optionally calibrated) answers,
// accuracy against gold labels where present, and the cost counters.
Report score_run(const RunTrace& trace, const Corpus& corpus,
                 const Prior* prior = nullptr);

}  // namespace zsicl
