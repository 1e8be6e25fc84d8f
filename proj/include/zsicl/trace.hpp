#pragma once

/**
 * What a run leaves behind: one PredictionEvent per materialized prediction
 * (the unit the aggregator consumes) plus per-iteration trajectories and the
 * call counters used for cost reporting.
 */

#include <string>
#include <vector>

#include "zsicl/types.hpp"

namespace zsicl {

enum class Phase { root, expansion, simulation, single_pass };

const char* phase_name(Phase p);

struct PredictionEvent {
  std::string problem_id;
  LabelDistribution distribution;
  std::vector<std::string> demo_ids;  // demonstrations used, in prompt order
  int iteration = 0;
  Phase phase = Phase::root;
  bool from_cache = false;
};

struct TrajectoryStep {
  std::string problem_id;
  double reward = 0.0;
};

struct RunTrace {
  std::vector<PredictionEvent> events;
  // One entry per iteration; each completed trajectory is a full permutation
  // of the corpus ids.
  std::vector<std::vector<TrajectoryStep>> trajectories;
  long model_calls = 0;
  long cache_hits = 0;
  std::string root_problem_id;  // tree strategies only
  bool valid = true;
  std::string error;  // set when a backend failure aborted the run
};

}  // namespace zsicl
