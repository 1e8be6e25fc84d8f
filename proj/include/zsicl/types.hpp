#pragma once

/**
 * Value types shared across the planner: label distributions produced by
 * model backends and the pseudo-demonstrations built from them.
 */

#include <string>
#include <vector>

#include "zsicl/corpus.hpp"

namespace zsicl {

struct LabelDistribution {
  // Aligned with the owning problem's label_space.
  std::vector<double> probs;

  // Ties break toward the earlier label.
  std::size_t argmax() const;
  double max_prob() const;

  // Simplex check: non-negative entries summing to 1 within 1e-9 and the
  // expected arity. Throws on violation.
  void validate(std::size_t n_labels) const;
};

// Max entry of a distribution; the reward/confidence signal.
double confidence_of(const LabelDistribution& dist);

struct PseudoDemonstration {
  std::string problem_id;
  std::string predicted_label;
  LabelDistribution distribution;
  double confidence = 0.0;
  std::vector<double> embedding;  // unit norm
};

// Builds a demonstration whose predicted label / confidence are derived from
// the distribution, keeping the struct internally consistent.
PseudoDemonstration make_demo(const Problem& problem, LabelDistribution distribution,
                              std::vector<double> embedding);

}  // namespace zsicl
