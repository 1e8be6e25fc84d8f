#include "zsicl/backends.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "zsicl/rng.hpp"
#include "zsicl/simd/kernels.hpp"

namespace zsicl {

std::size_t LabelDistribution::argmax() const {
  if (probs.empty()) throw std::logic_error("argmax of empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

double LabelDistribution::max_prob() const { return probs[argmax()]; }

void LabelDistribution::validate(std::size_t n_labels) const {
  if (probs.size() != n_labels) {
    throw std::runtime_error("distribution arity " + std::to_string(probs.size()) +
                             " does not match label space of " + std::to_string(n_labels));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::runtime_error("distribution has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::runtime_error("distribution sums to " + std::to_string(sum));
  }
}

double confidence_of(const LabelDistribution& dist) { return dist.max_prob(); }

PseudoDemonstration make_demo(const Problem& problem, LabelDistribution distribution,
                              std::vector<double> embedding) {
  distribution.validate(problem.label_space.size());
  PseudoDemonstration demo;
  demo.problem_id = problem.id;
  const std::size_t best = distribution.argmax();
  demo.predicted_label = problem.label_space[best];
  demo.confidence = distribution.probs[best];
  demo.distribution = std::move(distribution);
  demo.embedding = std::move(embedding);
  return demo;
}

void MockWorldConfig::validate() const {
  if (!(clamp_lo > 0.0 && clamp_lo < clamp_hi && clamp_hi < 1.0)) {
    throw std::invalid_argument("mock world clamp bounds must satisfy 0 < lo < hi < 1");
  }
  if (beta < 0.0 || gamma < 0.0) {
    throw std::invalid_argument("mock world beta and gamma must be non-negative");
  }
  if (p0_spread < 0.0) {
    throw std::invalid_argument("mock world p0_spread must be non-negative");
  }
}

double mock_base_probability(const MockWorldConfig& world, const Problem& problem) {
  if (auto it = world.p0_overrides.find(problem.id); it != world.p0_overrides.end()) {
    return it->second;
  }
  double p = world.p0;
  if (world.p0_spread > 0.0) {
    const std::uint64_t bits = rng::splitmix64(world.seed ^ rng::fnv1a64(problem.id));
    p += world.p0_spread * (2.0 * rng::unit_from_bits(bits) - 1.0);
  }
  return std::clamp(p, world.clamp_lo, world.clamp_hi);
}

LabelDistribution mock_predict_formula(const Problem& problem,
                                       const std::vector<PseudoDemonstration>& demos,
                                       const MockWorldConfig& world,
                                       const Corpus& corpus) {
  if (!problem.gold_label) {
    throw std::runtime_error("mock backend requires gold label on problem '" + problem.id + "'");
  }
  int helpful = 0;
  int harmful = 0;
  for (const PseudoDemonstration& d : demos) {
    const Problem& src = corpus.by_id(d.problem_id);
    if (src.task_id != problem.task_id) continue;
    if (!src.gold_label) {
      throw std::runtime_error("mock backend requires gold label on demo problem '" +
                               src.id + "'");
    }
    if (d.predicted_label == *src.gold_label) {
      ++helpful;
    } else {
      ++harmful;
    }
  }
  const double p_gold =
      std::clamp(mock_base_probability(world, problem) + world.beta * helpful -
                     world.gamma * harmful,
                 world.clamp_lo, world.clamp_hi);

  const auto& labels = problem.label_space;
  const double rest = (1.0 - p_gold) / static_cast<double>(labels.size() - 1);
  LabelDistribution dist;
  dist.probs.resize(labels.size(), rest);
  const auto gold_it = std::find(labels.begin(), labels.end(), *problem.gold_label);
  dist.probs[static_cast<std::size_t>(gold_it - labels.begin())] = p_gold;
  return dist;
}

MockModelBackend::MockModelBackend(MockWorldConfig world, const Corpus& corpus)
    : world_(std::move(world)), corpus_(&corpus) {
  world_.validate();
}

std::string MockModelBackend::identity() const {
  std::ostringstream id;
  id << "mock:" << world_.seed << ":" << world_.p0 << ":" << world_.p0_spread << ":"
     << world_.beta << ":" << world_.gamma << ":" << world_.clamp_lo << ":"
     << world_.clamp_hi;
  return id.str();
}

LabelDistribution MockModelBackend::predict_with_demos(
    const Problem& problem, const std::vector<PseudoDemonstration>& demos) {
  return mock_predict_formula(problem, demos, world_, *corpus_);
}

std::vector<double> HashingEmbeddingBackend::embed(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("cannot embed empty text");
  std::vector<double> v(kDim, 0.0);
  auto bump = [&v](std::string_view gram) {
    const std::uint64_t h = rng::fnv1a64(gram);
    const double sign = ((h >> 32) & 1u) ? 1.0 : -1.0;
    v[h % kDim] += sign;
  };
  if (text.size() < 3) {
    bump(text);
  } else {
    for (std::size_t i = 0; i + 3 <= text.size(); ++i) bump(text.substr(i, 3));
  }
  // Signed buckets can cancel to zero on tiny inputs; pin a deterministic axis.
  if (simd::kernels().squared_norm(v.data(), v.size()) == 0.0) {
    v[rng::fnv1a64(text) % kDim] = 1.0;
  }
  simd::l2_normalize(v);
  return v;
}

}  // namespace zsicl
