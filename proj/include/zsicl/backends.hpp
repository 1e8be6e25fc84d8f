#pragma once

/**
 * Model and embedding providers. The engine only ever sees the two narrow
 * interfaces; concrete implementations are the deterministic mock world
 * used by tests and benchmarks, and the HTTP clients in http_backend.hpp.
 */

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zsicl/corpus.hpp"
#include "zsicl/types.hpp"

namespace zsicl {

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  // Stable id string; keys the disk response cache.
  virtual std::string identity() const = 0;

  // demos may be empty (zero-shot). Returns a normalized distribution over
  // problem.label_space; greedy decoding is its argmax.
  virtual LabelDistribution predict_with_demos(
      const Problem& problem, const std::vector<PseudoDemonstration>& demos) = 0;

  LabelDistribution predict_zero_shot(const Problem& problem) {
    return predict_with_demos(problem, {});
  }

  // False when the backend can only one-hot a generated label, in which case
  // calibration degenerates and is disabled.
  virtual bool provides_scores() const { return true; }
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string identity() const = 0;
  virtual std::size_t dim() const = 0;
  // Unit-norm vector; throws std::invalid_argument on empty text.
  virtual std::vector<double> embed(std::string_view text) = 0;
};

/**
 * Deterministic mock world. The probability assigned to the gold label is
 *
 *   p = clamp(p0(problem) + beta*H - gamma*W, lo, hi)
 *
 * where H counts same-task demos whose pseudo-label matches their own gold
 * label and W counts same-task demos that got theirs wrong; the remaining
 * mass is spread uniformly over the other labels. p0(problem) is drawn once
 * per problem id from the seed (or pinned via p0_overrides).
 */
struct MockWorldConfig {
  double p0 = 0.7;
  double p0_spread = 0.0;  // per-problem jitter half-width around p0
  double beta = 0.1;
  double gamma = 0.2;
  double clamp_lo = 0.05;
  double clamp_hi = 0.95;
  std::uint64_t seed = 0;
  std::unordered_map<std::string, double> p0_overrides;

  void validate() const;  // 0 < lo < hi < 1; beta, gamma >= 0
};

double mock_base_probability(const MockWorldConfig& world, const Problem& problem);

// Pure function of (problem, demo multiset, world). Needs the corpus to look
// up each demo's task and gold label; every involved problem must carry gold.
LabelDistribution mock_predict_formula(const Problem& problem,
                                       const std::vector<PseudoDemonstration>& demos,
                                       const MockWorldConfig& world,
                                       const Corpus& corpus);

class MockModelBackend : public ModelBackend {
 public:
  MockModelBackend(MockWorldConfig world, const Corpus& corpus);

  std::string identity() const override;
  LabelDistribution predict_with_demos(
      const Problem& problem, const std::vector<PseudoDemonstration>& demos) override;

  const MockWorldConfig& world() const { return world_; }

 private:
  MockWorldConfig world_;
  const Corpus* corpus_;
};

// Feature-hashed character 3-grams in 64 dimensions, L2-normalized.
// Deterministic and dependency-free; similar text keeps higher cosine.
class HashingEmbeddingBackend : public EmbeddingBackend {
 public:
  static constexpr std::size_t kDim = 64;

  std::string identity() const override { return "hash3gram-64"; }
  std::size_t dim() const override { return kDim; }
  std::vector<double> embed(std::string_view text) override;
};

}  // namespace zsicl
