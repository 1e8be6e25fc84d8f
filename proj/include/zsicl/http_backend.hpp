#pragma once

/**
 * OpenAI-compatible HTTP backends with a content-addressed disk response
 * cache. Three scoring modes:
 *
 *   top_logprobs   one chat-completions request per prediction; label scores
 *                  come from the first generated token's top logprobs.
 *   per_label      one completions request per label with echo+logprobs; the
 *                  label continuation's summed logprob scores it.
 *   generate_only  chat completion matched to the label space as a one-hot
 *                  distribution (calibration is disabled for this mode).
 *
 * When a mode cannot recover scores for any label it falls back to one-hot
 * on the generated text and counts the fallback, which the report surfaces.
 *
 * Cache entries are keyed by (backend identity, rendered prompt, label
 * space); a warm cache replays distributions with zero network calls.
 * Writes go through a temp file + atomic rename so concurrent readers never
 * observe partial entries.
 */

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zsicl/backends.hpp"
#include "zsicl/corpus.hpp"
#include "zsicl/prompt.hpp"

namespace zsicl {

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::vector<double>> get(const std::string& identity,
                                         const std::string& prompt,
                                         const std::vector<std::string>& labels) const;
  void put(const std::string& identity, const std::string& prompt,
           const std::vector<std::string>& labels, const std::vector<double>& probs) const;

  std::size_t entry_count() const;
  void clear() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(const std::string& identity, const std::string& prompt,
                                   const std::vector<std::string>& labels) const;
  std::filesystem::path dir_;
};

enum class ScoreMode { top_logprobs, per_label, generate_only };

ScoreMode parse_score_mode(std::string_view name);
std::string_view score_mode_name(ScoreMode mode);

struct HttpBackendConfig {
  std::string base_url;  // e.g. http://localhost:8080
  std::string model;
  std::string api_key_env = "ZSICL_API_KEY";
  ScoreMode score_mode = ScoreMode::top_logprobs;
  TemplateId template_id = TemplateId::bbh;
  int max_attempts = 3;
  int retry_base_ms = 100;
  int top_logprobs = 20;
  int timeout_sec = 120;
  std::string cache_dir;  // empty disables the disk cache
};

class HttpModelBackend : public ModelBackend {
 public:
  HttpModelBackend(HttpBackendConfig config, const Corpus& corpus);

  std::string identity() const override;
  LabelDistribution predict_with_demos(
      const Problem& problem, const std::vector<PseudoDemonstration>& demos) override;
  bool provides_scores() const override {
    return config_.score_mode != ScoreMode::generate_only;
  }

  long network_calls() const { return network_calls_.load(); }
  long one_hot_fallbacks() const { return one_hot_fallbacks_.load(); }

 private:
  std::string post_json(const std::string& path, const std::string& body);
  LabelDistribution score_top_logprobs(const Problem& problem, const std::string& prompt);
  LabelDistribution score_per_label(const Problem& problem, const std::string& prompt);
  LabelDistribution one_hot_from_text(const Problem& problem, const std::string& text);

  HttpBackendConfig config_;
  const Corpus* corpus_;
  std::optional<ResponseCache> cache_;
  std::atomic<long> network_calls_{0};
  std::atomic<long> one_hot_fallbacks_{0};
};

class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  HttpEmbeddingBackend(HttpBackendConfig config, std::size_t dim);

  std::string identity() const override;
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(std::string_view text) override;

  long network_calls() const { return network_calls_.load(); }

 private:
  std::string post_json(const std::string& path, const std::string& body);

  HttpBackendConfig config_;
  std::size_t dim_;
  std::optional<ResponseCache> cache_;
  std::atomic<long> network_calls_{0};
};

}  // namespace zsicl
