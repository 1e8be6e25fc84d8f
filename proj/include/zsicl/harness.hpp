#pragma once

/**
 * Experiment runner and CLI entry point. A run is: load corpus, build the
 * configured backend pair, execute one strategy, optionally compute the
 * calibration prior, score, and emit a JSON report. Configs come from a flat
 * key=value file with CLI flags taking precedence.
 */

#include <string>
#include <vector>

#include "zsicl/backends.hpp"
#include "zsicl/baselines.hpp"
#include "zsicl/corpus.hpp"
#include "zsicl/engine.hpp"
#include "zsicl/http_backend.hpp"
#include "zsicl/inference.hpp"
#include "zsicl/prompt.hpp"

namespace zsicl {

struct ExperimentConfig {
  std::string corpus_path;
  std::string strategy = "dawn";
  EngineConfig engine;

  enum class BackendKind { mock, http };
  BackendKind backend = BackendKind::mock;
  MockWorldConfig mock_world;
  bool mock_seed_explicit = false;  // otherwise mock_world.seed follows engine.seed
  HttpBackendConfig http;

  enum class EmbeddingKind { hash, http };
  EmbeddingKind embedding = EmbeddingKind::hash;
  std::string http_embed_model;
  int http_embed_dim = 1024;

  TemplateId template_id = TemplateId::bbh;
  bool demos_explicit = false;  // false: template default (3 bbh / 4 mmlu)
  bool calibration = true;
  std::string response_cache_dir;
  std::string output_path;
  int beam_width = 3;
  int beam_keep = 5;
};

// Flat key=value text, '#' comments. Unknown keys are errors.
void apply_config_file(ExperimentConfig& cfg, const std::string& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value);

struct ExperimentResult {
  Report report;
  RunTrace trace;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Report as pretty-printed JSON; stable field order so identical runs render
// byte-identically apart from the wall_time_ms line.
std::string render_report(const Report& report);

struct CompareRow {
  std::string strategy;
  std::optional<double> accuracy;
  long model_calls = 0;
  double call_ratio = 1.0;  // vs the cheapest row
};

std::vector<CompareRow> compare_strategies(const ExperimentConfig& base,
                                           const std::vector<std::string>& strategies);
std::string render_compare_table(const std::vector<CompareRow>& rows);

// Full CLI (subcommands: run, compare, prior, cache). args excludes argv[0].
int cli_main(const std::vector<std::string>& args);

}  // namespace zsicl
