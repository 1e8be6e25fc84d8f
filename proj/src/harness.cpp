#include "zsicl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

namespace zsicl {

namespace {

using ordered_json = nlohmann::ordered_json;

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw std::invalid_argument("config key '" + key + "' expects a boolean, got '" +
                              value + "'");
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
  std::istringstream in(value);
  T out;
  in >> out;
  if (in.fail() || !in.eof()) {
    throw std::invalid_argument("config key '" + key + "' expects a number, got '" +
                                value + "'");
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value) {
  if (key == "corpus") {
    cfg.corpus_path = value;
  } else if (key == "strategy") {
    cfg.strategy = value;
  } else if (key == "seed") {
    cfg.engine.seed = parse_number<std::uint64_t>(value, key);
  } else if (key == "iterations") {
    cfg.engine.iterations = parse_number<int>(value, key);
  } else if (key == "retrieve_k") {
    cfg.engine.retrieve_k = parse_number<int>(value, key);
  } else if (key == "expand_k") {
    cfg.engine.expand_k = parse_number<int>(value, key);
  } else if (key == "q_weight") {
    cfg.engine.q_weight = parse_number<double>(value, key);
  } else if (key == "explore_weight") {
    cfg.engine.explore_weight = parse_number<double>(value, key);
  } else if (key == "cache_threshold") {
    cfg.engine.cache_threshold = parse_number<double>(value, key);
  } else if (key == "demos") {
    cfg.engine.demos_per_prompt = parse_number<int>(value, key);
    cfg.demos_explicit = true;
  } else if (key == "pool_k") {
    cfg.engine.pool_k = parse_number<int>(value, key);
  } else if (key == "demo_selection") {
    cfg.engine.demo_selection = parse_demo_selection(value);
  } else if (key == "cache") {
    cfg.engine.cache_enabled = parse_bool(value, key);
  } else if (key == "cache_in_expansion") {
    cfg.engine.cache_in_expansion = parse_bool(value, key);
  } else if (key == "backend") {
    if (value == "mock") {
      cfg.backend = ExperimentConfig::BackendKind::mock;
    } else if (value == "http") {
      cfg.backend = ExperimentConfig::BackendKind::http;
    } else {
      throw std::invalid_argument("backend must be 'mock' or 'http', got '" + value + "'");
    }
  } else if (key == "template") {
    cfg.template_id = parse_template(value);
  } else if (key == "calibration") {
    cfg.calibration = parse_bool(value, key);
  } else if (key == "output") {
    cfg.output_path = value;
  } else if (key == "response_cache_dir") {
    cfg.response_cache_dir = value;
  } else if (key == "beam_width") {
    cfg.beam_width = parse_number<int>(value, key);
  } else if (key == "beam_keep") {
    cfg.beam_keep = parse_number<int>(value, key);
  } else if (key == "mock_p0") {
    cfg.mock_world.p0 = parse_number<double>(value, key);
  } else if (key == "mock_p0_spread") {
    cfg.mock_world.p0_spread = parse_number<double>(value, key);
  } else if (key == "mock_beta") {
    cfg.mock_world.beta = parse_number<double>(value, key);
  } else if (key == "mock_gamma") {
    cfg.mock_world.gamma = parse_number<double>(value, key);
  } else if (key == "mock_clamp_lo") {
    cfg.mock_world.clamp_lo = parse_number<double>(value, key);
  } else if (key == "mock_clamp_hi") {
    cfg.mock_world.clamp_hi = parse_number<double>(value, key);
  } else if (key == "mock_seed") {
    cfg.mock_world.seed = parse_number<std::uint64_t>(value, key);
    cfg.mock_seed_explicit = true;
  } else if (key == "http_base_url") {
    cfg.http.base_url = value;
  } else if (key == "http_model") {
    cfg.http.model = value;
  } else if (key == "http_score_mode") {
    cfg.http.score_mode = parse_score_mode(value);
  } else if (key == "http_api_key_env") {
    cfg.http.api_key_env = value;
  } else if (key == "http_max_attempts") {
    cfg.http.max_attempts = parse_number<int>(value, key);
  } else if (key == "http_retry_base_ms") {
    cfg.http.retry_base_ms = parse_number<int>(value, key);
  } else if (key == "http_timeout_sec") {
    cfg.http.timeout_sec = parse_number<int>(value, key);
  } else if (key == "embedding") {
    if (value == "hash") {
      cfg.embedding = ExperimentConfig::EmbeddingKind::hash;
    } else if (value == "http") {
      cfg.embedding = ExperimentConfig::EmbeddingKind::http;
    } else {
      throw std::invalid_argument("embedding must be 'hash' or 'http', got '" + value + "'");
    }
  } else if (key == "http_embed_model") {
    cfg.http_embed_model = value;
  } else if (key == "http_embed_dim") {
    cfg.http_embed_dim = parse_number<int>(value, key);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 'key = value'");
    }
    try {
      apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

namespace {

std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> echo;
  auto add = [&echo](std::string k, std::string v) {
    echo.emplace_back(std::move(k), std::move(v));
  };
  auto num = [](double v) {
    std::ostringstream out;
    out << v;
    return out.str();
  };
  add("corpus", cfg.corpus_path);
  add("strategy", cfg.strategy);
  add("seed", std::to_string(cfg.engine.seed));
  add("iterations", std::to_string(cfg.engine.iterations));
  add("retrieve_k", std::to_string(cfg.engine.retrieve_k));
  add("expand_k", std::to_string(cfg.engine.expand_k));
  add("q_weight", num(cfg.engine.q_weight));
  add("explore_weight", num(cfg.engine.explore_weight));
  add("cache_threshold", num(cfg.engine.cache_threshold));
  add("demos", std::to_string(cfg.engine.demos_per_prompt));
  add("pool_k", std::to_string(cfg.engine.effective_pool_k()));
  add("demo_selection", std::string(demo_selection_name(cfg.engine.demo_selection)));
  add("cache", cfg.engine.cache_enabled ? "true" : "false");
  add("cache_in_expansion", cfg.engine.cache_in_expansion ? "true" : "false");
  add("backend",
      cfg.backend == ExperimentConfig::BackendKind::mock ? "mock" : "http");
  add("template", std::string(template_name(cfg.template_id)));
  add("calibration", cfg.calibration ? "true" : "false");
  if (cfg.backend == ExperimentConfig::BackendKind::mock) {
    add("mock_p0", num(cfg.mock_world.p0));
    add("mock_p0_spread", num(cfg.mock_world.p0_spread));
    add("mock_beta", num(cfg.mock_world.beta));
    add("mock_gamma", num(cfg.mock_world.gamma));
    add("mock_clamp_lo", num(cfg.mock_world.clamp_lo));
    add("mock_clamp_hi", num(cfg.mock_world.clamp_hi));
    add("mock_seed", std::to_string(cfg.mock_world.seed));
  } else {
    add("http_base_url", cfg.http.base_url);
    add("http_model", cfg.http.model);
    add("http_score_mode", std::string(score_mode_name(cfg.http.score_mode)));
  }
  if (cfg.strategy == "beam") {
    add("beam_width", std::to_string(cfg.beam_width));
    add("beam_keep", std::to_string(cfg.beam_keep));
  }
  if (!cfg.response_cache_dir.empty()) add("response_cache_dir", cfg.response_cache_dir);
  return echo;
}

ExperimentConfig resolve(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (!cfg.demos_explicit) {
    cfg.engine.demos_per_prompt = cfg.template_id == TemplateId::mmlu ? 4 : 3;
  }
  if (!cfg.mock_seed_explicit) cfg.mock_world.seed = cfg.engine.seed;
  if (cfg.backend == ExperimentConfig::BackendKind::http) {
    cfg.http.template_id = cfg.template_id;
    if (cfg.http.cache_dir.empty()) cfg.http.cache_dir = cfg.response_cache_dir;
  }
  return cfg;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg_in) {
  const ExperimentConfig cfg = resolve(cfg_in);
  if (cfg.corpus_path.empty()) {
    throw std::invalid_argument("no corpus configured (set 'corpus' or --corpus)");
  }
  const StrategyId strategy = parse_strategy(cfg.strategy);
  const Corpus corpus = load_corpus(cfg.corpus_path);

  std::unique_ptr<ModelBackend> model;
  HttpModelBackend* http_model = nullptr;
  if (cfg.backend == ExperimentConfig::BackendKind::mock) {
    model = std::make_unique<MockModelBackend>(cfg.mock_world, corpus);
  } else {
    auto m = std::make_unique<HttpModelBackend>(cfg.http, corpus);
    http_model = m.get();
    model = std::move(m);
  }
  std::unique_ptr<EmbeddingBackend> embedder;
  if (cfg.embedding == ExperimentConfig::EmbeddingKind::hash) {
    embedder = std::make_unique<HashingEmbeddingBackend>();
  } else {
    HttpBackendConfig ec = cfg.http;
    if (!cfg.http_embed_model.empty()) ec.model = cfg.http_embed_model;
    embedder = std::make_unique<HttpEmbeddingBackend>(
        ec, static_cast<std::size_t>(cfg.http_embed_dim));
  }

  const auto started = std::chrono::steady_clock::now();
  RunTrace trace;
  switch (strategy) {
    case StrategyId::dawn: {
      Engine engine(corpus, *model, *embedder, cfg.engine);
      trace = engine.run();
      break;
    }
    case StrategyId::mc_random:
      trace = run_mc(corpus, *model, *embedder, cfg.engine);
      break;
    case StrategyId::greedy_duct:
      trace = run_greedy(corpus, *model, *embedder, cfg.engine);
      break;
    case StrategyId::beam:
      trace = run_beam(corpus, *model, *embedder, cfg.engine, cfg.beam_width,
                       cfg.beam_keep);
      break;
    case StrategyId::mcts_vanilla_uct:
      trace = run_vanilla_uct(corpus, *model, *embedder, cfg.engine);
      break;
    case StrategyId::order_random:
      trace = run_fixed_order(corpus, *model, *embedder, cfg.engine, FixedOrder::random);
      break;
    case StrategyId::order_sequential:
      trace = run_fixed_order(corpus, *model, *embedder, cfg.engine,
                              FixedOrder::sequential);
      break;
  }

  std::vector<std::string> warnings;
  std::optional<Prior> prior;
  long prior_calls = 0;
  if (trace.valid && cfg.calibration) {
    if (model->provides_scores()) {
      prior = compute_prior(corpus, *model);
      prior_calls = static_cast<long>(corpus.size());
    } else {
      warnings.push_back(
          "calibration disabled: backend cannot score labels (one-hot only)");
    }
  }

  Report report;
  if (trace.valid) {
    report = score_run(trace, corpus, prior ? &*prior : nullptr);
  } else {
    report.model_calls = trace.model_calls;
    report.cache_hits = trace.cache_hits;
    report.root_problem_id = trace.root_problem_id;
    warnings.push_back("run aborted, partial trace: " + trace.error);
  }
  if (http_model && http_model->one_hot_fallbacks() > 0) {
    warnings.push_back(std::to_string(http_model->one_hot_fallbacks()) +
                       " predictions fell back to one-hot label matching");
  }
  report.warnings.insert(report.warnings.end(), warnings.begin(), warnings.end());
  report.prior_calls = prior_calls;
  report.strategy = cfg.strategy;
  report.seed = cfg.engine.seed;
  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();
  report.config_echo = config_echo(cfg);
  return ExperimentResult{std::move(report), std::move(trace)};
}

std::string render_report(const Report& report) {
  ordered_json j;
  j["strategy"] = report.strategy;
  j["seed"] = report.seed;
  j["calibrated"] = report.calibrated;
  if (report.overall_accuracy) {
    j["overall_accuracy"] = *report.overall_accuracy;
  } else {
    j["overall_accuracy"] = nullptr;
  }
  ordered_json counters;
  counters["model_calls"] = report.model_calls;
  counters["cache_hits"] = report.cache_hits;
  counters["prior_calls"] = report.prior_calls;
  counters["wall_time_ms"] = report.wall_time_ms;
  j["counters"] = counters;
  j["root_problem_id"] = report.root_problem_id;
  j["warnings"] = report.warnings;
  ordered_json tasks = ordered_json::object();
  for (const auto& [task, acc] : report.per_task_accuracy) tasks[task] = acc;
  j["per_task_accuracy"] = tasks;
  ordered_json problems = ordered_json::array();
  for (const ProblemResult& pr : report.per_problem) {
    ordered_json p;
    p["id"] = pr.id;
    p["task"] = pr.task_id;
    p["final"] = pr.final_label;
    if (pr.gold) {
      p["gold"] = *pr.gold;
    } else {
      p["gold"] = nullptr;
    }
    if (pr.correct) {
      p["correct"] = *pr.correct;
    } else {
      p["correct"] = nullptr;
    }
    p["events"] = pr.event_count;
    problems.push_back(p);
  }
  j["per_problem"] = problems;
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : report.config_echo) config[k] = v;
  j["config"] = config;
  return j.dump(2) + "\n";
}

std::vector<CompareRow> compare_strategies(const ExperimentConfig& base,
                                           const std::vector<std::string>& strategies) {
  if (strategies.empty()) throw std::invalid_argument("compare needs at least one strategy");
  std::vector<CompareRow> rows;
  for (const std::string& name : strategies) {
    ExperimentConfig cfg = base;
    cfg.strategy = name;
    const ExperimentResult result = run_experiment(cfg);
    if (!result.trace.valid) {
      throw std::runtime_error("strategy '" + name + "' aborted: " + result.trace.error);
    }
    CompareRow row;
    row.strategy = name;
    row.accuracy = result.report.overall_accuracy;
    row.model_calls = result.report.model_calls;
    rows.push_back(std::move(row));
  }
  long cheapest = rows.front().model_calls;
  for (const CompareRow& row : rows) cheapest = std::min(cheapest, row.model_calls);
  for (CompareRow& row : rows) {
    row.call_ratio = cheapest > 0
                         ? static_cast<double>(row.model_calls) / static_cast<double>(cheapest)
                         : 1.0;
  }
  return rows;
}

std::string render_compare_table(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  out << "strategy            accuracy   model_calls  calls_vs_cheapest\n";
  for (const CompareRow& row : rows) {
    char acc[32];
    if (row.accuracy) {
      std::snprintf(acc, sizeof(acc), "%.4f", *row.accuracy);
    } else {
      std::snprintf(acc, sizeof(acc), "%s", "n/a");
    }
    char line[160];
    std::snprintf(line, sizeof(line), "%-19s %-10s %-12ld x%.1f\n", row.strategy.c_str(),
                  acc, row.model_calls, row.call_ratio);
    out << line;
  }
  return out.str();
}

namespace {

// Shared option block for subcommands that execute runs. Every provided flag
// funnels through apply_config_line so file and flag parsing stay identical.
class ConfigOptions {
 public:
  ConfigOptions(CLI::App& cmd, bool with_strategy) {
    config_opt_ = cmd.add_option("--config", config_files_,
                                 "config file(s), flat key = value lines");
    add(cmd, "--corpus", "corpus", "corpus JSONL path");
    if (with_strategy) {
      add(cmd, "--strategy", "strategy",
          "dawn, mc_random, greedy_duct, beam, mcts_vanilla_uct, order_random, "
          "order_sequential");
    }
    add(cmd, "--seed", "seed", "master seed");
    add(cmd, "--iterations", "iterations", "search iterations");
    add(cmd, "--retrieve-k", "retrieve_k", "retrieval count for the value initializer");
    add(cmd, "--expand-k", "expand_k", "expansion width");
    add(cmd, "--q-weight", "q_weight", "backed-up value weight");
    add(cmd, "--explore-weight", "explore_weight", "exploration constant");
    add(cmd, "--cache-threshold", "cache_threshold", "action cache admission threshold");
    add(cmd, "--demos", "demos", "demonstrations per prompt");
    add(cmd, "--pool-k", "pool_k", "demo construction pool size");
    add(cmd, "--demo-selection", "demo_selection",
        "topk_diverse, topk, or random");
    add(cmd, "--backend", "backend", "mock or http");
    add(cmd, "--template", "template", "bbh or mmlu");
    add(cmd, "--output", "output", "report output path");
    add(cmd, "--response-cache-dir", "response_cache_dir", "disk response cache directory");
    add(cmd, "--beam-width", "beam_width", "beam expansion width");
    add(cmd, "--beam-keep", "beam_keep", "beam frontier size");
    add(cmd, "--mock-p0", "mock_p0", "mock base correct probability");
    add(cmd, "--mock-p0-spread", "mock_p0_spread", "mock per-problem p0 jitter");
    add(cmd, "--mock-beta", "mock_beta", "mock helpful-demo bonus");
    add(cmd, "--mock-gamma", "mock_gamma", "mock harmful-demo penalty");
    add(cmd, "--mock-clamp-lo", "mock_clamp_lo", "mock probability floor");
    add(cmd, "--mock-clamp-hi", "mock_clamp_hi", "mock probability ceiling");
    add(cmd, "--mock-seed", "mock_seed", "mock world seed (defaults to --seed)");
    add(cmd, "--http-base-url", "http_base_url", "OpenAI-compatible endpoint base URL");
    add(cmd, "--http-model", "http_model", "model name");
    add(cmd, "--http-score-mode", "http_score_mode",
        "top_logprobs, per_label, or generate_only");
    add(cmd, "--http-api-key-env", "http_api_key_env", "env var holding the API token");
    add(cmd, "--http-max-attempts", "http_max_attempts", "HTTP retry budget");
    add(cmd, "--embedding", "embedding", "hash or http");
    add(cmd, "--http-embed-model", "http_embed_model", "embedding model name");
    add(cmd, "--http-embed-dim", "http_embed_dim", "embedding dimensionality");
    cache_on_ = cmd.add_flag("--cache", "enable the action cache");
    cache_off_ = cmd.add_flag("--no-cache", "disable the action cache");
    calib_on_ = cmd.add_flag("--calibration", "enable prior calibration");
    calib_off_ = cmd.add_flag("--no-calibration", "disable prior calibration");
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    for (const std::string& file : config_files_) apply_config_file(cfg, file);
    for (const auto& [flag, key] : bindings_) {
      if (flag->count() > 0) apply_config_line(cfg, key, flag->results().back());
    }
    if (cache_on_->count() && cache_off_->count()) {
      throw std::invalid_argument("--cache and --no-cache are mutually exclusive");
    }
    if (cache_on_->count()) cfg.engine.cache_enabled = true;
    if (cache_off_->count()) cfg.engine.cache_enabled = false;
    if (calib_on_->count() && calib_off_->count()) {
      throw std::invalid_argument("--calibration and --no-calibration are mutually exclusive");
    }
    if (calib_on_->count()) cfg.calibration = true;
    if (calib_off_->count()) cfg.calibration = false;
    return cfg;
  }

 private:
  void add(CLI::App& cmd, const std::string& flag, std::string key,
           const std::string& help) {
    CLI::Option* opt = cmd.add_option(flag, help)->expected(1);
    bindings_.emplace_back(opt, std::move(key));
  }

  std::vector<std::string> config_files_;
  CLI::Option* config_opt_ = nullptr;
  std::vector<std::pair<CLI::Option*, std::string>> bindings_;
  CLI::Option* cache_on_ = nullptr;
  CLI::Option* cache_off_ = nullptr;
  CLI::Option* calib_on_ = nullptr;
  CLI::Option* calib_off_ = nullptr;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"planner for solving batches of problems via zero-shot in-context learning"};
  app.require_subcommand(1);

  int rc = 0;

  // --- run ---
  CLI::App* run_cmd = app.add_subcommand("run", "execute one experiment and write a report");
  auto run_opts = std::make_shared<ConfigOptions>(*run_cmd, /*with_strategy=*/true);
  run_cmd->callback([&rc, run_opts, run_cmd]() {
    try {
      const ExperimentConfig cfg = run_opts->build();
      parse_strategy(cfg.strategy);  // validate before doing any work
      const ExperimentResult result = run_experiment(cfg);
      const std::string text = render_report(result.report);
      if (cfg.output_path.empty()) {
        std::cout << text;
      } else {
        write_text(cfg.output_path, text);
        const Report& r = result.report;
        std::cout << "strategy=" << r.strategy << " seed=" << r.seed << " accuracy="
                  << (r.overall_accuracy ? std::to_string(*r.overall_accuracy) : "n/a")
                  << " model_calls=" << r.model_calls << " cache_hits=" << r.cache_hits
                  << " report=" << cfg.output_path << "\n";
      }
      if (!result.trace.valid) {
        std::cerr << "error: " << result.trace.error << "\n";
        rc = 1;
      }
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << "\n\n" << run_cmd->help() << "\n";
      rc = 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = 1;
    }
  });

  // --- compare ---
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "run several strategies on one corpus and tabulate");
  auto compare_opts = std::make_shared<ConfigOptions>(*compare_cmd, /*with_strategy=*/false);
  auto strategies_csv = std::make_shared<std::string>();
  auto compare_output = std::make_shared<std::string>();
  compare_cmd->add_option("--strategies", *strategies_csv,
                          "comma-separated strategy names");
  compare_cmd->add_option("--table-output", *compare_output, "write the table here too");
  compare_cmd->callback([&rc, compare_opts, strategies_csv, compare_output,
                         compare_cmd]() {
    try {
      const ExperimentConfig base = compare_opts->build();
      const std::vector<std::string> strategies = split_csv(*strategies_csv);
      if (strategies.empty()) {
        throw std::invalid_argument("compare needs --strategies");
      }
      for (const std::string& s : strategies) parse_strategy(s);
      const auto rows = compare_strategies(base, strategies);
      const std::string table = render_compare_table(rows);
      std::cout << table;
      if (!compare_output->empty()) write_text(*compare_output, table);
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << "\n\n" << compare_cmd->help() << "\n";
      rc = 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = 1;
    }
  });

  // --- prior ---
  CLI::App* prior_cmd =
      app.add_subcommand("prior", "precompute the zero-shot calibration prior");
  auto prior_opts = std::make_shared<ConfigOptions>(*prior_cmd, /*with_strategy=*/false);
  auto prior_output = std::make_shared<std::string>();
  prior_cmd->add_option("--prior-output", *prior_output, "prior JSON output path");
  prior_cmd->callback([&rc, prior_opts, prior_output]() {
    try {
      const ExperimentConfig cfg = prior_opts->build();
      const Corpus corpus = load_corpus(cfg.corpus_path);
      std::unique_ptr<ModelBackend> model;
      if (cfg.backend == ExperimentConfig::BackendKind::mock) {
        MockWorldConfig world = cfg.mock_world;
        if (!cfg.mock_seed_explicit) world.seed = cfg.engine.seed;
        model = std::make_unique<MockModelBackend>(world, corpus);
      } else {
        HttpBackendConfig hc = cfg.http;
        hc.template_id = cfg.template_id;
        if (hc.cache_dir.empty()) hc.cache_dir = cfg.response_cache_dir;
        model = std::make_unique<HttpModelBackend>(hc, corpus);
      }
      const Prior prior = compute_prior(corpus, *model);
      ordered_json j;
      j["floor"] = prior.floor();
      ordered_json spaces = ordered_json::array();
      for (const auto& [key, probs] : prior.by_space()) {
        ordered_json space;
        space["key"] = key;
        space["probs"] = probs;
        spaces.push_back(space);
      }
      j["spaces"] = spaces;
      const std::string text = j.dump(2) + "\n";
      std::cout << text;
      if (!prior_output->empty()) write_text(*prior_output, text);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = 1;
    }
  });

  // --- cache ---
  CLI::App* cache_cmd = app.add_subcommand("cache", "inspect or clear the response cache");
  cache_cmd->require_subcommand(1);
  auto cache_dir = std::make_shared<std::string>();
  CLI::App* cache_inspect = cache_cmd->add_subcommand("inspect", "count cached responses");
  cache_inspect->add_option("--dir", *cache_dir, "cache directory")->required();
  cache_inspect->callback([&rc, cache_dir]() {
    try {
      ResponseCache cache(*cache_dir);
      std::cout << "cache " << cache.dir().string() << ": " << cache.entry_count()
                << " entries\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = 1;
    }
  });
  CLI::App* cache_clear = cache_cmd->add_subcommand("clear", "delete cached responses");
  cache_clear->add_option("--dir", *cache_dir, "cache directory")->required();
  cache_clear->callback([&rc, cache_dir]() {
    try {
      ResponseCache cache(*cache_dir);
      const std::size_t n = cache.entry_count();
      cache.clear();
      std::cout << "cleared " << n << " entries from " << cache.dir().string() << "\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = 1;
    }
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return rc;
}

}  // namespace zsicl
