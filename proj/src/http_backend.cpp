#include "zsicl/http_backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "zsicl/rng.hpp"
#include "zsicl/simd/kernels.hpp"

namespace zsicl {

namespace {

using json = nlohmann::json;

std::string trimmed(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string cache_key_material(const std::string& identity, const std::string& prompt,
                               const std::vector<std::string>& labels) {
  std::string material = identity;
  material += '\x1e';
  material += prompt;
  for (const std::string& label : labels) {
    material += '\x1e';
    material += label;
  }
  return material;
}

std::string hex64(std::uint64_t v) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::entry_path(const std::string& identity,
                                                const std::string& prompt,
                                                const std::vector<std::string>& labels) const {
  return dir_ / (hex64(rng::fnv1a64(cache_key_material(identity, prompt, labels))) + ".json");
}

std::optional<std::vector<double>> ResponseCache::get(
    const std::string& identity, const std::string& prompt,
    const std::vector<std::string>& labels) const {
  const auto path = entry_path(identity, prompt, labels);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const json entry = json::parse(in);
    if (entry.at("identity") != identity || entry.at("prompt") != prompt ||
        entry.at("labels") != labels) {
      return std::nullopt;  // hash collision; treat as a miss
    }
    return entry.at("probs").get<std::vector<double>>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& identity, const std::string& prompt,
                        const std::vector<std::string>& labels,
                        const std::vector<double>& probs) const {
  json entry;
  entry["identity"] = identity;
  entry["prompt"] = prompt;
  entry["labels"] = labels;
  entry["probs"] = probs;
  const auto path = entry_path(identity, prompt, labels);
  static std::atomic<unsigned> tmp_counter{0};
  const auto tmp = path.string() + ".tmp" + std::to_string(tmp_counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cache entry '" + tmp + "'");
    out << entry.dump();
  }
  std::filesystem::rename(tmp, path);
}

std::size_t ResponseCache::entry_count() const {
  std::size_t n = 0;
  for (const auto& de : std::filesystem::directory_iterator(dir_)) {
    if (de.path().extension() == ".json") ++n;
  }
  return n;
}

void ResponseCache::clear() const {
  for (const auto& de : std::filesystem::directory_iterator(dir_)) {
    if (de.path().extension() == ".json") std::filesystem::remove(de.path());
  }
}

ScoreMode parse_score_mode(std::string_view name) {
  if (name == "top_logprobs") return ScoreMode::top_logprobs;
  if (name == "per_label") return ScoreMode::per_label;
  if (name == "generate_only") return ScoreMode::generate_only;
  throw std::invalid_argument("unknown score mode '" + std::string(name) +
                              "' (expected top_logprobs, per_label, or generate_only)");
}

std::string_view score_mode_name(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::top_logprobs: return "top_logprobs";
    case ScoreMode::per_label: return "per_label";
    case ScoreMode::generate_only: return "generate_only";
  }
  return "unknown";
}

namespace {

// POST with bounded exponential backoff; throws after max_attempts carrying
// the attempt count and last failure.
std::string post_with_retries(const HttpBackendConfig& config, const std::string& path,
                              const std::string& body, std::atomic<long>& counter) {
  httplib::Client client(config.base_url);
  client.set_connection_timeout(config.timeout_sec, 0);
  client.set_read_timeout(config.timeout_sec, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  std::string last_error;
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    ++counter;
    auto res = client.Post(path, headers, body, "application/json");
    if (res && res->status == 200) return res->body;
    if (res) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < config.max_attempts) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config.retry_base_ms << (attempt - 1)));
    }
  }
  throw std::runtime_error("request to " + config.base_url + path + " failed after " +
                           std::to_string(config.max_attempts) +
                           " attempts: " + last_error);
}

}  // namespace

HttpModelBackend::HttpModelBackend(HttpBackendConfig config, const Corpus& corpus)
    : config_(std::move(config)), corpus_(&corpus) {
  if (config_.base_url.empty()) throw std::invalid_argument("http backend needs a base URL");
  if (config_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (!config_.cache_dir.empty()) cache_.emplace(config_.cache_dir);
}

std::string HttpModelBackend::identity() const {
  return "http:" + config_.model + ":" + std::string(score_mode_name(config_.score_mode)) +
         ":" + std::string(template_name(config_.template_id));
}

std::string HttpModelBackend::post_json(const std::string& path, const std::string& body) {
  return post_with_retries(config_, path, body, network_calls_);
}

LabelDistribution HttpModelBackend::one_hot_from_text(const Problem& problem,
                                                      const std::string& text) {
  const std::string answer = trimmed(text);
  const auto& labels = problem.label_space;
  std::size_t match = labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == answer) {
      match = i;
      break;
    }
  }
  if (match == labels.size()) {
    // Longest label the answer starts with.
    std::size_t best_len = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (answer.rfind(labels[i], 0) == 0 && labels[i].size() > best_len) {
        best_len = labels[i].size();
        match = i;
      }
    }
  }
  if (match == labels.size()) {
    throw std::runtime_error("generated answer '" + answer +
                             "' matches no label of problem '" + problem.id + "'");
  }
  LabelDistribution dist;
  dist.probs.assign(labels.size(), 0.0);
  dist.probs[match] = 1.0;
  return dist;
}

LabelDistribution HttpModelBackend::score_top_logprobs(const Problem& problem,
                                                       const std::string& prompt) {
  json body;
  body["model"] = config_.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  body["max_tokens"] = 1;
  body["temperature"] = 0;
  body["logprobs"] = true;
  body["top_logprobs"] = config_.top_logprobs;
  const json res = json::parse(post_json("/v1/chat/completions", body.dump()));
  const json& choice = res.at("choices").at(0);

  std::vector<double> scores(problem.label_space.size(), 0.0);
  bool any = false;
  if (choice.contains("logprobs") && !choice["logprobs"].is_null()) {
    const json& content = choice["logprobs"].at("content");
    if (!content.empty()) {
      for (const json& top : content.at(0).at("top_logprobs")) {
        const std::string token = trimmed(top.at("token").get<std::string>());
        for (std::size_t i = 0; i < problem.label_space.size(); ++i) {
          if (problem.label_space[i] == token) {
            scores[i] = std::max(scores[i], std::exp(top.at("logprob").get<double>()));
            any = true;
          }
        }
      }
    }
  }
  if (!any) {
    ++one_hot_fallbacks_;
    return one_hot_from_text(problem,
                             choice.at("message").at("content").get<std::string>());
  }
  double total = 0.0;
  for (double s : scores) total += s;
  LabelDistribution dist;
  dist.probs.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) dist.probs[i] = scores[i] / total;
  return dist;
}

LabelDistribution HttpModelBackend::score_per_label(const Problem& problem,
                                                    const std::string& prompt) {
  std::vector<double> logprob_sums;
  logprob_sums.reserve(problem.label_space.size());
  for (const std::string& label : problem.label_space) {
    const std::string full = prompt + " " + label;
    json body;
    body["model"] = config_.model;
    body["prompt"] = full;
    body["max_tokens"] = 0;
    body["echo"] = true;
    body["logprobs"] = 0;
    const json res = json::parse(post_json("/v1/completions", body.dump()));
    const json& lp = res.at("choices").at(0).at("logprobs");
    const json& offsets = lp.at("text_offset");
    const json& token_logprobs = lp.at("token_logprobs");
    double sum = 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      // Only tokens inside the appended label continuation count.
      if (offsets[i].get<std::size_t>() >= prompt.size() && !token_logprobs[i].is_null()) {
        sum += token_logprobs[i].get<double>();
      }
    }
    logprob_sums.push_back(sum);
  }
  const double peak = *std::max_element(logprob_sums.begin(), logprob_sums.end());
  double total = 0.0;
  LabelDistribution dist;
  dist.probs.resize(logprob_sums.size());
  for (std::size_t i = 0; i < logprob_sums.size(); ++i) {
    dist.probs[i] = std::exp(logprob_sums[i] - peak);
    total += dist.probs[i];
  }
  for (double& p : dist.probs) p /= total;
  return dist;
}

LabelDistribution HttpModelBackend::predict_with_demos(
    const Problem& problem, const std::vector<PseudoDemonstration>& demos) {
  const std::string prompt = render_prompt(problem, demos, *corpus_, config_.template_id);
  if (cache_) {
    if (auto hit = cache_->get(identity(), prompt, problem.label_space)) {
      LabelDistribution dist{std::move(*hit)};
      dist.validate(problem.label_space.size());
      return dist;
    }
  }
  LabelDistribution dist;
  switch (config_.score_mode) {
    case ScoreMode::top_logprobs:
      dist = score_top_logprobs(problem, prompt);
      break;
    case ScoreMode::per_label:
      dist = score_per_label(problem, prompt);
      break;
    case ScoreMode::generate_only: {
      json body;
      body["model"] = config_.model;
      body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
      body["max_tokens"] = 16;
      body["temperature"] = 0;
      const json res = json::parse(post_json("/v1/chat/completions", body.dump()));
      dist = one_hot_from_text(
          problem, res.at("choices").at(0).at("message").at("content").get<std::string>());
      break;
    }
  }
  dist.validate(problem.label_space.size());
  if (cache_) cache_->put(identity(), prompt, problem.label_space, dist.probs);
  return dist;
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpBackendConfig config, std::size_t dim)
    : config_(std::move(config)), dim_(dim) {
  if (config_.base_url.empty()) throw std::invalid_argument("http backend needs a base URL");
  if (dim_ == 0) throw std::invalid_argument("embedding dimension must be > 0");
  if (!config_.cache_dir.empty()) cache_.emplace(config_.cache_dir);
}

std::string HttpEmbeddingBackend::identity() const {
  return "http-embed:" + config_.model + ":" + std::to_string(dim_);
}

std::string HttpEmbeddingBackend::post_json(const std::string& path,
                                            const std::string& body) {
  return post_with_retries(config_, path, body, network_calls_);
}

std::vector<double> HttpEmbeddingBackend::embed(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("cannot embed empty text");
  const std::string key(text);
  if (cache_) {
    if (auto hit = cache_->get(identity(), key, {})) return *hit;
  }
  json body;
  body["model"] = config_.model;
  body["input"] = json::array({key});
  const json res = json::parse(post_json("/v1/embeddings", body.dump()));
  auto vec = res.at("data").at(0).at("embedding").get<std::vector<double>>();
  if (vec.size() != dim_) {
    throw std::runtime_error("embedding endpoint returned dimension " +
                             std::to_string(vec.size()) + ", expected " +
                             std::to_string(dim_));
  }
  simd::l2_normalize(vec);
  if (cache_) cache_->put(identity(), key, {}, vec);
  return vec;
}

}  // namespace zsicl
