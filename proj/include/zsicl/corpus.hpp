#pragma once

/**
 * Problem sets and their ingestion. A corpus is an ordered list of
 * classification problems loaded from a JSONL file (one record per line:
 * id, task_id, prompt, labels, optional gold). The scenario is inferred:
 * a single task id makes an in-domain corpus, two or more a cross-domain one.
 */

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace zsicl {

struct Problem {
  std::string id;
  std::string task_id;
  // Question text including answer options, without demonstrations.
  std::string prompt;
  std::vector<std::string> label_space;
  // Evaluation only; never shown to the planner.
  std::optional<std::string> gold_label;
};

enum class Scenario { in_domain, cross_domain };

class Corpus {
 public:
  // Validates per-problem invariants (>=2 distinct non-empty labels, gold in
  // label space, unique ids) and infers the scenario. Throws on violation.
  explicit Corpus(std::vector<Problem> problems);

  const std::vector<Problem>& problems() const { return problems_; }
  std::size_t size() const { return problems_.size(); }
  Scenario scenario() const { return scenario_; }

  const Problem* find(std::string_view id) const;
  const Problem& by_id(std::string_view id) const;  // throws if absent

  // Distinct task ids in first-appearance order.
  const std::vector<std::string>& task_order() const { return task_order_; }

 private:
  std::vector<Problem> problems_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> task_order_;
  Scenario scenario_ = Scenario::in_domain;
};

// Parses JSONL text. Errors carry the offending 1-based line number.
Corpus parse_corpus(std::string_view text, std::string_view origin = "<memory>");
Corpus load_corpus(const std::filesystem::path& path);

// Canonical JSONL form; load followed by serialize round-trips byte-exactly
// on canonical input.
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Samples per_task problems without replacement from every input corpus
// (deterministic under seed) and concatenates them into a cross-domain
// corpus, input order preserved per block.
Corpus mix_tasks(const std::vector<Corpus>& corpora, std::size_t per_task,
                 std::uint64_t seed);

}  // namespace zsicl
