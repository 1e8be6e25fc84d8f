#include "zsicl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "zsicl/rng.hpp"

namespace zsicl {

namespace {

using ordered_json = nlohmann::ordered_json;

void validate_problem(const Problem& p) {
  if (p.id.empty()) throw std::runtime_error("problem has empty id");
  if (p.task_id.empty()) throw std::runtime_error("problem '" + p.id + "' has empty task_id");
  if (p.label_space.size() < 2) {
    throw std::runtime_error("problem '" + p.id + "' needs at least 2 labels");
  }
  std::set<std::string> seen;
  for (const auto& label : p.label_space) {
    if (label.empty()) {
      throw std::runtime_error("problem '" + p.id + "' has an empty label");
    }
    if (!seen.insert(label).second) {
      throw std::runtime_error("problem '" + p.id + "' has duplicate label '" + label + "'");
    }
  }
  if (p.gold_label && !seen.count(*p.gold_label)) {
    throw std::runtime_error("problem '" + p.id + "' gold label '" + *p.gold_label +
                             "' is not in its label space");
  }
}

Problem parse_record(const ordered_json& j) {
  Problem p;
  p.id = j.at("id").get<std::string>();
  p.task_id = j.at("task_id").get<std::string>();
  p.prompt = j.at("prompt").get<std::string>();
  p.label_space = j.at("labels").get<std::vector<std::string>>();
  if (j.contains("gold") && !j.at("gold").is_null()) {
    p.gold_label = j.at("gold").get<std::string>();
  }
  return p;
}

ordered_json record_json(const Problem& p) {
  ordered_json j;
  j["id"] = p.id;
  j["task_id"] = p.task_id;
  j["prompt"] = p.prompt;
  j["labels"] = p.label_space;
  if (p.gold_label) j["gold"] = *p.gold_label;
  return j;
}

}  // namespace

Corpus::Corpus(std::vector<Problem> problems) : problems_(std::move(problems)) {
  if (problems_.empty()) throw std::runtime_error("corpus is empty");
  for (std::size_t i = 0; i < problems_.size(); ++i) {
    const Problem& p = problems_[i];
    validate_problem(p);
    if (!index_.emplace(p.id, i).second) {
      throw std::runtime_error("duplicate problem id '" + p.id + "'");
    }
    if (std::find(task_order_.begin(), task_order_.end(), p.task_id) == task_order_.end()) {
      task_order_.push_back(p.task_id);
    }
  }
  scenario_ = task_order_.size() >= 2 ? Scenario::cross_domain : Scenario::in_domain;
}

const Problem* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &problems_[it->second];
}

const Problem& Corpus::by_id(std::string_view id) const {
  const Problem* p = find(id);
  if (!p) throw std::runtime_error("unknown problem id '" + std::string(id) + "'");
  return *p;
}

Corpus parse_corpus(std::string_view text, std::string_view origin) {
  std::vector<Problem> problems;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.empty() ||
        line.find_first_not_of(" \t\r") == std::string_view::npos) {
      continue;
    }
    try {
      problems.push_back(parse_record(ordered_json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string(origin) + ":" + std::to_string(line_no) +
                               ": malformed record: " + e.what());
    }
    if (pos > text.size()) break;
  }
  if (problems.empty()) {
    throw std::runtime_error(std::string(origin) + ": no records found");
  }
  return Corpus(std::move(problems));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), path.string());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const Problem& p : corpus.problems()) {
    out += record_json(p).dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file '" + path.string() + "'");
  out << serialize_corpus(corpus);
}

Corpus mix_tasks(const std::vector<Corpus>& corpora, std::size_t per_task,
                 std::uint64_t seed) {
  if (per_task < 1) throw std::invalid_argument("mix_tasks: per_task must be >= 1");
  if (corpora.empty()) throw std::invalid_argument("mix_tasks: no input corpora");
  rng::Stream stream(rng::derive_seed(seed, "mix_tasks"));
  std::vector<Problem> mixed;
  for (const Corpus& c : corpora) {
    if (c.size() < per_task) {
      throw std::runtime_error("mix_tasks: corpus with " + std::to_string(c.size()) +
                               " problems cannot supply " + std::to_string(per_task));
    }
    // Partial Fisher-Yates: the first per_task slots are the sample, in draw order.
    std::vector<std::size_t> idx(c.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < per_task; ++i) {
      std::swap(idx[i], idx[i + stream.below(idx.size() - i)]);
      mixed.push_back(c.problems()[idx[i]]);
    }
  }
  Corpus result(std::move(mixed));
  if (result.scenario() != Scenario::cross_domain) {
    throw std::runtime_error("mix_tasks: inputs cover fewer than 2 distinct tasks");
  }
  return result;
}

}  // namespace zsicl
