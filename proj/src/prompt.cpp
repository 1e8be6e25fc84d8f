#include "zsicl/prompt.hpp"

#include <stdexcept>

namespace zsicl {

TemplateId parse_template(std::string_view name) {
  if (name == "bbh") return TemplateId::bbh;
  if (name == "mmlu") return TemplateId::mmlu;
  throw std::invalid_argument("unknown template '" + std::string(name) +
                              "' (expected bbh or mmlu)");
}

std::string_view template_name(TemplateId id) {
  return id == TemplateId::bbh ? "bbh" : "mmlu";
}

std::string render_prompt(const Problem& problem,
                          const std::vector<PseudoDemonstration>& demos,
                          const Corpus& corpus, TemplateId template_id) {
  const std::string_view q_marker =
      template_id == TemplateId::bbh ? "Q: " : "Question: ";
  const std::string_view a_marker =
      template_id == TemplateId::bbh ? "\nA:" : "\nAnswer:";

  std::string out;
  for (const PseudoDemonstration& demo : demos) {
    const Problem& src = corpus.by_id(demo.problem_id);
    out += q_marker;
    out += src.prompt;
    out += a_marker;
    out += ' ';
    out += demo.predicted_label;
    out += '\n';
  }
  out += q_marker;
  out += problem.prompt;
  out += a_marker;
  return out;
}

}  // namespace zsicl
