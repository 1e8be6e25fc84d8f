#pragma once

/**
 * Prompt templates. Two block formats exist, differing only in their markers:
 * "Q:"/"A:" for BBH-style tasks and "Question:"/"Answer:" for MMLU-style
 * ones. Rendering is byte-exact: each demonstration contributes one
 * marker-label block, then the query block ends with a bare answer marker.
 */

#include <string>
#include <string_view>
#include <vector>

#include "zsicl/corpus.hpp"
#include "zsicl/types.hpp"

namespace zsicl {

enum class TemplateId { bbh, mmlu };

TemplateId parse_template(std::string_view name);  // throws on unknown name
std::string_view template_name(TemplateId id);

// Demonstrations are rendered in the order given, each labeled with its
// pseudo-label. The demo problems must be resolvable in the corpus.
std::string render_prompt(const Problem& problem,
                          const std::vector<PseudoDemonstration>& demos,
                          const Corpus& corpus, TemplateId template_id);

}  // namespace zsicl
