#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "elad/domain.hpp"

namespace elad {

// How raw model text maps onto steps and a final answer.
struct ParseConfig {
    // Regexes locating step starts, tried in order; sentence segmentation
    // is the built-in fallback when none of them matches.
    std::vector<std::string> step_markers = {R"(Step\s+\d+\s*:)"};
    // Cue phrases scanned in priority order; the LAST occurrence of the
    // first cue that yields a parseable value wins.
    std::vector<std::string> answer_cues = {"the final answer is", "the answer is", "####"};
    int max_steps = 30;
};

void validate_parse_config(const ParseConfig& cfg);

// Splits raw text into ordered reasoning steps. Explicit step headers win;
// otherwise sentences are segmented on terminal punctuation and newlines.
// The sentence carrying the answer cue is excluded from the steps unless it
// is the only content. Steps beyond max_steps are merged into the last one.
// Throws Errc::parse_failure when no step can be extracted.
Explanation split_steps(std::string_view raw, const ParseConfig& cfg);

// Scans answer cues and normalizes the value that follows per task kind.
// Absence is a valid result (unparseable completion), never an error.
std::optional<Answer> extract_final_answer(std::string_view raw, const TaskKind& task,
                                           const ParseConfig& cfg);

// split_steps + extract_final_answer. Fails only on zero steps.
Completion parse_completion(std::string_view raw, const TaskKind& task, const ParseConfig& cfg);

// Renders steps in the canonical "Step i: ..." export form, one per line.
std::string render_steps_text(const Explanation& explanation);

} // namespace elad
