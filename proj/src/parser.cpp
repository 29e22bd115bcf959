#include "elad/parser.hpp"

#include <regex>

#include "elad/errors.hpp"
#include "text_util.hpp"

namespace elad {

namespace {

using text::trim;

struct MarkerMatch {
    std::size_t begin = 0;
    std::size_t end = 0; // one past the marker
};

std::vector<MarkerMatch> find_markers(std::string_view raw, const std::string& pattern) {
    std::vector<MarkerMatch> out;
    std::regex re(pattern, std::regex::icase);
    auto begin = std::cregex_iterator(raw.data(), raw.data() + raw.size(), re);
    for (auto it = begin; it != std::cregex_iterator(); ++it) {
        const auto& m = *it;
        out.push_back({static_cast<std::size_t>(m.position(0)),
                       static_cast<std::size_t>(m.position(0) + m.length(0))});
    }
    return out;
}

// Position of the answer cue used for sentence exclusion: the last
// occurrence of the first configured cue present in the text.
std::size_t find_cue_position(std::string_view raw, const ParseConfig& cfg) {
    for (const auto& cue : cfg.answer_cues) {
        std::size_t pos = text::ci_find_last(raw, cue);
        if (pos != std::string_view::npos) return pos;
    }
    return std::string_view::npos;
}

// Removes the sentence containing `cue_pos` from the tail of `step`,
// where the step text starts at `step_offset` within the scanned region.
// Returns true when the whole step collapsed to nothing.
bool excise_cue_sentence(std::string& step, std::size_t step_offset, std::size_t cue_pos) {
    if (cue_pos < step_offset || cue_pos >= step_offset + step.size()) return false;
    std::size_t local = cue_pos - step_offset;
    auto sentences = text::split_sentences(step);
    for (const auto& s : sentences) {
        if (local >= s.begin && local < s.end) {
            step = trim(std::string_view(step).substr(0, s.begin));
            return step.empty();
        }
    }
    return false;
}

void cap_steps(std::vector<std::string>& steps, int max_steps) {
    if (max_steps < 1 || steps.size() <= static_cast<std::size_t>(max_steps)) return;
    std::string merged = steps[max_steps - 1];
    for (std::size_t i = max_steps; i < steps.size(); ++i) {
        merged += ' ';
        merged += steps[i];
    }
    steps.resize(max_steps);
    steps.back() = std::move(merged);
}

} // namespace

void validate_parse_config(const ParseConfig& cfg) {
    if (cfg.step_markers.empty())
        raise(Errc::config_error, "at least one step marker is required");
    if (cfg.answer_cues.empty())
        raise(Errc::config_error, "at least one answer cue is required");
    if (cfg.max_steps < 1) raise(Errc::config_error, "max_steps must be >= 1");
}

Explanation split_steps(std::string_view raw, const ParseConfig& cfg) {
    validate_parse_config(cfg);
    if (trim(raw).empty()) raise(Errc::parse_failure, "empty completion text");

    std::size_t cue_pos = find_cue_position(raw, cfg);

    // Explicit headers first.
    for (const auto& pattern : cfg.step_markers) {
        auto markers = find_markers(raw, pattern);
        if (markers.empty()) continue;

        std::vector<std::string> steps;
        std::vector<std::size_t> offsets;
        for (std::size_t i = 0; i < markers.size(); ++i) {
            std::size_t begin = markers[i].end;
            std::size_t end = i + 1 < markers.size() ? markers[i + 1].begin : raw.size();
            std::string content = trim(raw.substr(begin, end - begin));
            if (content.empty()) continue;
            // offset of the trimmed content within raw, for cue excision
            std::size_t lead = raw.substr(begin, end - begin).find_first_not_of(" \t\n\r");
            steps.push_back(std::move(content));
            offsets.push_back(begin + (lead == std::string_view::npos ? 0 : lead));
        }
        if (steps.empty()) continue;

        if (cue_pos != std::string_view::npos && steps.size() > 1) {
            if (excise_cue_sentence(steps.back(), offsets.back(), cue_pos)) {
                steps.pop_back();
            }
        } else if (cue_pos != std::string_view::npos && steps.size() == 1) {
            std::string copy = steps.front();
            if (!excise_cue_sentence(copy, offsets.front(), cue_pos)) steps.front() = copy;
            // a lone step that is entirely the answer sentence stays intact
        }
        if (!steps.empty()) {
            cap_steps(steps, cfg.max_steps);
            return Explanation{std::move(steps)};
        }
    }

    // Sentence fallback.
    auto sentences = text::split_sentences(raw);
    std::vector<std::string> steps;
    for (const auto& s : sentences) {
        bool is_cue_sentence = cue_pos != std::string_view::npos && cue_pos >= s.begin &&
                               cue_pos < s.end;
        if (is_cue_sentence && sentences.size() > 1) continue;
        std::string content = trim(raw.substr(s.begin, s.end - s.begin));
        if (!content.empty()) steps.push_back(std::move(content));
    }
    if (steps.empty()) {
        // everything was the answer sentence; keep it as the single step
        for (const auto& s : sentences) {
            std::string content = trim(raw.substr(s.begin, s.end - s.begin));
            if (!content.empty()) steps.push_back(std::move(content));
        }
    }
    if (steps.empty())
        raise(Errc::parse_failure, "no extractable step in: " + std::string(raw.substr(0, 120)));
    cap_steps(steps, cfg.max_steps);
    return Explanation{std::move(steps)};
}

namespace {

std::optional<std::string> first_numeral(std::string_view tail) {
    static const std::regex re(R"([-+]?\$?[0-9][0-9,]*(\.[0-9]+)?)");
    std::cmatch m;
    if (std::regex_search(tail.data(), tail.data() + tail.size(), m, re))
        return std::string(m[0].first, m[0].second);
    return std::nullopt;
}

std::optional<std::string> first_label(std::string_view tail, const std::vector<std::string>& labels) {
    std::size_t best = std::string_view::npos;
    std::string found;
    for (const auto& label : labels) {
        std::size_t pos = text::find_word(tail, label);
        if (pos != std::string_view::npos && pos < best) {
            best = pos;
            found = label;
        }
    }
    if (best == std::string_view::npos) return std::nullopt;
    return found;
}

std::optional<std::string> value_span_after_cue(std::string_view tail, const TaskKind& task) {
    switch (task.variant) {
        case TaskVariant::numeric:
            return first_numeral(tail);
        case TaskVariant::multiple_choice:
            return first_label(tail, task.labels);
        case TaskVariant::nli_label:
            return first_label(tail, task.labels);
        case TaskVariant::yes_no:
            return first_label(tail, {"yes", "no"});
    }
    return std::nullopt;
}

} // namespace

std::optional<Answer> extract_final_answer(std::string_view raw, const TaskKind& task,
                                           const ParseConfig& cfg) {
    validate_parse_config(cfg);
    for (const auto& cue : cfg.answer_cues) {
        std::size_t pos = text::ci_find_last(raw, cue);
        if (pos == std::string_view::npos) continue;
        std::string_view tail = raw.substr(pos + cue.size());
        auto span = value_span_after_cue(tail, task);
        if (!span) continue;
        try {
            return make_answer(task, *span);
        } catch (const Error&) {
            continue; // unusable value after this cue; try the next one
        }
    }
    return std::nullopt;
}

Completion parse_completion(std::string_view raw, const TaskKind& task, const ParseConfig& cfg) {
    Completion c;
    c.raw_text = std::string(raw);
    c.explanation = split_steps(raw, cfg);
    c.answer = extract_final_answer(raw, task, cfg);
    return c;
}

std::string render_steps_text(const Explanation& explanation) {
    std::string out;
    for (std::size_t i = 0; i < explanation.steps.size(); ++i) {
        if (i) out += '\n';
        out += "Step " + std::to_string(i + 1) + ": " + explanation.steps[i];
    }
    return out;
}

} // namespace elad
