#include "elad/claer.hpp"

#include <regex>

#include "text_util.hpp"

namespace elad {

namespace {

using text::trim;

// Leading alphabetic token after any quoting/markdown noise.
std::string leading_token(std::string_view s, std::size_t* token_end) {
    std::size_t i = 0;
    while (i < s.size() && !std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t b = i;
    while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
    *token_end = i;
    return std::string(s.substr(b, i - b));
}

std::size_t first_marker_pos(std::string_view raw, const ParseConfig& cfg) {
    for (const auto& pattern : cfg.step_markers) {
        std::regex re(pattern, std::regex::icase);
        std::cmatch m;
        if (std::regex_search(raw.data(), raw.data() + raw.size(), m, re))
            return static_cast<std::size_t>(m.position(0));
    }
    return std::string_view::npos;
}

// The content region after the yes/no clause: an explicit step header wins,
// else the text after the first sentence terminator, else whatever follows
// the decision token.
std::string region_after_clause(std::string_view raw, std::size_t token_end,
                                const ParseConfig& cfg) {
    std::size_t marker = first_marker_pos(raw, cfg);
    if (marker != std::string_view::npos && marker >= token_end)
        return std::string(raw.substr(marker));
    for (std::size_t i = token_end; i < raw.size(); ++i) {
        char c = raw[i];
        bool terminator = c == '\n' || ((c == '.' || c == '!' || c == '?') &&
                                        (i + 1 >= raw.size() ||
                                         std::isspace(static_cast<unsigned char>(raw[i + 1]))));
        if (terminator) {
            std::string rest = trim(raw.substr(i + 1));
            if (!rest.empty()) return rest;
            break;
        }
    }
    std::size_t i = token_end;
    while (i < raw.size() && (std::isspace(static_cast<unsigned char>(raw[i])) || raw[i] == ',' ||
                              raw[i] == '.' || raw[i] == ':' || raw[i] == ';' || raw[i] == '!'))
        ++i;
    return trim(raw.substr(i));
}

} // namespace

Verdict parse_verdict(std::string_view raw, const TaskKind& task, const ParseConfig& parse) {
    std::string s = trim(raw);
    if (s.empty()) raise(Errc::verdict_parse, "empty teacher response");

    std::size_t token_end = 0;
    std::string token = text::lower(leading_token(s, &token_end));

    Verdict v;
    v.raw_response = std::string(raw);

    if (token == "yes") {
        v.decision = VerdictDecision::yes;
        std::string region = region_after_clause(s, token_end, parse);
        if (region.empty())
            raise(Errc::verdict_parse, "affirmative verdict without a rewritten step");
        try {
            Explanation steps = split_steps(region, parse);
            v.rewritten_step = steps.steps.front();
        } catch (const Error& e) {
            if (e.code() != Errc::parse_failure) throw;
            raise(Errc::verdict_parse, "affirmative verdict without a rewritten step");
        }
        return v;
    }
    if (token == "no") {
        v.decision = VerdictDecision::no;
        std::string region = region_after_clause(s, token_end, parse);
        if (!region.empty()) {
            try {
                Completion c = parse_completion(region, task, parse);
                v.remainder_steps = std::move(c.explanation.steps);
                v.final_answer = std::move(c.answer);
            } catch (const Error& e) {
                if (e.code() != Errc::parse_failure) throw;
            }
            if (!v.final_answer) v.final_answer = extract_final_answer(s, task, parse);
        }
        return v;
    }
    raise(Errc::verdict_parse, "neither yes nor no: " + s.substr(0, 80));
}

namespace {

struct RoundResult {
    RevisionRound round;
};

RoundResult ask_round(ModelBackend& teacher, std::vector<ChatMessage>& messages,
                      const std::string& prompt, const Question& q, const ClaerConfig& cfg,
                      const DecodeParams& params) {
    messages.push_back({"user", prompt});
    GenerationResult resp = teacher.generate_chat(messages, params);
    messages.push_back({"assistant", resp.text});
    try {
        Verdict v = parse_verdict(resp.text, q.task, cfg.parse);
        return {{prompt, resp.text, std::move(v), false}};
    } catch (const Error& e) {
        if (e.code() != Errc::verdict_parse) throw;
    }
    // one reprompt with an explicit instruction, then fail soft
    const std::string reprompt = prompt + "\nAnswer Yes or No first.";
    messages.push_back({"user", reprompt});
    GenerationResult retry = teacher.generate_chat(messages, params);
    messages.push_back({"assistant", retry.text});
    try {
        Verdict v = parse_verdict(retry.text, q.task, cfg.parse);
        return {{reprompt, retry.text, std::move(v), true}};
    } catch (const Error& e) {
        if (e.code() != Errc::verdict_parse) throw;
        raise(Errc::annotation_failed,
              "ambiguous verdict twice for " + q.id + ": " + std::string(e.what()));
    }
}

} // namespace

RevisionTranscript revise(ModelBackend& teacher, const Question& question,
                          const Completion& student_completion, const ClaerConfig& cfg,
                          int iteration) {
    const auto& steps = student_completion.explanation.steps;
    if (steps.empty()) raise(Errc::config_error, "student completion has no steps");
    validate_parse_config(cfg.parse);

    RevisionTranscript t;
    t.question_id = question.id;
    t.student_completion = student_completion;
    t.transcript_id = "t-" + question.id + "-i" + std::to_string(iteration);

    DecodeParams params{cfg.teacher_temperature, cfg.max_tokens, std::nullopt};
    std::vector<ChatMessage> messages;
    std::vector<std::string> accepted;
    std::vector<std::string> remainder_steps;
    std::optional<Answer> final_answer;

    for (std::size_t i = 0; i < steps.size(); ++i) {
        std::string prompt =
            i == 0 ? render_prompt(PromptTemplate::standard(TemplateId::claer_first),
                                   {{"question", question.text}, {"candidate_step", steps[i]}})
                   : render_prompt(PromptTemplate::standard(TemplateId::claer_continue),
                                   {{"candidate_step", steps[i]}});
        auto [round] = ask_round(teacher, messages, prompt, question, cfg, params);
        bool rejected = round.verdict.decision == VerdictDecision::no;
        if (rejected) {
            t.rejected_at = static_cast<int>(i + 1);
            remainder_steps = round.verdict.remainder_steps;
            final_answer = round.verdict.final_answer;
        } else {
            accepted.push_back(round.verdict.rewritten_step);
        }
        t.rounds.push_back(std::move(round));
        if (rejected) break;
    }

    if (!final_answer) {
        // full acceptance, or a rejection whose response carried no answer
        const std::string prompt =
            render_prompt(PromptTemplate::standard(TemplateId::claer_remainder), {});
        messages.push_back({"user", prompt});
        GenerationResult resp = teacher.generate_chat(messages, params);
        messages.push_back({"assistant", resp.text});
        t.remainder = RemainderExchange{prompt, resp.text};
        try {
            Completion c = parse_completion(resp.text, question.task, cfg.parse);
            if (t.rejected_at && remainder_steps.empty())
                remainder_steps = std::move(c.explanation.steps);
            final_answer = std::move(c.answer);
        } catch (const Error& e) {
            if (e.code() != Errc::parse_failure) throw;
            final_answer = extract_final_answer(resp.text, question.task, cfg.parse);
        }
    }

    if (!final_answer)
        raise(Errc::annotation_failed, "no final answer obtained for " + question.id);

    std::vector<std::string> annotated = accepted;
    if (t.rejected_at)
        annotated.insert(annotated.end(), remainder_steps.begin(), remainder_steps.end());
    if (annotated.empty())
        raise(Errc::annotation_failed, "empty revised explanation for " + question.id);

    t.annotated.question_id = question.id;
    t.annotated.question_text = question.text;
    t.annotated.annotated_answer = *final_answer;
    t.annotated.annotated_explanation = Explanation{std::move(annotated)};
    t.annotated.iteration = iteration;
    t.annotated.transcript_id = t.transcript_id;
    return t;
}

} // namespace elad
