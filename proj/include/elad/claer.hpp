#pragma once

#include <optional>
#include <string>
#include <vector>

#include "elad/gateway.hpp"
#include "elad/parser.hpp"

namespace elad {

struct ClaerConfig {
    double teacher_temperature = 0.0;
    int max_tokens = 1024;
    ParseConfig parse;
};

enum class VerdictDecision { yes, no };

struct Verdict {
    VerdictDecision decision = VerdictDecision::yes;
    std::string rewritten_step;                // yes branch
    std::vector<std::string> remainder_steps;  // no branch
    std::optional<Answer> final_answer;        // no branch
    std::string raw_response;
};

struct RevisionRound {
    std::string prompt;
    std::string response;
    Verdict verdict;
    bool reprompted = false;
};

struct RemainderExchange {
    std::string prompt;
    std::string response;
};

// The full CLAER dialogue for one sample. rejected_at is the 1-based index
// of the student step the teacher refused; absent when every step passed.
struct RevisionTranscript {
    std::string question_id;
    Completion student_completion;
    std::vector<RevisionRound> rounds;
    std::optional<int> rejected_at;
    std::optional<RemainderExchange> remainder;
    TrainingTriple annotated;
    std::string transcript_id;
};

// Classifies a teacher response. Yes iff the first sentence opens with an
// affirmative token; the rewritten step is the text after the affirmative
// clause. No-branch remainders are parsed with the completion parser.
// Throws Errc::verdict_parse when neither yes nor no is detectable.
Verdict parse_verdict(std::string_view raw, const TaskKind& task, const ParseConfig& parse);

// Walks the student's steps past the teacher in one conversation: accept
// rewritten steps on yes, take the remainder on no, ask for the rest once
// when the final answer is still missing. Ambiguous verdicts get a single
// reprompt; a second failure raises Errc::annotation_failed.
RevisionTranscript revise(ModelBackend& teacher, const Question& question,
                          const Completion& student_completion, const ClaerConfig& cfg,
                          int iteration = 0);

} // namespace elad
