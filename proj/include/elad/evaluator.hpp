#pragma once

#include <optional>
#include <string>
#include <vector>

#include "elad/gateway.hpp"
#include "elad/parser.hpp"

namespace elad {

struct EvalConfig {
    ParseConfig parse;
    int max_tokens = 512;
    int parallelism = 4;
};

struct EvalRecord {
    std::string question_id;
    std::optional<Answer> predicted;
    Answer gold;
    bool match = false;
    std::string error; // backend failure detail, if any
};

struct EvalReport {
    int total = 0;
    int correct = 0;
    int unparseable = 0; // counted incorrect
    double accuracy = 0.0;
    std::vector<EvalRecord> per_question;
};

// One greedy zero-shot-CoT generation per question; final answers compared
// against gold. Unparseable predictions and backend failures count as
// incorrect. Throws Errc::config_error on an empty test set or a missing
// gold answer.
EvalReport evaluate(ModelBackend& student, const std::vector<Question>& testset,
                    const EvalConfig& cfg);

} // namespace elad
