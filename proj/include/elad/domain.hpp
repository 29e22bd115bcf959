#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace elad {

enum class TaskVariant { numeric, multiple_choice, yes_no, nli_label };

const char* task_variant_name(TaskVariant v);
TaskVariant task_variant_from_name(const std::string& name);

// Task kind of a question. `labels` holds the option letters for
// multiple-choice and the label set for nli-label; empty otherwise.
struct TaskKind {
    TaskVariant variant = TaskVariant::numeric;
    std::vector<std::string> labels;

    static TaskKind numeric() { return {TaskVariant::numeric, {}}; }
    static TaskKind yes_no() { return {TaskVariant::yes_no, {}}; }
    static TaskKind multiple_choice(std::vector<std::string> options);
    static TaskKind nli(std::vector<std::string> labels);

    friend bool operator==(const TaskKind&, const TaskKind&) = default;
};

// Throws Errc::config_error when the label-set invariants are violated.
void validate_task(const TaskKind& task);

// A final answer in canonical form. `value` is the normalized token
// (exact decimal string / uppercase label / "yes"|"no"); `raw` keeps the
// span it was extracted from.
struct Answer {
    TaskVariant kind = TaskVariant::numeric;
    std::string value;
    std::string raw;

    friend bool operator==(const Answer&, const Answer&) = default;
};

struct Question {
    std::string id;
    std::string text;
    TaskKind task;
    std::optional<Answer> gold;
};

// Ordered reasoning steps s_1..s_n. Step texts are stored without the
// "Step i:" headers; those are added back on export.
struct Explanation {
    std::vector<std::string> steps;

    std::size_t size() const { return steps.size(); }
    bool empty() const { return steps.empty(); }

    friend bool operator==(const Explanation&, const Explanation&) = default;
};

struct Completion {
    Explanation explanation;
    std::optional<Answer> answer;
    std::string raw_text;
};

struct TrainingTriple {
    std::string question_id;
    std::string question_text;
    Answer annotated_answer;
    Explanation annotated_explanation;
    int iteration = 0;
    std::string transcript_id;

    friend bool operator==(const TrainingTriple&, const TrainingTriple&) = default;
};

// Canonicalizes a numeric span: strips currency symbols, comma grouping
// and a leading '+', then reduces to an exact decimal string without
// leading/trailing zero padding ("$5,760.00" -> "5760").
// Throws Errc::parse_failure when no decimal value can be read.
std::string normalize_numeric(std::string_view raw);

// Builds a canonical Answer for the task kind from a raw span.
// Throws Errc::parse_failure when the span holds no valid value.
Answer make_answer(const TaskKind& task, std::string_view raw);

// Exact-value equality on canonical answers. Numeric answers compare as
// decimals after re-normalization, not as strings.
// Throws Errc::kind_mismatch when the kinds differ.
bool answers_equal(const Answer& a, const Answer& b);

} // namespace elad
