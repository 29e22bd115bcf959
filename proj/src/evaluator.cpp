#include "elad/evaluator.hpp"

namespace elad {

EvalReport evaluate(ModelBackend& student, const std::vector<Question>& testset,
                    const EvalConfig& cfg) {
    if (testset.empty()) raise(Errc::config_error, "empty test set: accuracy undefined");
    for (const auto& q : testset)
        if (!q.gold)
            raise(Errc::config_error, "question " + q.id + " has no gold answer");

    const auto tmpl = PromptTemplate::standard(TemplateId::zeroshot_cot);
    std::vector<std::string> prompts;
    prompts.reserve(testset.size());
    for (const auto& q : testset)
        prompts.push_back(render_prompt(tmpl, {{"question", q.text}}));

    DecodeParams params{0.0, cfg.max_tokens, std::nullopt}; // greedy
    auto outcomes = generate_batch(student, prompts, params, cfg.parallelism);

    EvalReport report;
    report.total = static_cast<int>(testset.size());
    for (std::size_t i = 0; i < testset.size(); ++i) {
        const auto& q = testset[i];
        EvalRecord rec;
        rec.question_id = q.id;
        rec.gold = *q.gold;
        if (!outcomes[i].ok()) {
            rec.error = outcomes[i].error;
        } else {
            rec.predicted = extract_final_answer(outcomes[i].result->text, q.task, cfg.parse);
        }
        if (rec.predicted) {
            rec.match = answers_equal(*rec.predicted, rec.gold);
        } else {
            ++report.unparseable; // counts as incorrect
        }
        if (rec.match) ++report.correct;
        report.per_question.push_back(std::move(rec));
    }
    report.accuracy = 100.0 * report.correct / report.total;
    return report;
}

} // namespace elad
