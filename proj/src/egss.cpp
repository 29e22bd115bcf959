#include "elad/egss.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "text_util.hpp"

namespace elad {

void validate_egss_config(const EgssConfig& cfg) {
    if (cfg.k < 2) raise(Errc::config_error, "k must be >= 2");
    if (cfg.student_temperature < 0 || cfg.prefix_temperature < 0)
        raise(Errc::config_error, "temperatures must be >= 0");
    if (cfg.entropy_log_base < 0 || cfg.entropy_log_base == 1.0)
        raise(Errc::config_error, "entropy log base must be 0 (natural) or a positive base != 1");
    if (cfg.parallelism < 1) raise(Errc::config_error, "parallelism must be >= 1");
    validate_parse_config(cfg.parse);
}

namespace {

Completion degenerate_completion(const std::string& raw) {
    Completion c;
    c.raw_text = raw;
    std::string step = text::trim(raw);
    if (step.empty()) step = "(empty completion)";
    c.explanation.steps.push_back(std::move(step));
    return c;
}

bool optional_answers_equal(const std::optional<Answer>& a, const std::optional<Answer>& b) {
    // absent never matches anything, including another absent
    if (!a || !b) return false;
    return answers_equal(*a, *b);
}

} // namespace

std::vector<Completion> sample_paths(ModelBackend& student, const Question& question,
                                     const EgssConfig& cfg) {
    validate_egss_config(cfg);
    const std::string prompt = render_prompt(PromptTemplate::standard(TemplateId::zeroshot_cot),
                                             {{"question", question.text}});
    std::vector<std::string> prompts(static_cast<std::size_t>(cfg.k), prompt);
    DecodeParams params{cfg.student_temperature, cfg.max_tokens, std::nullopt};
    auto outcomes = generate_batch(student, prompts, params, cfg.parallelism);

    std::vector<Completion> paths;
    paths.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        if (!o.ok())
            raise(o.error_code.value_or(Errc::backend_unavailable),
                  "sampling failed for " + question.id + ": " + o.error);
        try {
            paths.push_back(parse_completion(o.result->text, question.task, cfg.parse));
        } catch (const Error& e) {
            if (e.code() != Errc::parse_failure) throw;
            paths.push_back(degenerate_completion(o.result->text));
        }
    }
    return paths;
}

std::vector<std::optional<Answer>> prefix_answers(ModelBackend& student, const Question& question,
                                                  const Explanation& explanation,
                                                  const EgssConfig& cfg) {
    if (explanation.empty()) raise(Errc::config_error, "explanation needs at least one step");
    const auto tmpl = PromptTemplate::standard(TemplateId::prefix_continue);
    std::vector<std::string> prompts;
    prompts.reserve(explanation.size() + 1);
    for (std::size_t j = 0; j <= explanation.size(); ++j)
        prompts.push_back(render_prompt(
            tmpl, {{"question", question.text},
                   {"steps_prefix", render_steps_prefix(explanation, j)}}));

    DecodeParams params{cfg.prefix_temperature, cfg.max_tokens, std::nullopt};
    auto outcomes = generate_batch(student, prompts, params, cfg.parallelism);

    std::vector<std::optional<Answer>> answers(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok()) continue; // failed slot stays absent
        answers[i] = extract_final_answer(outcomes[i].result->text, question.task, cfg.parse);
    }
    return answers;
}

double intra_uncertainty(const std::vector<std::optional<Answer>>& prefix_answers,
                         IndicatorMode mode) {
    if (prefix_answers.size() < 2)
        raise(Errc::config_error, "need at least 2 prefix answers (n >= 1)");
    const std::size_t n = prefix_answers.size() - 1;
    std::size_t unchanged = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (optional_answers_equal(prefix_answers[i], prefix_answers[i - 1])) ++unchanged;
    std::size_t hits = mode == IndicatorMode::equal_counts ? unchanged : n - unchanged;
    return static_cast<double>(hits) / static_cast<double>(n);
}

AnswerDistribution build_distribution(const std::vector<std::optional<Answer>>& finals) {
    AnswerDistribution dist;
    dist.k = static_cast<int>(finals.size());
    for (const auto& a : finals) {
        if (!a) {
            dist.entries.push_back({std::nullopt, 1}); // each absent is its own value
            continue;
        }
        bool merged = false;
        for (auto& e : dist.entries) {
            if (e.answer && answers_equal(*e.answer, *a)) {
                ++e.count;
                merged = true;
                break;
            }
        }
        if (!merged) dist.entries.push_back({a, 1});
    }
    return dist;
}

double inter_uncertainty(const AnswerDistribution& distribution, double log_base) {
    if (distribution.k < 1) raise(Errc::config_error, "empty distribution");
    if (distribution.entries.size() <= 1) return 0.0;
    // H = log k - (1/k) * sum c_i log c_i, from exact counts
    const double k = static_cast<double>(distribution.k);
    double acc = 0.0;
    for (const auto& e : distribution.entries)
        if (e.count > 1) acc += static_cast<double>(e.count) * std::log(static_cast<double>(e.count));
    double h = std::log(k) - acc / k;
    if (log_base > 0) h /= std::log(log_base);
    return h;
}

double overall_uncertainty(const std::vector<PathRecord>& paths,
                           const AnswerDistribution& distribution, double log_base) {
    if (static_cast<int>(paths.size()) != distribution.k)
        raise(Errc::config_error, "path count does not match distribution k");
    double h = inter_uncertainty(distribution, log_base);
    for (const auto& p : paths) h += p.intra_score;
    return h;
}

PoolScores score_pool(ModelBackend& student, const std::vector<Question>& pool,
                      const EgssConfig& cfg) {
    validate_egss_config(cfg);
    if (pool.empty()) raise(Errc::config_error, "empty question pool");

    PoolScores scores;
    for (const auto& q : pool) {
        try {
            UncertaintyReport report;
            report.question_id = q.id;
            auto completions = sample_paths(student, q, cfg);
            std::vector<std::optional<Answer>> finals;
            finals.reserve(completions.size());
            for (auto& c : completions) {
                PathRecord record;
                record.completion = std::move(c);
                if (cfg.compute_intra) {
                    record.prefix_answers =
                        prefix_answers(student, q, record.completion.explanation, cfg);
                    record.intra_score = intra_uncertainty(record.prefix_answers,
                                                           cfg.indicator_mode);
                }
                finals.push_back(record.completion.answer);
                report.paths.push_back(std::move(record));
            }
            report.distribution = build_distribution(finals);
            report.h_consistency = inter_uncertainty(report.distribution, cfg.entropy_log_base);
            report.h_overall =
                overall_uncertainty(report.paths, report.distribution, cfg.entropy_log_base);
            scores.reports.push_back(std::move(report));
        } catch (const Error& e) {
            if (e.code() == Errc::config_error) throw; // configuration faults abort the pool
            scores.failures.push_back({q.id, e.what()});
        }
    }
    return scores;
}

std::vector<std::string> select_top_m(const std::vector<UncertaintyReport>& reports, int m) {
    if (m < 1) raise(Errc::usage_error, "m must be >= 1");
    std::vector<const UncertaintyReport*> order;
    order.reserve(reports.size());
    for (const auto& r : reports) order.push_back(&r);
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        if (a->h_overall != b->h_overall) return a->h_overall > b->h_overall;
        return a->question_id < b->question_id;
    });
    std::size_t take = std::min<std::size_t>(m, order.size());
    std::vector<std::string> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(order[i]->question_id);
    return out;
}

std::vector<std::string> select_random(std::vector<std::string> ids, int m, std::uint64_t seed) {
    if (m < 1) raise(Errc::usage_error, "m must be >= 1");
    std::sort(ids.begin(), ids.end()); // input-order independence
    std::mt19937_64 gen(seed);
    // Fisher-Yates with explicit draws, deterministic across platforms
    for (std::size_t i = ids.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(gen() % i);
        std::swap(ids[i - 1], ids[j]);
    }
    if (ids.size() > static_cast<std::size_t>(m)) ids.resize(static_cast<std::size_t>(m));
    return ids;
}

std::vector<std::string> select_by_consistency(const std::vector<UncertaintyReport>& reports,
                                               int m) {
    if (m < 1) raise(Errc::usage_error, "m must be >= 1");
    std::vector<const UncertaintyReport*> order;
    order.reserve(reports.size());
    for (const auto& r : reports) order.push_back(&r);
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        if (a->h_consistency != b->h_consistency) return a->h_consistency > b->h_consistency;
        return a->question_id < b->question_id;
    });
    std::size_t take = std::min<std::size_t>(m, order.size());
    std::vector<std::string> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(order[i]->question_id);
    return out;
}

} // namespace elad
