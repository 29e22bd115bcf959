#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "elad/gateway.hpp"
#include "elad/parser.hpp"

namespace elad {

enum class IndicatorMode { equal_counts, changed_counts };

struct EgssConfig {
    int k = 5;                       // reasoning paths per question
    double student_temperature = 0.7;
    double prefix_temperature = 0.0; // greedy for ablation answers
    double entropy_log_base = 0.0;   // 0 = natural log
    IndicatorMode indicator_mode = IndicatorMode::equal_counts;
    int max_tokens = 512;
    int parallelism = 4;
    bool compute_intra = true;       // dropped by the disagreement selector
    ParseConfig parse;
};

void validate_egss_config(const EgssConfig& cfg);

// One unique final-answer value and its occurrence count. An absent
// (unparseable) answer never matches anything, so every absent path is its
// own entry with count 1.
struct DistributionEntry {
    std::optional<Answer> answer;
    int count = 0;
};

struct AnswerDistribution {
    std::vector<DistributionEntry> entries;
    int k = 0;

    int unique_count() const { return static_cast<int>(entries.size()); }
};

AnswerDistribution build_distribution(const std::vector<std::optional<Answer>>& finals);

struct PathRecord {
    Completion completion;
    std::vector<std::optional<Answer>> prefix_answers; // length n+1, j = 0..n
    double intra_score = 0.0;
};

struct UncertaintyReport {
    std::string question_id;
    std::vector<PathRecord> paths;
    AnswerDistribution distribution;
    double h_consistency = 0.0;
    double h_overall = 0.0;
};

struct ScoringFailure {
    std::string question_id;
    std::string error;
};

struct PoolScores {
    std::vector<UncertaintyReport> reports;
    std::vector<ScoringFailure> failures;
};

// k sampled reasoning paths at student_temperature; parse failures become a
// degenerate one-step completion with an absent answer.
std::vector<Completion> sample_paths(ModelBackend& student, const Question& question,
                                     const EgssConfig& cfg);

// Greedy answers for the n+1 prefixes (q, s_<=j), j = 0..n. The adjacent
// pair (answers[i], answers[i-1]) realizes the with/without-step-i ablation,
// so n+1 prompts stand in for the naive 2n.
std::vector<std::optional<Answer>> prefix_answers(ModelBackend& student, const Question& question,
                                                  const Explanation& explanation,
                                                  const EgssConfig& cfg);

// Fraction of adjacent prefix pairs with an unchanged answer (equal_counts)
// or a changed one (changed_counts). Absent answers compare unequal to
// everything, including another absent.
double intra_uncertainty(const std::vector<std::optional<Answer>>& prefix_answers,
                         IndicatorMode mode);

// Shannon entropy of the answer distribution, from exact count ratios.
double inter_uncertainty(const AnswerDistribution& distribution, double log_base = 0.0);

// Entropy plus the unnormalized sum of per-path intra scores.
double overall_uncertainty(const std::vector<PathRecord>& paths,
                           const AnswerDistribution& distribution, double log_base = 0.0);

// One report per question; per-question failures are recorded, not fatal.
PoolScores score_pool(ModelBackend& student, const std::vector<Question>& pool,
                      const EgssConfig& cfg);

// The min(m, |reports|) ids with the largest h_overall, descending; ties
// break by ascending question id.
std::vector<std::string> select_top_m(const std::vector<UncertaintyReport>& reports, int m);

// Comparison baselines.
std::vector<std::string> select_random(std::vector<std::string> ids, int m, std::uint64_t seed);
std::vector<std::string> select_by_consistency(const std::vector<UncertaintyReport>& reports, int m);

} // namespace elad
