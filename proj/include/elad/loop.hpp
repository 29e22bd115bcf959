#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "elad/claer.hpp"
#include "elad/egss.hpp"
#include "elad/evaluator.hpp"

namespace elad {

struct MetricPoint {
    int iteration = 0;
    double accuracy = 0.0;

    friend bool operator==(const MetricPoint&, const MetricPoint&) = default;
};

// The checkpointable heart of the loop: pools, budget and history.
struct LoopState {
    std::vector<Question> pool_U;
    std::vector<TrainingTriple> train_D;
    int budget = 0;    // annotations remaining to pay for
    int m = 1;         // selection size per iteration
    int iteration = 0;
    std::vector<MetricPoint> metric_history;
    std::uint64_t rng_seed = 0;
};

// Validates disjoint pools, non-negative budget, unique ids.
void validate_state(const LoopState& state);

struct StopCriteria {
    std::optional<double> improvement_threshold; // accuracy delta
    int patience = 1;
};

// External fine-tuning command; {dataset_path} and {output_tag} are
// substituted before execution.
struct TrainerHook {
    std::string command;
    std::string workdir;
    std::chrono::milliseconds timeout{600000};
    std::string marker_file; // extra success signal when non-empty
};

struct TrainerReport {
    bool success = false;
    std::chrono::milliseconds duration{0};
    std::string log_path;
    int exit_code = -1;
    bool timed_out = false;
    std::string detail;
};

enum class SelectionStrategy { egss, disagreement, random };

const char* selection_strategy_name(SelectionStrategy s);
SelectionStrategy selection_strategy_from_name(const std::string& name);

struct LoopConfig {
    EgssConfig egss;
    ClaerConfig claer;
    StopCriteria stop;
    std::optional<TrainerHook> trainer;
    SelectionStrategy strategy = SelectionStrategy::egss;
    std::vector<Question> validation; // held-out split for the stopping metric
    EvalConfig eval;
    // Output paths; empty disables the corresponding artifact.
    std::string export_path;
    std::string checkpoint_path;
    std::string reports_path;
    std::string transcripts_path;
    std::string config_digest;
};

struct IterationReport {
    int iteration = 0;
    std::vector<std::string> selected;
    int annotated = 0;
    std::vector<std::string> failed; // annotation-failed ids (stay in pool)
    int budget_after = 0;
    bool trainer_ran = false;
    bool trainer_ok = true;
    std::optional<double> accuracy;
    std::string export_digest;
};

// Algorithm-1 pool update: annotated ids move from U to D; annotation-failed
// selections stay in U. Throws Errc::state_corruption when an annotated id is
// not a selected pool member or is already in D.
LoopState update_pools(const LoopState& state, const std::vector<TrainingTriple>& annotated,
                       const std::vector<std::string>& selected_ids);

// Runs the hook command with slots substituted, enforcing the timeout and
// the success signal (exit 0 plus marker file when configured).
TrainerReport invoke_trainer(const TrainerHook& hook, const std::string& dataset_path,
                             const std::string& output_tag);

// One select -> annotate -> update -> retrain pass. The effective batch is
// min(m, budget, |U|); only successful annotations consume budget.
IterationReport run_iteration(LoopState& state, ModelBackend& student, ModelBackend& teacher,
                              const LoopConfig& cfg);

// Iterates until the budget is spent, the pool empties or the improvement
// stop fires, then performs the final retraining pass.
std::vector<IterationReport> run(LoopState& state, ModelBackend& student, ModelBackend& teacher,
                                 const LoopConfig& cfg);

} // namespace elad
