#include "elad/loop.hpp"

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>
#include <signal.h>
#include <fcntl.h>

#include <algorithm>
#include <filesystem>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "elad/data_io.hpp"
#include "text_util.hpp"

namespace elad {

const char* selection_strategy_name(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::egss: return "egss";
        case SelectionStrategy::disagreement: return "disagreement";
        case SelectionStrategy::random: return "random";
    }
    return "unknown";
}

SelectionStrategy selection_strategy_from_name(const std::string& name) {
    if (name == "egss") return SelectionStrategy::egss;
    if (name == "disagreement") return SelectionStrategy::disagreement;
    if (name == "random") return SelectionStrategy::random;
    raise(Errc::config_error, "unknown selection strategy '" + name + "'");
}

void validate_state(const LoopState& state) {
    if (state.budget < 0) raise(Errc::state_corruption, "negative budget");
    if (state.m < 1) raise(Errc::state_corruption, "m must be >= 1");
    std::unordered_set<std::string> pool_ids;
    for (const auto& q : state.pool_U)
        if (!pool_ids.insert(q.id).second)
            raise(Errc::state_corruption, "duplicate pool id " + q.id);
    std::unordered_set<std::string> train_ids;
    for (const auto& t : state.train_D) {
        if (!train_ids.insert(t.question_id).second)
            raise(Errc::state_corruption, "duplicate training id " + t.question_id);
        if (pool_ids.count(t.question_id))
            raise(Errc::state_corruption, "id " + t.question_id + " is in both U and D");
    }
}

LoopState update_pools(const LoopState& state, const std::vector<TrainingTriple>& annotated,
                       const std::vector<std::string>& selected_ids) {
    std::unordered_set<std::string> pool_ids;
    for (const auto& q : state.pool_U) pool_ids.insert(q.id);
    std::unordered_set<std::string> selected(selected_ids.begin(), selected_ids.end());
    for (const auto& id : selected)
        if (!pool_ids.count(id))
            raise(Errc::state_corruption, "selected id " + id + " is not in the pool");

    std::unordered_set<std::string> train_ids;
    for (const auto& t : state.train_D) train_ids.insert(t.question_id);

    std::unordered_set<std::string> moved;
    for (const auto& t : annotated) {
        if (!selected.count(t.question_id))
            raise(Errc::state_corruption, "annotated id " + t.question_id + " was not selected");
        if (!moved.insert(t.question_id).second)
            raise(Errc::state_corruption, "duplicate triple for id " + t.question_id);
        if (train_ids.count(t.question_id))
            raise(Errc::state_corruption, "id " + t.question_id + " already annotated");
    }

    LoopState next = state;
    std::erase_if(next.pool_U, [&](const Question& q) { return moved.count(q.id) > 0; });
    next.train_D.insert(next.train_D.end(), annotated.begin(), annotated.end());
    return next;
}

TrainerReport invoke_trainer(const TrainerHook& hook, const std::string& dataset_path,
                             const std::string& output_tag) {
    if (hook.command.find("{dataset_path}") == std::string::npos)
        raise(Errc::config_error, "trainer command must reference {dataset_path}");
    std::error_code ec;
    auto size = std::filesystem::file_size(dataset_path, ec);
    if (ec || size == 0)
        raise(Errc::config_error, "dataset file missing or empty: " + dataset_path);

    std::string cmd = hook.command;
    auto replace_all = [&cmd](const std::string& slot, const std::string& value) {
        for (std::size_t p = cmd.find(slot); p != std::string::npos; p = cmd.find(slot, p))
            cmd.replace(p, slot.size(), value), p += value.size();
    };
    replace_all("{dataset_path}", dataset_path);
    replace_all("{output_tag}", output_tag);

    std::filesystem::path workdir = hook.workdir.empty() ? "." : hook.workdir;
    std::filesystem::path log_path = workdir / ("trainer-" + output_tag + ".log");

    TrainerReport report;
    report.log_path = log_path.string();
    const auto started = std::chrono::steady_clock::now();

    pid_t pid = fork();
    if (pid < 0) {
        report.detail = "fork failed";
        return report;
    }
    if (pid == 0) {
        if (!hook.workdir.empty() && chdir(hook.workdir.c_str()) != 0) _exit(126);
        int fd = open(log_path.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0644);
        if (fd >= 0) {
            dup2(fd, STDOUT_FILENO);
            dup2(fd, STDERR_FILENO);
            close(fd);
        }
        execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    int status = 0;
    const auto deadline = started + hook.timeout;
    for (;;) {
        pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0) {
            report.detail = "waitpid failed";
            return report;
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            report.timed_out = true;
            report.detail = "timed out";
            report.duration = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started);
            return report;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    report.duration = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    report.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (report.exit_code != 0) {
        report.detail = "exit code " + std::to_string(report.exit_code);
        return report;
    }
    if (!hook.marker_file.empty()) {
        std::filesystem::path marker = hook.marker_file;
        if (marker.is_relative()) marker = workdir / marker;
        if (!std::filesystem::exists(marker)) {
            report.detail = "success marker missing: " + marker.string();
            return report;
        }
    }
    report.success = true;
    return report;
}

namespace {

const Question& find_question(const std::vector<Question>& pool, const std::string& id) {
    for (const auto& q : pool)
        if (q.id == id) return q;
    raise(Errc::state_corruption, "question " + id + " vanished from the pool");
}

Completion greedy_completion(ModelBackend& student, const Question& q, const EgssConfig& cfg) {
    const std::string prompt = render_prompt(PromptTemplate::standard(TemplateId::zeroshot_cot),
                                             {{"question", q.text}});
    GenerationResult r = student.generate(prompt, {0.0, cfg.max_tokens, std::nullopt});
    try {
        return parse_completion(r.text, q.task, cfg.parse);
    } catch (const Error& e) {
        if (e.code() != Errc::parse_failure) throw;
        Completion c;
        c.raw_text = r.text;
        std::string step = text::trim(r.text);
        if (step.empty()) step = "(empty completion)";
        c.explanation.steps.push_back(std::move(step));
        return c;
    }
}

bool improvement_stalled(const LoopState& state, const StopCriteria& stop) {
    if (!stop.improvement_threshold) return false;
    const auto& h = state.metric_history;
    int patience = std::max(1, stop.patience);
    if (static_cast<int>(h.size()) < patience + 1) return false;
    for (std::size_t t = h.size() - patience; t < h.size(); ++t)
        if (h[t].accuracy - h[t - 1].accuracy >= *stop.improvement_threshold) return false;
    return true;
}

void write_checkpoint_if_configured(const LoopState& state, const LoopConfig& cfg) {
    if (!cfg.checkpoint_path.empty())
        save_checkpoint(state, cfg.checkpoint_path, cfg.config_digest);
}

} // namespace

IterationReport run_iteration(LoopState& state, ModelBackend& student, ModelBackend& teacher,
                              const LoopConfig& cfg) {
    if (state.budget <= 0 || state.pool_U.empty())
        raise(Errc::config_error, "run_iteration needs budget > 0 and a non-empty pool");

    const int m_eff = std::min({state.m, state.budget, static_cast<int>(state.pool_U.size())});
    IterationReport rep;
    rep.iteration = state.iteration + 1;

    // selection phase (nothing mutated until annotation succeeds)
    std::vector<std::string> selected;
    std::unordered_map<std::string, Completion> seed_completions;
    if (cfg.strategy == SelectionStrategy::random) {
        std::vector<std::string> ids;
        ids.reserve(state.pool_U.size());
        for (const auto& q : state.pool_U) ids.push_back(q.id);
        selected = select_random(std::move(ids), m_eff,
                                 state.rng_seed + static_cast<std::uint64_t>(rep.iteration));
    } else {
        EgssConfig ecfg = cfg.egss;
        ecfg.compute_intra = cfg.strategy == SelectionStrategy::egss;
        PoolScores scores = score_pool(student, state.pool_U, ecfg);
        if (!cfg.reports_path.empty()) {
            for (const auto& r : scores.reports) {
                nlohmann::json line = report_to_json(r);
                line["iteration"] = rep.iteration;
                append_jsonl(cfg.reports_path, line);
            }
        }
        if (scores.reports.empty())
            raise(Errc::backend_unavailable, "scoring produced no usable reports");
        selected = cfg.strategy == SelectionStrategy::egss
                       ? select_top_m(scores.reports, m_eff)
                       : select_by_consistency(scores.reports, m_eff);
        for (const auto& r : scores.reports)
            if (!r.paths.empty()) seed_completions.emplace(r.question_id, r.paths.front().completion);
    }
    rep.selected = selected;

    // annotation phase
    std::vector<TrainingTriple> annotated;
    for (const auto& id : selected) {
        const Question& q = find_question(state.pool_U, id);
        try {
            auto it = seed_completions.find(id);
            Completion seed = it != seed_completions.end()
                                  ? it->second
                                  : greedy_completion(student, q, cfg.egss);
            RevisionTranscript transcript = revise(teacher, q, seed, cfg.claer, rep.iteration);
            if (!cfg.transcripts_path.empty())
                append_jsonl(cfg.transcripts_path, transcript_to_json(transcript));
            annotated.push_back(transcript.annotated);
        } catch (const Error&) {
            rep.failed.push_back(id); // stays in the pool; budget untouched
        }
    }

    // model-update phase
    state = update_pools(state, annotated, selected);
    state.budget -= static_cast<int>(annotated.size());
    state.iteration = rep.iteration;
    rep.annotated = static_cast<int>(annotated.size());
    rep.budget_after = state.budget;

    if (!cfg.export_path.empty() && !state.train_D.empty()) {
        auto exported = export_training_set(state.train_D, cfg.export_path);
        rep.export_digest = exported.digest;
        if (cfg.trainer) {
            rep.trainer_ran = true;
            auto trainer = invoke_trainer(*cfg.trainer, cfg.export_path,
                                          "iter" + std::to_string(rep.iteration));
            rep.trainer_ok = trainer.success;
        }
    }

    if (!cfg.validation.empty()) {
        EvalReport eval = evaluate(student, cfg.validation, cfg.eval);
        rep.accuracy = eval.accuracy;
        state.metric_history.push_back({rep.iteration, eval.accuracy});
    }
    return rep;
}

std::vector<IterationReport> run(LoopState& state, ModelBackend& student, ModelBackend& teacher,
                                 const LoopConfig& cfg) {
    validate_state(state);
    std::vector<IterationReport> reports;
    while (state.budget > 0 && !state.pool_U.empty()) {
        IterationReport rep;
        try {
            rep = run_iteration(state, student, teacher, cfg);
        } catch (const Error&) {
            write_checkpoint_if_configured(state, cfg);
            throw; // aborted iteration propagates after checkpointing
        }
        write_checkpoint_if_configured(state, cfg);
        reports.push_back(rep);
        if (rep.annotated == 0) break; // no forward progress; avoid spinning
        if (improvement_stalled(state, cfg.stop)) break;
    }

    // final retraining on the full D, as the loop epilogue
    if (!cfg.export_path.empty() && !state.train_D.empty()) {
        export_training_set(state.train_D, cfg.export_path);
        if (cfg.trainer) invoke_trainer(*cfg.trainer, cfg.export_path, "final");
    }
    write_checkpoint_if_configured(state, cfg);
    return reports;
}

} // namespace elad
