#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "elad/config.hpp"
#include "elad/data_io.hpp"
#include "elad/loop.hpp"

namespace {

using nlohmann::json;
using namespace elad;

struct GlobalOpts {
    std::string config_path = "elad.json";
    std::uint64_t seed = 0;
    int parallelism = 0; // 0 = keep config value
    bool dry_run = false;
};

EngineConfig load_engine_config(const GlobalOpts& g) {
    EngineConfig cfg = load_config(g.config_path);
    if (g.dry_run) apply_dry_run(cfg);
    if (g.parallelism > 0) {
        cfg.egss.parallelism = g.parallelism;
        cfg.eval.parallelism = g.parallelism;
    }
    return cfg;
}

void truncate_file(const std::string& path) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::trunc);
}

int cmd_init(const std::string& out_path) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write " + out_path);
    out << starter_config_json().dump(2) << '\n';
    std::cout << "wrote starter config to " << out_path << "\n";
    return 0;
}

int cmd_score(const GlobalOpts& g, const std::string& pool_flag, const std::string& out_flag) {
    EngineConfig cfg = load_engine_config(g);
    std::string pool_path = pool_flag.empty() ? cfg.io.pool : pool_flag;
    if (pool_path.empty()) raise(Errc::usage_error, "no pool file (io.pool or --pool)");
    std::string out_path = out_flag.empty() ? cfg.io.reports : out_flag;

    auto pool = load_pool(pool_path);
    auto student = make_backend(cfg.student);
    PoolScores scores = score_pool(*student, pool, cfg.egss);

    truncate_file(out_path);
    for (const auto& r : scores.reports) append_jsonl(out_path, report_to_json(r));
    for (const auto& f : scores.failures)
        append_jsonl(out_path, json{{"question_id", f.question_id},
                                    {"scoring_failed", true},
                                    {"error", f.error}});
    std::cout << "scored " << scores.reports.size() << " questions ("
              << scores.failures.size() << " failed) -> " << out_path << "\n";
    return 0;
}

std::vector<UncertaintyReport> read_reports(const std::string& path) {
    std::vector<UncertaintyReport> reports;
    for (const auto& line : read_jsonl(path)) {
        if (line.value("scoring_failed", false)) continue;
        reports.push_back(report_from_json(line));
    }
    return reports;
}

int cmd_select(const GlobalOpts& g, const std::string& reports_path, int m,
               const std::string& strategy_name, const std::string& out_path) {
    auto reports = read_reports(reports_path);
    SelectionStrategy strategy = selection_strategy_from_name(strategy_name);
    std::vector<std::string> ids;
    switch (strategy) {
        case SelectionStrategy::egss:
            ids = select_top_m(reports, m);
            break;
        case SelectionStrategy::disagreement:
            ids = select_by_consistency(reports, m);
            break;
        case SelectionStrategy::random: {
            std::vector<std::string> all;
            for (const auto& r : reports) all.push_back(r.question_id);
            ids = select_random(std::move(all), m, g.seed);
            break;
        }
    }
    for (const auto& id : ids) std::cout << id << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) raise(Errc::io_error, "cannot write " + out_path);
        out << json{{"ids", ids}}.dump() << '\n';
    }
    return 0;
}

int cmd_annotate(const GlobalOpts& g, const std::string& pool_flag,
                 const std::string& selection_path, std::vector<std::string> ids,
                 const std::string& out_flag, int iteration) {
    EngineConfig cfg = load_engine_config(g);
    std::string pool_path = pool_flag.empty() ? cfg.io.pool : pool_flag;
    if (pool_path.empty()) raise(Errc::usage_error, "no pool file (io.pool or --pool)");
    if (!selection_path.empty()) {
        std::ifstream in(selection_path);
        if (!in) raise(Errc::io_error, "cannot open selection " + selection_path);
        json j;
        in >> j;
        ids = j.at("ids").get<std::vector<std::string>>();
    }
    if (ids.empty()) raise(Errc::usage_error, "nothing selected (--selection or --ids)");

    auto pool = load_pool(pool_path);
    auto student = make_backend(cfg.student);
    auto teacher = make_backend(cfg.teacher);
    std::string out_path = out_flag.empty() ? cfg.io.export_path : out_flag;

    truncate_file(cfg.io.transcripts);
    std::vector<TrainingTriple> triples;
    int failed = 0;
    for (const auto& id : ids) {
        const Question* q = nullptr;
        for (const auto& cand : pool)
            if (cand.id == id) q = &cand;
        if (!q) raise(Errc::usage_error, "id " + id + " not in pool");
        try {
            GenerationResult r = student->generate(
                render_prompt(PromptTemplate::standard(TemplateId::zeroshot_cot),
                              {{"question", q->text}}),
                {0.0, cfg.egss.max_tokens, std::nullopt});
            Completion seed;
            try {
                seed = parse_completion(r.text, q->task, cfg.parse);
            } catch (const Error& e) {
                if (e.code() != Errc::parse_failure) throw;
                seed.raw_text = r.text;
                seed.explanation.steps.push_back(r.text.empty() ? "(empty completion)" : r.text);
            }
            RevisionTranscript t = revise(*teacher, *q, seed, cfg.claer, iteration);
            if (!cfg.io.transcripts.empty())
                append_jsonl(cfg.io.transcripts, transcript_to_json(t));
            triples.push_back(t.annotated);
        } catch (const Error& e) {
            ++failed;
            std::cerr << "annotation failed for " << id << ": " << e.what() << "\n";
        }
    }
    if (triples.empty()) raise(Errc::annotation_failed, "no sample annotated");
    auto exported = export_training_set(triples, out_path);
    std::cout << "annotated " << triples.size() << " samples (" << failed << " failed) -> "
              << out_path << " digest " << exported.digest << "\n";
    return 0;
}

int cmd_run(const GlobalOpts& g, const std::string& pool_flag, int budget_flag, int m_flag,
            const std::string& resume_path) {
    EngineConfig cfg = load_engine_config(g);
    LoopConfig loop_cfg = make_loop_config(cfg);
    if (!cfg.io.validation.empty()) loop_cfg.validation = load_pool(cfg.io.validation);

    LoopState state;
    if (!resume_path.empty()) {
        state = load_checkpoint(resume_path).state;
    } else {
        std::string pool_path = pool_flag.empty() ? cfg.io.pool : pool_flag;
        if (pool_path.empty()) raise(Errc::usage_error, "no pool file (io.pool or --pool)");
        state.pool_U = load_pool(pool_path);
        state.budget = budget_flag > 0 ? budget_flag : cfg.budget;
        state.m = m_flag > 0 ? m_flag : cfg.m;
        state.rng_seed = g.seed;
        truncate_file(loop_cfg.reports_path);
        truncate_file(loop_cfg.transcripts_path);
    }
    if (state.budget <= 0) raise(Errc::usage_error, "budget must be > 0 (loop.budget or --budget)");

    auto student = make_backend(cfg.student);
    auto teacher = make_backend(cfg.teacher);
    auto reports = run(state, *student, *teacher, loop_cfg);

    for (const auto& r : reports) {
        std::cout << "iteration " << r.iteration << ": selected " << r.selected.size()
                  << ", annotated " << r.annotated << ", failed " << r.failed.size()
                  << ", budget " << r.budget_after;
        if (r.accuracy) std::printf(", accuracy %.2f", *r.accuracy);
        if (r.trainer_ran) std::cout << ", trainer " << (r.trainer_ok ? "ok" : "FAILED");
        std::cout << "\n";
    }
    std::cout << "done: |U|=" << state.pool_U.size() << " |D|=" << state.train_D.size()
              << " budget=" << state.budget << "\n";
    return 0;
}

int cmd_export(const std::string& checkpoint_path, const std::string& out_path) {
    auto data = load_checkpoint(checkpoint_path);
    if (data.state.train_D.empty()) raise(Errc::config_error, "checkpoint has no training data");
    auto exported = export_training_set(data.state.train_D, out_path);
    std::cout << "exported " << exported.lines << " triples -> " << out_path << " digest "
              << exported.digest << "\n";
    return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& testset_flag) {
    EngineConfig cfg = load_engine_config(g);
    std::string path = testset_flag.empty() ? cfg.io.testset : testset_flag;
    if (path.empty()) raise(Errc::usage_error, "no test set (io.testset or --testset)");
    auto testset = load_pool(path);
    auto student = make_backend(cfg.student);
    EvalReport report = evaluate(*student, testset, cfg.eval);
    std::printf("accuracy %.2f\n", report.accuracy);
    std::printf("total=%d correct=%d unparseable=%d\n", report.total, report.correct,
                report.unparseable);
    return 0;
}

int cmd_stats(const std::string& reports_path, const std::string& transcripts_path) {
    if (reports_path.empty() && transcripts_path.empty())
        raise(Errc::usage_error, "give --reports and/or --transcripts");
    if (!reports_path.empty()) {
        auto lines = read_jsonl(reports_path);
        int failed = 0;
        double sum = 0, max_h = 0;
        std::string max_id;
        int n = 0;
        for (const auto& l : lines) {
            if (l.value("scoring_failed", false)) {
                ++failed;
                continue;
            }
            double h = l.at("h_overall").get<double>();
            sum += h;
            ++n;
            if (h >= max_h) {
                max_h = h;
                max_id = l.at("question_id").get<std::string>();
            }
        }
        std::printf("reports: %d scored, %d failed\n", n, failed);
        if (n > 0)
            std::printf("h_overall mean %.5f, max %.5f (%s)\n", sum / n, max_h, max_id.c_str());
    }
    if (!transcripts_path.empty()) {
        auto lines = read_jsonl(transcripts_path);
        std::map<int, int> rejection_histogram;
        int accepted_all = 0;
        for (const auto& l : lines) {
            if (l.contains("rejected_at") && !l["rejected_at"].is_null())
                rejection_histogram[l["rejected_at"].get<int>()]++;
            else
                ++accepted_all;
        }
        std::printf("transcripts: %zu total, %d fully accepted\n", lines.size(), accepted_all);
        for (const auto& [step, count] : rejection_histogram)
            std::printf("rejected at step %d: %d\n", step, count);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ELAD active-distillation engine"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "engine config file")->capture_default_str();
    app.add_option("--seed", g.seed, "RNG seed for reproducible runs");
    app.add_option("--parallelism", g.parallelism, "override request parallelism")
        ->check(CLI::Range(1, 1 << 20));
    app.add_flag("--dry-run", g.dry_run, "use scripted fixture backends");

    auto* init = app.add_subcommand("init", "write a starter config file");
    std::string init_out = "elad.json";
    init->add_option("--out", init_out, "output path")->capture_default_str();

    auto* score = app.add_subcommand("score", "score a pool with EGSS uncertainty");
    std::string score_pool_path, score_out;
    score->add_option("--pool", score_pool_path, "pool file (overrides io.pool)");
    score->add_option("--out", score_out, "reports output (overrides io.reports)");

    auto* select = app.add_subcommand("select", "pick top-m ids from a report file");
    std::string sel_reports, sel_strategy = "egss", sel_out;
    int sel_m = 0;
    select->add_option("--reports", sel_reports, "reports file")->required();
    select->add_option("--m", sel_m, "selection size")->required()->check(CLI::Range(1, 1 << 30));
    select->add_option("--strategy", sel_strategy, "egss|disagreement|random")
        ->capture_default_str();
    select->add_option("--out", sel_out, "write {\"ids\": [...]} here");

    auto* annotate = app.add_subcommand("annotate", "run CLAER over selected samples");
    std::string ann_pool, ann_selection, ann_out;
    std::vector<std::string> ann_ids;
    int ann_iteration = 1;
    annotate->add_option("--pool", ann_pool, "pool file (overrides io.pool)");
    annotate->add_option("--selection", ann_selection, "selection file from `select --out`");
    annotate->add_option("--ids", ann_ids, "question ids")->delimiter(',');
    annotate->add_option("--out", ann_out, "triples output (overrides io.export)");
    annotate->add_option("--iteration", ann_iteration, "iteration tag for provenance")
        ->capture_default_str();

    auto* run_cmd = app.add_subcommand("run", "run the full active-distillation loop");
    std::string run_pool, run_resume;
    int run_budget = 0, run_m = 0;
    run_cmd->add_option("--pool", run_pool, "pool file (overrides io.pool)");
    run_cmd->add_option("--budget", run_budget, "annotation budget (overrides loop.budget)");
    run_cmd->add_option("--m", run_m, "per-iteration selection size (overrides loop.m)");
    run_cmd->add_option("--resume", run_resume, "resume from a checkpoint file");

    auto* export_cmd = app.add_subcommand("export", "export training set from a checkpoint");
    std::string exp_checkpoint, exp_out = "export.jsonl";
    export_cmd->add_option("--checkpoint", exp_checkpoint, "checkpoint file")->required();
    export_cmd->add_option("--out", exp_out, "output path")->capture_default_str();

    auto* eval_cmd = app.add_subcommand("evaluate", "accuracy of the student on a gold test set");
    std::string eval_testset;
    eval_cmd->add_option("--testset", eval_testset, "test pool with gold answers");

    auto* stats = app.add_subcommand("stats", "summarize report/transcript files");
    std::string stats_reports, stats_transcripts;
    stats->add_option("--reports", stats_reports, "reports file");
    stats->add_option("--transcripts", stats_transcripts, "transcripts file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*init) return cmd_init(init_out);
        if (*score) return cmd_score(g, score_pool_path, score_out);
        if (*select) return cmd_select(g, sel_reports, sel_m, sel_strategy, sel_out);
        if (*annotate)
            return cmd_annotate(g, ann_pool, ann_selection, ann_ids, ann_out, ann_iteration);
        if (*run_cmd) return cmd_run(g, run_pool, run_budget, run_m, run_resume);
        if (*export_cmd) return cmd_export(exp_checkpoint, exp_out);
        if (*eval_cmd) return cmd_evaluate(g, eval_testset);
        if (*stats) return cmd_stats(stats_reports, stats_transcripts);
    } catch (const elad::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == Errc::usage_error ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
