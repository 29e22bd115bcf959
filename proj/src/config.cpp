#include "elad/config.hpp"

#include <cstdlib>
#include <fstream>

#include "elad/data_io.hpp"

namespace elad {

using nlohmann::json;

std::string interpolate_env(const std::string& value) {
    std::string out;
    out.reserve(value.size());
    for (std::size_t i = 0; i < value.size();) {
        if (value[i] == '$' && i + 1 < value.size() && value[i + 1] == '{') {
            std::size_t close = value.find('}', i + 2);
            if (close != std::string::npos) {
                std::string name = value.substr(i + 2, close - i - 2);
                if (const char* v = std::getenv(name.c_str())) out += v;
                i = close + 1;
                continue;
            }
        }
        out += value[i++];
    }
    return out;
}

namespace {

void interpolate_tree(json& j) {
    if (j.is_string()) {
        j = interpolate_env(j.get<std::string>());
    } else if (j.is_object() || j.is_array()) {
        for (auto& child : j) interpolate_tree(child);
    }
}

BackendConfig backend_from_json(const json& j, BackendRole role) {
    BackendConfig b;
    b.role = role;
    std::string kind = j.value("kind", "http");
    if (kind == "http")
        b.kind = BackendKind::http;
    else if (kind == "scripted")
        b.kind = BackendKind::scripted;
    else
        raise(Errc::config_error, "backend kind must be http or scripted, got '" + kind + "'");
    b.endpoint = j.value("endpoint", "");
    b.model = j.value("model", "");
    b.auth_env = j.value("auth_env", "");
    b.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
    if (j.contains("retry")) {
        b.retry.max_attempts = j["retry"].value("max_attempts", 3);
        b.retry.backoff_base = std::chrono::milliseconds(j["retry"].value("backoff_ms", 250));
    }
    b.script_path = j.value("script_path", "");
    return b;
}

double log_base_from_json(const json& j) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "e" || s == "nat" || s.empty()) return 0.0;
        raise(Errc::config_error, "entropy_log_base must be \"e\" or a number");
    }
    return j.get<double>();
}

IndicatorMode indicator_from_string(const std::string& s) {
    if (s == "equal-counts") return IndicatorMode::equal_counts;
    if (s == "changed-counts") return IndicatorMode::changed_counts;
    raise(Errc::config_error, "indicator_mode must be equal-counts or changed-counts");
}

} // namespace

EngineConfig config_from_json(const json& input) {
    json j = input;
    interpolate_tree(j);

    EngineConfig cfg;
    cfg.digest = fnv1a_hex(canonical_dump(input));

    const json backends = j.value("backends", json::object());
    if (backends.contains("student"))
        cfg.student = backend_from_json(backends["student"], BackendRole::student);
    if (backends.contains("teacher"))
        cfg.teacher = backend_from_json(backends["teacher"], BackendRole::teacher);
    cfg.student.role = BackendRole::student;
    cfg.teacher.role = BackendRole::teacher;

    if (j.contains("parsing")) {
        const json& p = j["parsing"];
        if (p.contains("step_markers"))
            cfg.parse.step_markers = p["step_markers"].get<std::vector<std::string>>();
        if (p.contains("answer_cues"))
            cfg.parse.answer_cues = p["answer_cues"].get<std::vector<std::string>>();
        cfg.parse.max_steps = p.value("max_steps", cfg.parse.max_steps);
        validate_parse_config(cfg.parse);
    }

    if (j.contains("egss")) {
        const json& e = j["egss"];
        cfg.egss.k = e.value("k", cfg.egss.k);
        cfg.egss.student_temperature = e.value("student_temperature", cfg.egss.student_temperature);
        cfg.egss.prefix_temperature = e.value("prefix_temperature", cfg.egss.prefix_temperature);
        if (e.contains("entropy_log_base"))
            cfg.egss.entropy_log_base = log_base_from_json(e["entropy_log_base"]);
        if (e.contains("indicator_mode"))
            cfg.egss.indicator_mode = indicator_from_string(e["indicator_mode"].get<std::string>());
        cfg.egss.max_tokens = e.value("max_tokens", cfg.egss.max_tokens);
    }
    cfg.egss.parse = cfg.parse;

    if (j.contains("claer")) {
        const json& c = j["claer"];
        cfg.claer.teacher_temperature = c.value("teacher_temperature", cfg.claer.teacher_temperature);
        cfg.claer.max_tokens = c.value("max_tokens", cfg.claer.max_tokens);
    }
    cfg.claer.parse = cfg.parse;
    cfg.eval.parse = cfg.parse;

    if (j.contains("loop")) {
        const json& l = j["loop"];
        cfg.budget = l.value("budget", 0);
        cfg.m = l.value("m", 1);
        if (l.contains("improvement_threshold") && !l["improvement_threshold"].is_null())
            cfg.stop.improvement_threshold = l["improvement_threshold"].get<double>();
        cfg.stop.patience = l.value("patience", 1);
        if (l.contains("strategy"))
            cfg.strategy = selection_strategy_from_name(l["strategy"].get<std::string>());
        if (l.contains("trainer") && !l["trainer"].is_null()) {
            const json& t = l["trainer"];
            TrainerHook hook;
            hook.command = t.at("command").get<std::string>();
            hook.workdir = t.value("workdir", "");
            hook.timeout = std::chrono::milliseconds(t.value("timeout_ms", 600000));
            hook.marker_file = t.value("marker_file", "");
            cfg.trainer = hook;
        }
    }

    int parallelism = j.value("parallelism", 4);
    cfg.egss.parallelism = parallelism;
    cfg.eval.parallelism = parallelism;
    cfg.eval.max_tokens = cfg.egss.max_tokens;

    if (j.contains("io")) {
        const json& io = j["io"];
        cfg.io.pool = io.value("pool", "");
        cfg.io.validation = io.value("validation", "");
        cfg.io.testset = io.value("testset", "");
        cfg.io.export_path = io.value("export", cfg.io.export_path);
        cfg.io.checkpoint = io.value("checkpoint", cfg.io.checkpoint);
        cfg.io.reports = io.value("reports", cfg.io.reports);
        cfg.io.transcripts = io.value("transcripts", cfg.io.transcripts);
    }
    return cfg;
}

EngineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(Errc::config_error, "malformed config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

json starter_config_json() {
    return {
        {"backends",
         {{"student",
           {{"kind", "http"},
            {"endpoint", "http://localhost:8000/v1/chat/completions"},
            {"model", "student-model"},
            {"auth_env", "STUDENT_API_KEY"},
            {"timeout_ms", 60000},
            {"retry", {{"max_attempts", 3}, {"backoff_ms", 250}}},
            {"script_path", "fixtures/student_script.json"}}},
          {"teacher",
           {{"kind", "http"},
            {"endpoint", "https://api.openai.com/v1/chat/completions"},
            {"model", "gpt-3.5-turbo"},
            {"auth_env", "OPENAI_API_KEY"},
            {"timeout_ms", 60000},
            {"retry", {{"max_attempts", 3}, {"backoff_ms", 500}}},
            {"script_path", "fixtures/teacher_script.json"}}}}},
        {"egss",
         {{"k", 5},
          {"student_temperature", 0.7},
          {"prefix_temperature", 0.0},
          {"entropy_log_base", "e"},
          {"indicator_mode", "equal-counts"},
          {"max_tokens", 512}}},
        {"claer", {{"teacher_temperature", 0.0}, {"max_tokens", 1024}}},
        {"loop",
         {{"budget", 10},
          {"m", 3},
          {"improvement_threshold", nullptr},
          {"patience", 1},
          {"strategy", "egss"},
          {"trainer", nullptr}}},
        {"parsing",
         {{"step_markers", {R"(Step\s+\d+\s*:)"}},
          {"answer_cues", {"the final answer is", "the answer is", "####"}},
          {"max_steps", 30}}},
        {"parallelism", 4},
        {"io",
         {{"pool", "pool.jsonl"},
          {"validation", ""},
          {"testset", ""},
          {"export", "export.jsonl"},
          {"checkpoint", "checkpoint.json"},
          {"reports", "reports.jsonl"},
          {"transcripts", "transcripts.jsonl"}}}};
}

void apply_dry_run(EngineConfig& cfg) {
    for (BackendConfig* b : {&cfg.student, &cfg.teacher}) {
        b->kind = BackendKind::scripted;
        if (b->script_path.empty())
            raise(Errc::config_error,
                  std::string(backend_role_name(b->role)) +
                      " backend has no script_path; --dry-run needs scripted fixtures");
    }
}

LoopConfig make_loop_config(const EngineConfig& cfg) {
    LoopConfig loop;
    loop.egss = cfg.egss;
    loop.claer = cfg.claer;
    loop.stop = cfg.stop;
    loop.trainer = cfg.trainer;
    loop.strategy = cfg.strategy;
    loop.eval = cfg.eval;
    loop.export_path = cfg.io.export_path;
    loop.checkpoint_path = cfg.io.checkpoint;
    loop.reports_path = cfg.io.reports;
    loop.transcripts_path = cfg.io.transcripts;
    loop.config_digest = cfg.digest;
    return loop;
}

} // namespace elad
