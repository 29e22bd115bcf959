#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "elad/gateway.hpp"
#include "elad/loop.hpp"

namespace elad {

// One configuration file drives every module. Sections: backends, egss,
// claer, loop, parsing, io. String values may interpolate ${ENV_VAR}.
struct EngineConfig {
    BackendConfig student;
    BackendConfig teacher;
    EgssConfig egss;
    ClaerConfig claer;
    int budget = 0;
    int m = 1;
    StopCriteria stop;
    std::optional<TrainerHook> trainer;
    SelectionStrategy strategy = SelectionStrategy::egss;
    ParseConfig parse;
    EvalConfig eval;
    struct IoPaths {
        std::string pool;
        std::string validation;
        std::string testset;
        std::string export_path = "export.jsonl";
        std::string checkpoint = "checkpoint.json";
        std::string reports = "reports.jsonl";
        std::string transcripts = "transcripts.jsonl";
    } io;
    std::string digest; // canonical digest of the loaded file
};

std::string interpolate_env(const std::string& value);

EngineConfig load_config(const std::string& path);
EngineConfig config_from_json(const nlohmann::json& j);

// Starter config written by `init`.
nlohmann::json starter_config_json();

// Forces both backends onto their scripted fixtures (dry runs).
void apply_dry_run(EngineConfig& cfg);

LoopConfig make_loop_config(const EngineConfig& cfg);

} // namespace elad
