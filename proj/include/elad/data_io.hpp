#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elad/claer.hpp"
#include "elad/egss.hpp"
#include "elad/loop.hpp"

namespace elad {

// All files are line-delimited JSON (UTF-8, LF) except checkpoints, which
// are a single JSON document with a checksum.

inline constexpr int kCheckpointFormatVersion = 1;

std::string fnv1a_hex(std::string_view data);

// Canonical serialization: nlohmann objects keep keys sorted, so identical
// values dump to identical bytes.
std::string canonical_dump(const nlohmann::json& j);

nlohmann::json answer_to_json(const Answer& a);
Answer answer_from_json(const nlohmann::json& j);

nlohmann::json question_to_json(const Question& q);
Question question_from_json(const nlohmann::json& j);

nlohmann::json triple_to_json(const TrainingTriple& t);
TrainingTriple triple_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const UncertaintyReport& r);
UncertaintyReport report_from_json(const nlohmann::json& j);

nlohmann::json transcript_to_json(const RevisionTranscript& t);

// Reads a question pool. Lines: {id, question, task_kind, options?, labels?,
// gold?}. Duplicate ids and malformed lines fail with the offending line
// number.
std::vector<Question> load_pool(const std::string& path,
                                const std::optional<TaskKind>& task_override = std::nullopt);

void write_pool(const std::vector<Question>& pool, const std::string& path);

struct ExportResult {
    std::string path;
    std::string digest;
    int lines = 0;
};

// Writes the fine-tuning set, one triple per line ordered by question id.
// Explanations carry explicit "Step i:" headers so the exported text and the
// parser's segmentation agree.
ExportResult export_training_set(const std::vector<TrainingTriple>& triples,
                                 const std::string& path);

// Re-reads an export file back into triples (round-trip check and resume).
std::vector<TrainingTriple> load_training_set(const std::string& path, const ParseConfig& parse);

void save_checkpoint(const LoopState& state, const std::string& path,
                     const std::string& config_digest = {});

struct CheckpointData {
    LoopState state;
    std::string config_digest;
};

// Refuses corrupt files (checksum) and states violating the pool invariants.
CheckpointData load_checkpoint(const std::string& path);

void append_jsonl(const std::string& path, const nlohmann::json& line);
std::vector<nlohmann::json> read_jsonl(const std::string& path);

} // namespace elad
