#include "elad/data_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace elad {

using nlohmann::json;

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string canonical_dump(const json& j) {
    // nlohmann objects keep keys sorted; compact dump is canonical
    return j.dump();
}

json answer_to_json(const Answer& a) {
    return {{"kind", task_variant_name(a.kind)}, {"value", a.value}, {"raw", a.raw}};
}

Answer answer_from_json(const json& j) {
    Answer a;
    a.kind = task_variant_from_name(j.at("kind").get<std::string>());
    a.value = j.at("value").get<std::string>();
    a.raw = j.value("raw", a.value);
    return a;
}

json question_to_json(const Question& q) {
    json task{{"kind", task_variant_name(q.task.variant)}};
    if (!q.task.labels.empty()) task["labels"] = q.task.labels;
    json out{{"id", q.id}, {"text", q.text}, {"task", task}};
    out["gold"] = q.gold ? answer_to_json(*q.gold) : json();
    return out;
}

Question question_from_json(const json& j) {
    Question q;
    q.id = j.at("id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    const auto& task = j.at("task");
    q.task.variant = task_variant_from_name(task.at("kind").get<std::string>());
    if (task.contains("labels")) q.task.labels = task["labels"].get<std::vector<std::string>>();
    validate_task(q.task);
    if (j.contains("gold") && !j["gold"].is_null()) q.gold = answer_from_json(j["gold"]);
    return q;
}

json triple_to_json(const TrainingTriple& t) {
    return {{"question_id", t.question_id},
            {"question_text", t.question_text},
            {"answer", answer_to_json(t.annotated_answer)},
            {"steps", t.annotated_explanation.steps},
            {"iteration", t.iteration},
            {"transcript_id", t.transcript_id}};
}

TrainingTriple triple_from_json(const json& j) {
    TrainingTriple t;
    t.question_id = j.at("question_id").get<std::string>();
    t.question_text = j.at("question_text").get<std::string>();
    t.annotated_answer = answer_from_json(j.at("answer"));
    t.annotated_explanation.steps = j.at("steps").get<std::vector<std::string>>();
    t.iteration = j.value("iteration", 0);
    t.transcript_id = j.value("transcript_id", "");
    return t;
}

namespace {

json optional_answer_to_json(const std::optional<Answer>& a) {
    return a ? answer_to_json(*a) : json();
}

std::optional<Answer> optional_answer_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return answer_from_json(j);
}

} // namespace

json report_to_json(const UncertaintyReport& r) {
    json dist{{"k", r.distribution.k}, {"entries", json::array()}};
    for (const auto& e : r.distribution.entries)
        dist["entries"].push_back(
            {{"answer", optional_answer_to_json(e.answer)}, {"count", e.count}});

    json paths = json::array();
    for (const auto& p : r.paths) {
        json prefixes = json::array();
        for (const auto& a : p.prefix_answers) prefixes.push_back(optional_answer_to_json(a));
        paths.push_back({{"steps", p.completion.explanation.steps},
                         {"answer", optional_answer_to_json(p.completion.answer)},
                         {"raw_text", p.completion.raw_text},
                         {"prefix_answers", prefixes},
                         {"intra_score", p.intra_score}});
    }
    return {{"question_id", r.question_id},
            {"paths", paths},
            {"distribution", dist},
            {"h_consistency", r.h_consistency},
            {"h_overall", r.h_overall}};
}

UncertaintyReport report_from_json(const json& j) {
    UncertaintyReport r;
    r.question_id = j.at("question_id").get<std::string>();
    r.h_consistency = j.at("h_consistency").get<double>();
    r.h_overall = j.at("h_overall").get<double>();
    const auto& dist = j.at("distribution");
    r.distribution.k = dist.at("k").get<int>();
    for (const auto& e : dist.at("entries"))
        r.distribution.entries.push_back(
            {optional_answer_from_json(e.at("answer")), e.at("count").get<int>()});
    for (const auto& p : j.value("paths", json::array())) {
        PathRecord rec;
        rec.completion.explanation.steps = p.at("steps").get<std::vector<std::string>>();
        rec.completion.answer = optional_answer_from_json(p.at("answer"));
        rec.completion.raw_text = p.value("raw_text", "");
        for (const auto& a : p.at("prefix_answers")) rec.prefix_answers.push_back(optional_answer_from_json(a));
        rec.intra_score = p.at("intra_score").get<double>();
        r.paths.push_back(std::move(rec));
    }
    return r;
}

json transcript_to_json(const RevisionTranscript& t) {
    json rounds = json::array();
    for (const auto& r : t.rounds) {
        json v{{"decision", r.verdict.decision == VerdictDecision::yes ? "yes" : "no"}};
        if (r.verdict.decision == VerdictDecision::yes) {
            v["rewritten_step"] = r.verdict.rewritten_step;
        } else {
            v["remainder_steps"] = r.verdict.remainder_steps;
            v["final_answer"] = optional_answer_to_json(r.verdict.final_answer);
        }
        rounds.push_back(
            {{"prompt", r.prompt}, {"response", r.response}, {"verdict", v},
             {"reprompted", r.reprompted}});
    }
    json out{{"transcript_id", t.transcript_id},
             {"question_id", t.question_id},
             {"student_steps", t.student_completion.explanation.steps},
             {"student_answer", optional_answer_to_json(t.student_completion.answer)},
             {"rounds", rounds},
             {"annotated", triple_to_json(t.annotated)}};
    out["rejected_at"] = t.rejected_at ? json(*t.rejected_at) : json();
    if (t.remainder)
        out["remainder"] = {{"prompt", t.remainder->prompt}, {"response", t.remainder->response}};
    return out;
}

namespace {

TaskKind task_from_pool_line(const json& j, int line_no) {
    std::string kind = j.at("task_kind").get<std::string>();
    TaskKind task;
    task.variant = task_variant_from_name(kind);
    const bool has_options = j.contains("options") && !j["options"].is_null();
    const bool has_labels = j.contains("labels") && !j["labels"].is_null();
    switch (task.variant) {
        case TaskVariant::multiple_choice:
            if (!has_options)
                raise(Errc::config_error, "line " + std::to_string(line_no) +
                                              ": multiple-choice without options");
            task.labels = j["options"].get<std::vector<std::string>>();
            break;
        case TaskVariant::nli_label:
            task.labels = has_labels ? j["labels"].get<std::vector<std::string>>()
                                     : std::vector<std::string>{"entailment", "neutral",
                                                                "contradiction"};
            break;
        default:
            if (has_options || has_labels)
                raise(Errc::config_error, "line " + std::to_string(line_no) + ": " + kind +
                                              " task does not take options/labels");
            break;
    }
    validate_task(task);
    return task;
}

} // namespace

std::vector<Question> load_pool(const std::string& path,
                                const std::optional<TaskKind>& task_override) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open pool file " + path);

    std::vector<Question> pool;
    std::unordered_map<std::string, int> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            raise(Errc::io_error,
                  "line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
        }
        try {
            Question q;
            q.id = j.at("id").get<std::string>();
            q.text = j.at("question").get<std::string>();
            if (q.text.empty())
                raise(Errc::config_error, "empty question text");
            q.task = task_override ? *task_override : task_from_pool_line(j, line_no);
            if (j.contains("gold") && !j["gold"].is_null())
                q.gold = make_answer(q.task, j["gold"].get<std::string>());
            if (auto [it, inserted] = seen.emplace(q.id, line_no); !inserted)
                raise(Errc::config_error, "duplicate id '" + q.id + "' (first seen at line " +
                                              std::to_string(it->second) + ")");
            pool.push_back(std::move(q));
        } catch (const json::exception& e) {
            raise(Errc::config_error,
                  "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            if (std::string_view(e.what()).find("line ") != std::string_view::npos) throw;
            raise(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return pool;
}

void write_pool(const std::vector<Question>& pool, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write pool file " + path);
    for (const auto& q : pool) {
        json j{{"id", q.id}, {"question", q.text},
               {"task_kind", task_variant_name(q.task.variant)}};
        if (q.task.variant == TaskVariant::multiple_choice) j["options"] = q.task.labels;
        if (q.task.variant == TaskVariant::nli_label) j["labels"] = q.task.labels;
        if (q.gold) j["gold"] = q.gold->value;
        out << canonical_dump(j) << '\n';
    }
}

ExportResult export_training_set(const std::vector<TrainingTriple>& triples,
                                 const std::string& path) {
    if (triples.empty()) raise(Errc::config_error, "refusing to export an empty training set");
    std::vector<const TrainingTriple*> order;
    order.reserve(triples.size());
    for (const auto& t : triples) order.push_back(&t);
    std::sort(order.begin(), order.end(),
              [](const auto* a, const auto* b) { return a->question_id < b->question_id; });

    std::string content;
    for (const auto* t : order) {
        json line{{"question", t->question_text},
                  {"explanation", render_steps_text(t->annotated_explanation)},
                  {"answer", answer_to_json(t->annotated_answer)},
                  {"meta",
                   {{"iteration", t->iteration},
                    {"question_id", t->question_id},
                    {"transcript_id", t->transcript_id}}}};
        content += canonical_dump(line);
        content += '\n';
    }
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write export file " + path);
    out << content;
    out.close();
    if (!out) raise(Errc::io_error, "failed writing export file " + path);
    return {path, fnv1a_hex(content), static_cast<int>(order.size())};
}

std::vector<TrainingTriple> load_training_set(const std::string& path, const ParseConfig& parse) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open export file " + path);
    std::vector<TrainingTriple> triples;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            raise(Errc::io_error,
                  "line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
        }
        TrainingTriple t;
        t.question_text = j.at("question").get<std::string>();
        t.annotated_answer = answer_from_json(j.at("answer"));
        t.annotated_explanation = split_steps(j.at("explanation").get<std::string>(), parse);
        const auto& meta = j.at("meta");
        t.question_id = meta.at("question_id").get<std::string>();
        t.iteration = meta.value("iteration", 0);
        t.transcript_id = meta.value("transcript_id", "");
        triples.push_back(std::move(t));
    }
    return triples;
}

void save_checkpoint(const LoopState& state, const std::string& path,
                     const std::string& config_digest) {
    json payload;
    payload["format_version"] = kCheckpointFormatVersion;
    payload["budget"] = state.budget;
    payload["m"] = state.m;
    payload["iteration"] = state.iteration;
    payload["rng_seed"] = state.rng_seed;
    payload["config_digest"] = config_digest;
    json pool = json::array();
    for (const auto& q : state.pool_U) pool.push_back(question_to_json(q));
    payload["pool_U"] = pool;
    json train = json::array();
    for (const auto& t : state.train_D) train.push_back(triple_to_json(t));
    payload["train_D"] = train;
    json metrics = json::array();
    for (const auto& m : state.metric_history)
        metrics.push_back({{"iteration", m.iteration}, {"accuracy", m.accuracy}});
    payload["metric_history"] = metrics;

    const std::string body = canonical_dump(payload);
    json doc{{"checksum", fnv1a_hex(body)}, {"payload", payload}};
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write checkpoint " + path);
    out << canonical_dump(doc) << '\n';
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open checkpoint " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buffer.str());
    } catch (const json::exception&) {
        raise(Errc::checksum_mismatch, "checkpoint unreadable (truncated or corrupt): " + path);
    }
    if (!doc.contains("checksum") || !doc.contains("payload"))
        raise(Errc::checksum_mismatch, "checkpoint missing checksum envelope: " + path);
    const json& payload = doc["payload"];
    if (fnv1a_hex(canonical_dump(payload)) != doc["checksum"].get<std::string>())
        raise(Errc::checksum_mismatch, "checkpoint checksum mismatch: " + path);
    if (payload.at("format_version").get<int>() != kCheckpointFormatVersion)
        raise(Errc::config_error, "unsupported checkpoint format version");

    CheckpointData data;
    data.config_digest = payload.value("config_digest", "");
    LoopState& s = data.state;
    s.budget = payload.at("budget").get<int>();
    s.m = payload.at("m").get<int>();
    s.iteration = payload.at("iteration").get<int>();
    s.rng_seed = payload.at("rng_seed").get<std::uint64_t>();
    for (const auto& q : payload.at("pool_U")) s.pool_U.push_back(question_from_json(q));
    for (const auto& t : payload.at("train_D")) s.train_D.push_back(triple_from_json(t));
    for (const auto& m : payload.at("metric_history"))
        s.metric_history.push_back(
            {m.at("iteration").get<int>(), m.at("accuracy").get<double>()});
    validate_state(s); // refuse states violating the pool invariants
    return data;
}

void append_jsonl(const std::string& path, const json& line) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot append to " + path);
    out << canonical_dump(line) << '\n';
}

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::vector<json> lines;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            lines.push_back(json::parse(line));
        } catch (const json::exception& e) {
            raise(Errc::io_error,
                  "line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
        }
    }
    return lines;
}

} // namespace elad
