#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "elad/domain.hpp"
#include "elad/errors.hpp"

namespace elad {

struct DecodeParams {
    double temperature = 0.0;
    int max_tokens = 512;
    std::optional<std::int64_t> seed; // honored only by backends that support it
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{250};
};

enum class BackendRole { student, teacher };
enum class BackendKind { http, scripted };

const char* backend_role_name(BackendRole r);

struct BackendConfig {
    BackendRole role = BackendRole::student;
    BackendKind kind = BackendKind::http;
    // http
    std::string endpoint; // full URL, e.g. http://host:8000/v1/chat/completions
    std::string model;
    std::string auth_env; // env var holding the bearer token
    std::chrono::milliseconds timeout{30000};
    RetryPolicy retry;
    // scripted
    std::string script_path;
};

struct ChatMessage {
    std::string role;
    std::string content;
};

struct GenerationResult {
    std::string text;
    std::string prompt_echo;
    BackendRole backend_role = BackendRole::student;
    std::chrono::milliseconds latency{0};
    int attempt_count = 1;
};

// Per-slot outcome of a batch; a failed slot carries its error instead of
// aborting siblings.
struct GenerationOutcome {
    std::optional<GenerationResult> result;
    std::string error;
    std::optional<Errc> error_code;

    bool ok() const { return result.has_value(); }
};

class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    virtual BackendRole role() const = 0;
    virtual GenerationResult generate_chat(const std::vector<ChatMessage>& messages,
                                           const DecodeParams& params) = 0;

    // Single-turn convenience wrapper.
    GenerationResult generate(const std::string& prompt, const DecodeParams& params);
};

using BackendHandle = std::shared_ptr<ModelBackend>;

// Deterministic replay backend for tests and --dry-run.
// keyed mode: responses looked up by the last user message; repeated hits
// walk the per-key list and stay on the last entry.
// queue mode: responses popped in order regardless of prompt.
class ScriptedBackend : public ModelBackend {
public:
    enum class Mode { keyed, queue };

    ScriptedBackend(BackendRole role, Mode mode) : role_(role), mode_(mode) {}

    void push_response(std::string text);
    void add_keyed(std::string prompt, std::vector<std::string> responses);
    void add_keyed(std::string prompt, std::string response);

    std::size_t remaining_queue() const;

    static std::shared_ptr<ScriptedBackend> from_file(BackendRole role, const std::string& path);

    BackendRole role() const override { return role_; }
    GenerationResult generate_chat(const std::vector<ChatMessage>& messages,
                                   const DecodeParams& params) override;

private:
    BackendRole role_;
    Mode mode_;
    mutable std::mutex mu_;
    std::deque<std::string> queue_;
    struct KeyedEntry {
        std::vector<std::string> responses;
        std::size_t cursor = 0;
    };
    std::unordered_map<std::string, KeyedEntry> table_;
};

// JSON-over-HTTP chat-completion client with retry/backoff on transport
// errors, 429 and 5xx.
class HttpBackend : public ModelBackend {
public:
    explicit HttpBackend(BackendConfig cfg);

    BackendRole role() const override { return cfg_.role; }
    GenerationResult generate_chat(const std::vector<ChatMessage>& messages,
                                   const DecodeParams& params) override;

private:
    BackendConfig cfg_;
    std::string base_; // scheme://host:port
    std::string path_;
};

BackendHandle make_backend(const BackendConfig& cfg);

enum class TemplateId { zeroshot_cot, prefix_continue, claer_first, claer_continue, claer_remainder };

// Prompt body with named {slot} markers.
struct PromptTemplate {
    TemplateId id = TemplateId::zeroshot_cot;
    std::string body;

    static PromptTemplate standard(TemplateId id);
};

using SlotMap = std::map<std::string, std::string>;

// Deterministic slot substitution; a slot referenced by the body but not
// supplied raises Errc::template_error.
std::string render_prompt(const PromptTemplate& tmpl, const SlotMap& slots);

// "\nStep 1: ...\nStep 2: ..." for the first `upto` steps; empty when
// upto == 0 so prefix_continue degenerates to zeroshot_cot.
std::string render_steps_prefix(const Explanation& explanation, std::size_t upto);

// Fans prompts out with at most parallelism_limit requests in flight.
// Results are in input order; per-slot failures are embedded.
std::vector<GenerationOutcome> generate_batch(ModelBackend& backend,
                                              const std::vector<std::string>& prompts,
                                              const DecodeParams& params, int parallelism_limit);

} // namespace elad
