#include "elad/gateway.hpp"

#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "text_util.hpp"

namespace elad {

const char* backend_role_name(BackendRole r) {
    return r == BackendRole::student ? "student" : "teacher";
}

GenerationResult ModelBackend::generate(const std::string& prompt, const DecodeParams& params) {
    if (prompt.empty()) raise(Errc::config_error, "empty prompt");
    std::vector<ChatMessage> messages{{"user", prompt}};
    return generate_chat(messages, params);
}

// ---- scripted backend ----

void ScriptedBackend::push_response(std::string text) {
    std::lock_guard<std::mutex> lock(mu_);
    queue_.push_back(std::move(text));
}

void ScriptedBackend::add_keyed(std::string prompt, std::vector<std::string> responses) {
    std::lock_guard<std::mutex> lock(mu_);
    auto& entry = table_[std::move(prompt)];
    for (auto& r : responses) entry.responses.push_back(std::move(r));
}

void ScriptedBackend::add_keyed(std::string prompt, std::string response) {
    add_keyed(std::move(prompt), std::vector<std::string>{std::move(response)});
}

std::size_t ScriptedBackend::remaining_queue() const {
    std::lock_guard<std::mutex> lock(mu_);
    return queue_.size();
}

GenerationResult ScriptedBackend::generate_chat(const std::vector<ChatMessage>& messages,
                                                const DecodeParams&) {
    if (messages.empty()) raise(Errc::config_error, "empty message list");
    const std::string* key = &messages.back().content;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") {
            key = &it->content;
            break;
        }
    }

    GenerationResult result;
    result.prompt_echo = *key;
    result.backend_role = role_;
    result.attempt_count = 1;

    std::lock_guard<std::mutex> lock(mu_);
    if (mode_ == Mode::queue) {
        if (queue_.empty())
            raise(Errc::script_exhausted, "scripted queue empty for prompt: " + key->substr(0, 80));
        result.text = std::move(queue_.front());
        queue_.pop_front();
        return result;
    }
    auto it = table_.find(*key);
    if (it == table_.end())
        raise(Errc::script_exhausted, "no scripted response for prompt: " + key->substr(0, 120));
    auto& entry = it->second;
    std::size_t idx = std::min(entry.cursor, entry.responses.size() - 1);
    ++entry.cursor;
    result.text = entry.responses[idx];
    return result;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(BackendRole role,
                                                            const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open script file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::config_error, "malformed script file " + path + ": " + e.what());
    }
    std::string mode = j.value("mode", "keyed");
    auto backend = std::make_shared<ScriptedBackend>(
        role, mode == "queue" ? Mode::queue : Mode::keyed);
    bool any = false;
    if (mode == "queue") {
        for (const auto& r : j.at("responses")) {
            backend->push_response(r.get<std::string>());
            any = true;
        }
    } else {
        for (const auto& [key, value] : j.at("table").items()) {
            if (value.is_string()) {
                backend->add_keyed(key, value.get<std::string>());
            } else {
                backend->add_keyed(key, value.get<std::vector<std::string>>());
            }
            any = true;
        }
    }
    if (!any) raise(Errc::config_error, "script file " + path + " has no responses");
    return backend;
}

// ---- http backend ----

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty()) raise(Errc::config_error, "http backend needs an endpoint");
    if (cfg_.model.empty()) raise(Errc::config_error, "http backend needs a model name");
    auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos)
        raise(Errc::config_error, "endpoint must be a full URL: " + cfg_.endpoint);
    auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        base_ = cfg_.endpoint;
        path_ = "/v1/chat/completions";
    } else {
        base_ = cfg_.endpoint.substr(0, path_start);
        path_ = cfg_.endpoint.substr(path_start);
    }
}

GenerationResult HttpBackend::generate_chat(const std::vector<ChatMessage>& messages,
                                            const DecodeParams& params) {
    if (messages.empty()) raise(Errc::config_error, "empty message list");

    nlohmann::json body;
    body["model"] = cfg_.model;
    auto msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = msgs;
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_tokens;
    if (params.seed) body["seed"] = *params.seed;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!cfg_.auth_env.empty()) {
        if (const char* token = std::getenv(cfg_.auth_env.c_str()); token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    const std::string* prompt_echo = &messages.back().content;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") {
            prompt_echo = &it->content;
            break;
        }
    }

    const auto started = std::chrono::steady_clock::now();
    std::string last_error;
    const int max_attempts = std::max(1, cfg_.retry.max_attempts);
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        httplib::Client client(base_);
        client.set_connection_timeout(cfg_.timeout);
        client.set_read_timeout(cfg_.timeout);
        client.set_write_timeout(cfg_.timeout);

        auto res = client.Post(path_, headers, payload, "application/json");
        bool retryable = false;
        if (!res) {
            retryable = true;
            last_error = "transport: " + httplib::to_string(res.error());
        } else if (res->status == 429 || (res->status >= 500 && res->status < 600)) {
            retryable = true;
            last_error = "status " + std::to_string(res->status);
        } else if (res->status != 200) {
            raise(Errc::protocol_error, "unexpected status " + std::to_string(res->status) +
                                            " from " + base_ + path_);
        } else {
            try {
                auto j = nlohmann::json::parse(res->body);
                GenerationResult result;
                result.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
                result.prompt_echo = *prompt_echo;
                result.backend_role = cfg_.role;
                result.attempt_count = attempt;
                result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - started);
                return result;
            } catch (const nlohmann::json::exception& e) {
                raise(Errc::protocol_error,
                      std::string("malformed chat-completion response: ") + e.what());
            }
        }
        if (retryable && attempt < max_attempts) {
            auto delay = cfg_.retry.backoff_base * (1LL << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
    }
    raise(Errc::backend_unavailable, "retries exhausted against " + base_ + path_ + " (" +
                                         last_error + ")");
}

BackendHandle make_backend(const BackendConfig& cfg) {
    if (cfg.kind == BackendKind::scripted) {
        if (cfg.script_path.empty())
            raise(Errc::config_error, std::string(backend_role_name(cfg.role)) +
                                          " backend is scripted but has no script_path");
        return ScriptedBackend::from_file(cfg.role, cfg.script_path);
    }
    return std::make_shared<HttpBackend>(cfg);
}

// ---- prompt templates ----

PromptTemplate PromptTemplate::standard(TemplateId id) {
    switch (id) {
        case TemplateId::zeroshot_cot:
            return {id, "{question}\nLet's think step by step."};
        case TemplateId::prefix_continue:
            return {id, "{question}\nLet's think step by step.{steps_prefix}"};
        case TemplateId::claer_first:
            return {id,
                    "For question <{question}>. Let's think step by step. Can we start with this "
                    "step: <{candidate_step}>? If yes, give me your step. If no, give me the rest "
                    "steps and the final answer."};
        case TemplateId::claer_continue:
            return {id, "Can we continue with this step: <{candidate_step}>?"};
        case TemplateId::claer_remainder:
            return {id, "What are the rest of the reasoning procedures and the answer?"};
    }
    raise(Errc::template_error, "unknown template id");
}

std::string render_prompt(const PromptTemplate& tmpl, const SlotMap& slots) {
    std::string out;
    const std::string& body = tmpl.body;
    for (std::size_t i = 0; i < body.size();) {
        if (body[i] != '{') {
            out += body[i++];
            continue;
        }
        std::size_t close = body.find('}', i + 1);
        if (close == std::string::npos) {
            out += body[i++];
            continue;
        }
        std::string name = body.substr(i + 1, close - i - 1);
        bool word = !name.empty();
        for (char c : name)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') word = false;
        if (!word) {
            out += body[i++];
            continue;
        }
        auto it = slots.find(name);
        if (it == slots.end())
            raise(Errc::template_error, "missing slot '" + name + "'");
        out += it->second;
        i = close + 1;
    }
    return out;
}

std::string render_steps_prefix(const Explanation& explanation, std::size_t upto) {
    std::string out;
    upto = std::min(upto, explanation.steps.size());
    for (std::size_t i = 0; i < upto; ++i)
        out += "\nStep " + std::to_string(i + 1) + ": " + explanation.steps[i];
    return out;
}

// ---- batched generation ----

std::vector<GenerationOutcome> generate_batch(ModelBackend& backend,
                                              const std::vector<std::string>& prompts,
                                              const DecodeParams& params, int parallelism_limit) {
    if (parallelism_limit < 1) raise(Errc::config_error, "parallelism_limit must be >= 1");
    std::vector<GenerationOutcome> results(prompts.size());
    if (prompts.empty()) return results;

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= prompts.size()) return;
            try {
                results[i].result = backend.generate(prompts[i], params);
            } catch (const Error& e) {
                results[i].error = e.what();
                results[i].error_code = e.code();
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };

    std::size_t n_threads = std::min<std::size_t>(parallelism_limit, prompts.size());
    if (n_threads <= 1) {
        worker();
        return results;
    }
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
    return results;
}

} // namespace elad
