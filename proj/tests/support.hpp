#pragma once

// Shared fixtures for the unit and acceptance suites: a scripted loop
// fixture, a local chat-completion stub server, and temp-dir helpers.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "elad/claer.hpp"
#include "elad/egss.hpp"
#include "elad/gateway.hpp"
#include "elad/loop.hpp"

namespace eladtest {

using namespace elad;

inline std::string make_temp_dir(const std::string& tag) {
    std::string tmpl = "/tmp/elad-" + tag + "-XXXXXX";
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    return std::string(buf.data());
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << content;
}

// Answer cues used by the transcript-replay fixtures. The paper-style
// dialogues state results as running text, so the cue list carries the
// phrases those transcripts end with.
inline ParseConfig replay_parse_config() {
    ParseConfig cfg;
    cfg.answer_cues = {"the final answer is", "friends received", "total of"};
    return cfg;
}

inline std::string zeroshot_prompt(const std::string& question_text) {
    return render_prompt(PromptTemplate::standard(TemplateId::zeroshot_cot),
                         {{"question", question_text}});
}

inline std::string prefix_prompt(const std::string& question_text, const Explanation& e,
                                 std::size_t upto) {
    return render_prompt(PromptTemplate::standard(TemplateId::prefix_continue),
                         {{"question", question_text},
                          {"steps_prefix", render_steps_prefix(e, upto)}});
}

inline std::string claer_first_prompt(const std::string& question_text, const std::string& step) {
    return render_prompt(PromptTemplate::standard(TemplateId::claer_first),
                         {{"question", question_text}, {"candidate_step", step}});
}

// A fully scripted loop fixture: n numeric questions whose student always
// answers its own index and whose teacher rejects step 1 with a one-step
// remainder. Deterministic by construction.
struct LoopFixture {
    std::vector<Question> pool;
    std::shared_ptr<ScriptedBackend> student;
    std::shared_ptr<ScriptedBackend> teacher;
};

inline LoopFixture make_loop_fixture(int n_questions) {
    LoopFixture f;
    f.student = std::make_shared<ScriptedBackend>(BackendRole::student,
                                                  ScriptedBackend::Mode::keyed);
    f.teacher = std::make_shared<ScriptedBackend>(BackendRole::teacher,
                                                  ScriptedBackend::Mode::keyed);
    for (int i = 1; i <= n_questions; ++i) {
        char id[8];
        std::snprintf(id, sizeof id, "q%02d", i);
        Question q;
        q.id = id;
        q.text = "What is " + std::to_string(i) + " plus zero?";
        q.task = TaskKind::numeric();
        q.gold = make_answer(q.task, std::to_string(i));
        const std::string value = std::to_string(i);
        const std::string step = "It is " + value + ".";
        const std::string completion =
            "Step 1: " + step + " The final answer is " + value + ".";
        f.student->add_keyed(zeroshot_prompt(q.text), completion);
        Explanation e{{step}};
        f.student->add_keyed(prefix_prompt(q.text, e, 1), "The final answer is " + value + ".");
        f.teacher->add_keyed(claer_first_prompt(q.text, step),
                             "No, we should proceed as Step 1: Add zero to " + value +
                                 ". The final answer is " + value + ".");
        f.pool.push_back(std::move(q));
    }
    return f;
}

// Local chat-completion stub. Behavior is keyed off markers embedded in the
// prompt text; hit counts, timestamps and the concurrent-request high-water
// mark are recorded for assertions.
class StubServer {
public:
    StubServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            int now_active = ++active_;
            int seen = hwm_.load();
            while (now_active > seen && !hwm_.compare_exchange_weak(seen, now_active)) {
            }
            handle(req, res);
            --active_;
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    }

    int hits(const std::string& prompt) {
        std::lock_guard<std::mutex> lock(mu_);
        return hits_[prompt];
    }

    std::vector<std::chrono::steady_clock::time_point> timestamps(const std::string& prompt) {
        std::lock_guard<std::mutex> lock(mu_);
        return stamps_[prompt];
    }

    int high_water_mark() const { return hwm_.load(); }

private:
    void handle(const httplib::Request& req, httplib::Response& res) {
        std::string prompt;
        try {
            auto j = nlohmann::json::parse(req.body);
            prompt = j.at("messages").back().at("content").get<std::string>();
        } catch (...) {
            res.status = 400;
            return;
        }
        int hit;
        {
            std::lock_guard<std::mutex> lock(mu_);
            hit = ++hits_[prompt];
            stamps_[prompt].push_back(std::chrono::steady_clock::now());
        }
        if (prompt.find("ALWAYS_503") != std::string::npos) {
            res.status = 503;
            return;
        }
        if (prompt.find("ALWAYS_429") != std::string::npos) {
            res.status = 429;
            return;
        }
        if (prompt.find("FAIL_TWICE") != std::string::npos && hit <= 2) {
            res.status = hit == 1 ? 503 : 429;
            return;
        }
        if (prompt.find("NOT_FOUND") != std::string::npos) {
            res.status = 404;
            return;
        }
        if (prompt.find("BAD_JSON") != std::string::npos) {
            res.set_content("this is not json", "text/plain");
            return;
        }
        auto sleep_pos = prompt.find("SLEEP_MS:");
        if (sleep_pos != std::string::npos) {
            int ms = std::atoi(prompt.c_str() + sleep_pos + 9);
            std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        }
        nlohmann::json body{
            {"choices",
             nlohmann::json::array(
                 {{{"message", {{"role", "assistant"}, {"content", "echo: " + prompt}}}}})}};
        res.set_content(body.dump(), "application/json");
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> active_{0};
    std::atomic<int> hwm_{0};
    std::mutex mu_;
    std::map<std::string, int> hits_;
    std::map<std::string, std::vector<std::chrono::steady_clock::time_point>> stamps_;
};

} // namespace eladtest
