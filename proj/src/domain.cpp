#include "elad/domain.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "elad/errors.hpp"

namespace elad {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::kind_mismatch: return "kind-mismatch";
        case Errc::parse_failure: return "parse-failure";
        case Errc::template_error: return "template-error";
        case Errc::backend_unavailable: return "backend-unavailable";
        case Errc::protocol_error: return "protocol-error";
        case Errc::script_exhausted: return "script-exhausted";
        case Errc::verdict_parse: return "verdict-parse";
        case Errc::annotation_failed: return "annotation-failed";
        case Errc::config_error: return "config-error";
        case Errc::state_corruption: return "state-corruption";
        case Errc::checksum_mismatch: return "checksum-mismatch";
        case Errc::io_error: return "io-error";
        case Errc::trainer_failed: return "trainer-failed";
        case Errc::usage_error: return "usage-error";
    }
    return "unknown";
}

const char* task_variant_name(TaskVariant v) {
    switch (v) {
        case TaskVariant::numeric: return "numeric";
        case TaskVariant::multiple_choice: return "multiple-choice";
        case TaskVariant::yes_no: return "yes-no";
        case TaskVariant::nli_label: return "nli-label";
    }
    return "unknown";
}

TaskVariant task_variant_from_name(const std::string& name) {
    if (name == "numeric") return TaskVariant::numeric;
    if (name == "multiple-choice") return TaskVariant::multiple_choice;
    if (name == "yes-no") return TaskVariant::yes_no;
    if (name == "nli-label") return TaskVariant::nli_label;
    raise(Errc::config_error, "unknown task kind '" + name + "'");
}

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

std::string trim(std::string_view s) {
    const char* ws = " \t\n\r";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

TaskKind TaskKind::multiple_choice(std::vector<std::string> options) {
    TaskKind t{TaskVariant::multiple_choice, std::move(options)};
    validate_task(t);
    return t;
}

TaskKind TaskKind::nli(std::vector<std::string> labels) {
    TaskKind t{TaskVariant::nli_label, std::move(labels)};
    validate_task(t);
    return t;
}

void validate_task(const TaskKind& task) {
    if (task.variant == TaskVariant::multiple_choice || task.variant == TaskVariant::nli_label) {
        std::unordered_set<std::string> seen;
        for (const auto& l : task.labels) seen.insert(upper(l));
        if (seen.size() < 2)
            raise(Errc::config_error, std::string(task_variant_name(task.variant)) +
                                          " task needs at least 2 distinct labels");
    }
}

std::string normalize_numeric(std::string_view raw) {
    std::string s = trim(raw);
    // strip leading currency markers
    while (!s.empty() && (s.front() == '$' || s.front() == ' ')) s.erase(s.begin());

    std::size_t i = 0;
    bool negative = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        negative = s[i] == '-';
        ++i;
    }
    while (i < s.size() && s[i] == '$') ++i;

    std::string int_part, frac_part;
    bool any_digit = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            int_part += c;
            any_digit = true;
        } else if (c == ',') {
            continue; // grouping separator
        } else {
            break;
        }
    }
    if (i < s.size() && s[i] == '.') {
        ++i;
        for (; i < s.size(); ++i) {
            char c = s[i];
            if (!std::isdigit(static_cast<unsigned char>(c))) break;
            frac_part += c;
            any_digit = true;
        }
    }
    if (!any_digit) raise(Errc::parse_failure, "no decimal value in '" + std::string(raw) + "'");

    // canonical form: no leading zeros, no trailing fraction zeros
    std::size_t nz = int_part.find_first_not_of('0');
    int_part = nz == std::string::npos ? "0" : int_part.substr(nz);
    std::size_t fz = frac_part.find_last_not_of('0');
    frac_part = fz == std::string::npos ? "" : frac_part.substr(0, fz + 1);

    std::string out;
    if (negative && !(int_part == "0" && frac_part.empty())) out += '-';
    out += int_part;
    if (!frac_part.empty()) {
        out += '.';
        out += frac_part;
    }
    return out;
}

Answer make_answer(const TaskKind& task, std::string_view raw) {
    Answer a;
    a.kind = task.variant;
    a.raw = std::string(raw);
    switch (task.variant) {
        case TaskVariant::numeric:
            a.value = normalize_numeric(raw);
            break;
        case TaskVariant::multiple_choice:
        case TaskVariant::nli_label: {
            std::string token = upper(trim(raw));
            // drop wrapping punctuation like "(A)" or "A."
            while (!token.empty() && !std::isalnum(static_cast<unsigned char>(token.front())))
                token.erase(token.begin());
            while (!token.empty() && !std::isalnum(static_cast<unsigned char>(token.back())))
                token.pop_back();
            bool found = false;
            for (const auto& l : task.labels) {
                if (upper(l) == token) {
                    a.value = upper(l);
                    found = true;
                    break;
                }
            }
            if (!found)
                raise(Errc::parse_failure,
                      "'" + std::string(raw) + "' is not one of the task labels");
            break;
        }
        case TaskVariant::yes_no: {
            std::string token = trim(raw);
            std::transform(token.begin(), token.end(), token.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            while (!token.empty() && !std::isalpha(static_cast<unsigned char>(token.back())))
                token.pop_back();
            if (token == "yes" || token == "no")
                a.value = token;
            else
                raise(Errc::parse_failure, "'" + std::string(raw) + "' is not yes/no");
            break;
        }
    }
    return a;
}

bool answers_equal(const Answer& a, const Answer& b) {
    if (a.kind != b.kind)
        raise(Errc::kind_mismatch, std::string("cannot compare ") + task_variant_name(a.kind) +
                                       " with " + task_variant_name(b.kind));
    if (a.kind == TaskVariant::numeric)
        return normalize_numeric(a.value) == normalize_numeric(b.value);
    return a.value == b.value;
}

} // namespace elad
