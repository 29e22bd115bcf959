#pragma once

// Internal text helpers shared by the parser, gateway and claer walk.

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace elad::text {

inline std::string trim(std::string_view s) {
    const char* ws = " \t\n\r";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline bool ci_equal_at(std::string_view text, std::size_t pos, std::string_view needle) {
    if (pos + needle.size() > text.size()) return false;
    for (std::size_t i = 0; i < needle.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[pos + i])) !=
            std::tolower(static_cast<unsigned char>(needle[i])))
            return false;
    }
    return true;
}

inline std::size_t ci_find(std::string_view text, std::string_view needle, std::size_t from = 0) {
    if (needle.empty() || text.size() < needle.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= text.size(); ++i)
        if (ci_equal_at(text, i, needle)) return i;
    return std::string_view::npos;
}

inline std::size_t ci_find_last(std::string_view text, std::string_view needle) {
    std::size_t best = std::string_view::npos;
    std::size_t pos = ci_find(text, needle, 0);
    while (pos != std::string_view::npos) {
        best = pos;
        pos = ci_find(text, needle, pos + 1);
    }
    return best;
}

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Standalone (word-bounded) case-insensitive occurrence of `word`.
inline std::size_t find_word(std::string_view text, std::string_view word, std::size_t from = 0) {
    std::size_t pos = ci_find(text, word, from);
    while (pos != std::string_view::npos) {
        bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        std::size_t end = pos + word.size();
        bool right_ok = end >= text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) return pos;
        pos = ci_find(text, word, pos + 1);
    }
    return std::string_view::npos;
}

struct Sentence {
    std::size_t begin = 0;
    std::size_t end = 0; // one past the terminator
};

// Sentence boundaries: '.', '!' or '?' followed by whitespace/end, or a
// newline. A '.' followed by a digit is a decimal point, not a boundary.
inline std::vector<Sentence> split_sentences(std::string_view text) {
    std::vector<Sentence> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        bool boundary = false;
        if (c == '\n') {
            boundary = true;
        } else if (c == '.' || c == '!' || c == '?') {
            boundary = i + 1 >= text.size() ||
                       std::isspace(static_cast<unsigned char>(text[i + 1])) != 0;
        }
        if (boundary) {
            if (trim(text.substr(start, i + 1 - start)).size() > 0)
                out.push_back({start, i + 1});
            start = i + 1;
        }
    }
    if (start < text.size() && !trim(text.substr(start)).empty())
        out.push_back({start, text.size()});
    return out;
}

} // namespace elad::text
