#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace syntempl {

struct Token {
    std::string text;
    size_t begin;  // byte offset into source
    size_t end;    // one past last byte
};

namespace detail {

inline bool is_open_punct(char c) {
    return c == '(' || c == '[' || c == '{' || c == '"' || c == '`';
}

inline bool is_close_punct(char c) {
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == ')' ||
           c == ']' || c == '}' || c == '"' || c == '\'' || c == '%';
}

inline char ascii_lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline bool ends_with_nt(std::string_view s) {
    return s.size() >= 3 && ascii_lower(s[s.size() - 3]) == 'n' && s[s.size() - 2] == '\'' &&
           ascii_lower(s[s.size() - 1]) == 't';
}

// 's 're 've 'll 'd 'm detach as clitic tokens
inline size_t clitic_split(std::string_view s) {
    auto tail_is = [&](std::string_view suf) {
        if (s.size() < suf.size() + 1) return false;
        for (size_t i = 0; i < suf.size(); ++i)
            if (ascii_lower(s[s.size() - suf.size() + i]) != suf[i]) return false;
        return true;
    };
    for (std::string_view suf : {"'re", "'ve", "'ll"})
        if (tail_is(suf)) return s.size() - 3;
    for (std::string_view suf : {"'s", "'d", "'m"})
        if (tail_is(suf)) return s.size() - 2;
    return 0;
}

}  // namespace detail

// Whitespace split with PTB-style punctuation detachment and contraction
// splitting. Deterministic; spans tile the non-whitespace bytes of the input.
inline std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    size_t i = 0;
    const size_t n = text.size();
    auto emit = [&](size_t b, size_t e) {
        if (e > b) out.push_back({std::string(text.substr(b, e - b)), b, e});
    };
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) break;
        size_t b = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t e = i;

        // leading opening punctuation, one char at a time
        while (b < e && detail::is_open_punct(text[b]) && e - b > 1) {
            emit(b, b + 1);
            ++b;
        }
        // trailing punctuation, peeled right to left
        size_t tail = e;
        while (tail > b + 1 && detail::is_close_punct(text[tail - 1])) {
            // keep apostrophes that belong to a contraction
            if (text[tail - 1] == '\'') break;
            --tail;
        }
        std::string_view mid = text.substr(b, tail - b);
        if (detail::ends_with_nt(mid) && mid.size() > 3) {
            emit(b, b + mid.size() - 3);
            emit(b + mid.size() - 3, tail);
        } else if (size_t cut = detail::clitic_split(mid); cut > 0) {
            emit(b, b + cut);
            emit(b + cut, tail);
        } else {
            emit(b, tail);
        }
        for (size_t p = tail; p < e; ++p) emit(p, p + 1);
    }
    return out;
}

inline std::vector<std::string> token_strings(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
    return out;
}

}  // namespace syntempl
