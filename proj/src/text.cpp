#include "ragsynth/text.hpp"

#include <algorithm>
#include <cctype>

namespace ragsynth::text {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_ascii_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::vector<TokenSpan> whitespace_token_spans(std::string_view text) {
    std::vector<TokenSpan> spans;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space(text[i])) ++i;
        if (i >= n) break;
        std::size_t begin = i;
        while (i < n && !is_space(text[i])) ++i;
        spans.push_back({begin, i});
    }
    return spans;
}

std::size_t whitespace_token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& span : whitespace_token_spans(text))
        out.emplace_back(text.substr(span.begin, span.end - span.begin));
    return out;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> normalize_tokens(std::string_view s) {
    std::vector<std::string> out;
    for (auto& tok : whitespace_tokens(s)) {
        std::string t = to_lower_ascii(tok);
        while (!t.empty() && is_ascii_punct(t.back())) t.pop_back();
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

std::string straighten_quotes(std::string_view s) {
    // U+2018/U+2019 -> ' ; U+201C/U+201D -> "
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xe2 &&
            static_cast<unsigned char>(s[i + 1]) == 0x80) {
            unsigned char b = static_cast<unsigned char>(s[i + 2]);
            if (b == 0x98 || b == 0x99) {
                out.push_back('\'');
                i += 3;
                continue;
            }
            if (b == 0x9c || b == 0x9d) {
                out.push_back('"');
                i += 3;
                continue;
            }
        }
        out.push_back(s[i]);
        ++i;
    }
    return out;
}

std::string strip(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && is_space(s[a])) ++a;
    while (b > a && is_space(s[b - 1])) --b;
    return std::string(s.substr(a, b - a));
}

std::string normalize_for_refusal(std::string_view s) {
    std::string t = to_lower_ascii(straighten_quotes(s));
    std::size_t a = 0, b = t.size();
    auto junk = [](char c) { return is_space(c) || is_ascii_punct(c); };
    while (a < b && junk(t[a])) ++a;
    while (b > a && junk(t[b - 1])) --b;
    return t.substr(a, b - a);
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '\n') {
            lines.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return lines;
}

}  // namespace ragsynth::text
