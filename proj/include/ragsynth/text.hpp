/// @file text.hpp
/// @brief Tokenization and normalization helpers shared by the lexical metrics,
///        chunker, and refusal detector.
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ragsynth::text {

// Half-open [begin, end) character span of one whitespace-delimited token.
struct TokenSpan {
    std::size_t begin;
    std::size_t end;
};

std::vector<TokenSpan> whitespace_token_spans(std::string_view text);
std::size_t whitespace_token_count(std::string_view text);
std::vector<std::string> whitespace_tokens(std::string_view text);

std::string to_lower_ascii(std::string_view s);

// Tokenization rule for all lexical metrics: lowercase, strip terminal
// punctuation from each token, split on whitespace. Tokens that become empty
// are dropped.
std::vector<std::string> normalize_tokens(std::string_view s);

// Replaces UTF-8 curly apostrophes/quotes with their ASCII forms.
std::string straighten_quotes(std::string_view s);

std::string strip(std::string_view s);

// Lowercase + straighten quotes + strip leading/trailing whitespace and
// punctuation. Canonical form used by refusal detection.
std::string normalize_for_refusal(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

}  // namespace ragsynth::text
