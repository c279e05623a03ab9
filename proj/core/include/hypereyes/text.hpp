#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hypereyes {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);

/// Lowercases and collapses every whitespace run to a single space; trims the ends.
std::string collapse_whitespace_lower(std::string_view s);

/// Lowercase alphanumeric tokens; everything else separates tokens.
std::vector<std::string> word_tokens(std::string_view s);

/// word_tokens minus a small English stop-word list.
std::set<std::string> content_tokens(std::string_view s);

bool is_stop_word(std::string_view token);

/// Counts tokens in a piece of text. The default splits on whitespace.
using Tokenizer = std::function<std::size_t(std::string_view)>;
std::size_t whitespace_token_count(std::string_view s);
Tokenizer whitespace_tokenizer();

/// Parses a finite decimal number occupying the whole (trimmed) string.
bool parse_number(std::string_view s, double& out);

/// Shortest decimal text that reads back as the same double; integers print without a fraction.
std::string format_number(double v);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace hypereyes

namespace hypereyes {

/// Answer normalization: case fold, drop punctuation (keeping decimal points inside numbers), collapse whitespace.
std::string normalize_answer(std::string_view s);

/// Equal after normalization, or numerically equal when both sides parse as numbers.
bool answers_equivalent(std::string_view predicted, std::string_view gold);

}  // namespace hypereyes
