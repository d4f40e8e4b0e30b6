#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace trialmatch::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Case-fold and collapse every whitespace run to one space, trimmed.
std::string normalize_whitespace_lower(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// "\r\n" and lone "\r" become "\n".
std::string canonicalize_newlines(std::string_view s);

// Maximal runs of ASCII letters/digits, lowercased.
std::vector<std::string> word_tokens(std::string_view s);

// word_tokens minus the fixed stopword list (see FORMATS.md).
std::vector<std::string> content_tokens(std::string_view s);

bool is_stopword(std::string_view token);

bool contains_ci(std::string_view haystack, std::string_view needle);

}  // namespace trialmatch::text
