#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace air {

enum class CharClass { whitespace, textual, symbol };

// Decodes the UTF-8 code point starting at `pos` and advances `pos` past it.
// Malformed bytes decode as U+FFFD, one byte at a time.
uint32_t next_codepoint(std::string_view text, std::size_t& pos);

// whitespace | textual (letter or digit) | symbol (everything else).
CharClass classify_codepoint(uint32_t cp);

// Maximal runs of non-whitespace characters.
std::vector<std::string_view> split_whitespace(std::string_view text);
int word_count(std::string_view text);

std::string to_lower_ascii(std::string_view text);
std::string trim(std::string_view text);

// Runs of whitespace collapse to a single space.
std::string collapse_whitespace(std::string_view text);

// trim + collapse + ASCII lowercase, used for duplicate detection.
std::string normalize_for_comparison(std::string_view text);

// Paragraphs are separated by blank lines (lines containing only whitespace).
std::vector<std::string> split_paragraphs(std::string_view text);

// Length of the longest run of one repeated non-whitespace code point.
int max_char_run(std::string_view text);

// Lowercased tokens with surrounding punctuation stripped and stopwords removed.
std::vector<std::string> content_words(std::string_view text);

// Distinct contiguous 3-word sequences over lowercased whitespace tokens.
int unique_trigrams(std::string_view text);

}  // namespace air
