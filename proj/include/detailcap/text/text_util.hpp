#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace detailcap::text {

/// Half-open byte range [begin, end) into some UTF-8 buffer.
struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t pos) const { return pos >= begin && pos < end; }
  bool operator==(const ByteSpan&) const = default;
};

bool is_space(char c);
bool is_ascii_punct(char c);
/// True for ASCII letters/digits and any byte of a multi-byte UTF-8 sequence.
bool is_word_byte(char c);
bool is_sentence_terminator(char c);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapses every whitespace run to one space and trims both ends.
std::string normalize_whitespace(std::string_view s);

/// Strips leading and trailing ASCII punctuation (quotes, brackets, ...).
std::string_view strip_punct(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);
std::vector<ByteSpan> whitespace_words(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Sentence regions of `s`. Boundaries sit after a run of '.', '!' or '?'
/// that is followed by whitespace or end-of-text; a terminator with a digit
/// on both sides never ends a sentence. Regions tile [0, s.size()): each
/// region begins right after the previous boundary, so inter-sentence
/// whitespace belongs to the following sentence. Trailing whitespace-only
/// text is folded into the last region. Empty input yields no regions.
std::vector<ByteSpan> sentence_regions(std::string_view s);

/// Sentence texts (trimmed) in order.
std::vector<std::string> split_sentences(std::string_view s);

/// Conservative token estimate used for context budgeting: ceil(bytes / 4).
std::size_t estimate_tokens(std::string_view s);

std::string read_file(const std::string& path);

}  // namespace detailcap::text
