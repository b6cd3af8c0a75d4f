#include "detailcap/text/text_util.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace detailcap::text {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

bool is_sentence_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string_view strip_punct(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_ascii_punct(s[b])) ++b;
  while (e > b && is_ascii_punct(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < s.size()) lines.push_back(s.substr(start));
      break;
    }
    lines.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::vector<ByteSpan> whitespace_words(std::string_view s) {
  std::vector<ByteSpan> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    if (i >= s.size()) break;
    std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    words.push_back({b, i});
  }
  return words;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool all_space(std::string_view s) {
  for (char c : s)
    if (!is_space(c)) return false;
  return true;
}

}  // namespace

std::vector<ByteSpan> sentence_regions(std::string_view s) {
  std::vector<ByteSpan> regions;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_sentence_terminator(s[i])) continue;
    const bool digit_before = i > 0 && is_digit(s[i - 1]);
    const bool digit_after = i + 1 < s.size() && is_digit(s[i + 1]);
    if (digit_before && digit_after) continue;
    if (i + 1 == s.size() || is_space(s[i + 1])) {
      regions.push_back({start, i + 1});
      start = i + 1;
    }
  }
  if (start < s.size()) {
    if (!all_space(s.substr(start)))
      regions.push_back({start, s.size()});
    else if (!regions.empty())
      regions.back().end = s.size();
  }
  return regions;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& r : sentence_regions(s)) out.emplace_back(trim(s.substr(r.begin, r.size())));
  return out;
}

std::size_t estimate_tokens(std::string_view s) { return (s.size() + 3) / 4; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detailcap::text
