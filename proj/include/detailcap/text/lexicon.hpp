#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>

namespace detailcap::text {

/// Closed-class English function words (articles, adpositions, conjunctions,
/// pronouns, auxiliaries, particles). Lookup is case-insensitive.
class FunctionWordLexicon {
 public:
  FunctionWordLexicon() = default;

  /// Parses one word per line; blank lines and '#' comments are skipped.
  static FunctionWordLexicon parse(std::string_view contents);
  static FunctionWordLexicon load(const std::string& path);

  /// The lexicon shipped in data/function_words.txt, compiled in.
  static const FunctionWordLexicon& builtin();

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

/// Word-level decision shared by the rater and the mock backend: a
/// whitespace-delimited word is "content" when, after stripping surrounding
/// punctuation, it is non-empty and not a function word.
bool is_content_word(std::string_view raw_word, const FunctionWordLexicon& lexicon);

}  // namespace detailcap::text
