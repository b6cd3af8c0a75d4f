#include "detailcap/text/lexicon.hpp"

#include "detailcap/text/embedded_data.hpp"
#include "detailcap/text/text_util.hpp"

namespace detailcap::text {

FunctionWordLexicon FunctionWordLexicon::parse(std::string_view contents) {
  FunctionWordLexicon lex;
  for (auto line : split_lines(contents)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    lex.words_.insert(to_lower(line));
  }
  return lex;
}

FunctionWordLexicon FunctionWordLexicon::load(const std::string& path) {
  return parse(read_file(path));
}

const FunctionWordLexicon& FunctionWordLexicon::builtin() {
  static const FunctionWordLexicon lex = parse(embedded_function_words());
  return lex;
}

bool FunctionWordLexicon::contains(std::string_view word) const {
  return words_.contains(to_lower(word));
}

bool is_content_word(std::string_view raw_word, const FunctionWordLexicon& lexicon) {
  auto core = strip_punct(raw_word);
  if (core.empty()) return false;
  bool has_word_byte = false;
  for (char c : core) has_word_byte = has_word_byte || is_word_byte(c);
  return has_word_byte && !lexicon.contains(core);
}

}  // namespace detailcap::text
