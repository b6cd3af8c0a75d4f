#include "detailcap/text/prompt_template.hpp"

#include <algorithm>

#include "detailcap/text/embedded_data.hpp"
#include "detailcap/text/text_util.hpp"

namespace detailcap::text {

PromptTemplate::PromptTemplate(std::string source) : source_(std::move(source)) {
  std::size_t pos = 0;
  std::string literal;
  while (pos < source_.size()) {
    auto open = source_.find("{{", pos);
    if (open == std::string::npos) {
      literal.append(source_, pos);
      break;
    }
    auto close = source_.find("}}", open + 2);
    if (close == std::string::npos) throw TemplateError("unterminated '{{' in template");
    literal.append(source_, pos, open - pos);
    auto name = std::string(trim(std::string_view(source_).substr(open + 2, close - open - 2)));
    if (name.empty()) throw TemplateError("empty placeholder in template");
    if (!literal.empty()) pieces_.push_back({false, std::move(literal)});
    literal.clear();
    pieces_.push_back({true, name});
    if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
    pos = close + 2;
  }
  if (!literal.empty()) pieces_.push_back({false, std::move(literal)});
}

PromptTemplate PromptTemplate::from_file(const std::string& path) {
  return PromptTemplate(read_file(path));
}

PromptTemplate PromptTemplate::builtin(std::string_view name) {
  return PromptTemplate(std::string(embedded_prompt(name)));
}

std::string PromptTemplate::render(const TemplateVars& vars) const {
  std::string out;
  for (const auto& piece : pieces_) {
    if (!piece.is_var) {
      out += piece.text;
      continue;
    }
    auto it = vars.find(piece.text);
    if (it == vars.end()) throw TemplateError("no value for placeholder '" + piece.text + "'");
    out += it->second;
  }
  return out;
}

bool PromptTemplate::has_placeholder(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

void PromptTemplate::require(const std::vector<std::string>& names, std::string_view what) const {
  for (const auto& n : names)
    if (!has_placeholder(n))
      throw TemplateError(std::string(what) + " template is missing placeholder {{" + n + "}}");
}

}  // namespace detailcap::text
