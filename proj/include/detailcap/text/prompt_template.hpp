#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace detailcap::text {

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TemplateVars = std::map<std::string, std::string, std::less<>>;

/// Text with `{{name}}` placeholders. Whitespace inside the braces is
/// ignored. Rendering substitutes each placeholder verbatim; a placeholder
/// without a value is an error.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  explicit PromptTemplate(std::string source);

  static PromptTemplate from_file(const std::string& path);
  static PromptTemplate builtin(std::string_view name);

  std::string render(const TemplateVars& vars) const;

  const std::vector<std::string>& placeholders() const { return names_; }
  bool has_placeholder(std::string_view name) const;
  /// Throws TemplateError naming `what` unless every name is present.
  void require(const std::vector<std::string>& names, std::string_view what) const;

  const std::string& source() const { return source_; }

 private:
  struct Piece {
    bool is_var;
    std::string text;
  };
  std::string source_;
  std::vector<Piece> pieces_;
  std::vector<std::string> names_;
};

}  // namespace detailcap::text
