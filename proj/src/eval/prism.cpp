#include "detailcap/eval/prism.hpp"

#include "detailcap/gateway/errors.hpp"
#include "detailcap/gateway/types.hpp"
#include "detailcap/text/text_util.hpp"

namespace detailcap::eval {

std::string assemble_prism_prompt(std::string_view caption, std::string_view question,
                                  const text::PromptTemplate& tmpl) {
  return tmpl.render({{"caption", std::string(caption)}, {"question", std::string(question)}});
}

std::string prism_answer(const gateway::Backend& text_backend, std::string_view caption, std::string_view question,
                         const text::PromptTemplate& tmpl) {
  if (text::trim(caption).empty()) throw gateway::PreconditionViolation("prism_answer: empty caption");
  if (text::trim(question).empty()) throw gateway::PreconditionViolation("prism_answer: empty question");
  gateway::PromptParts prompt;
  prompt.user_text = assemble_prism_prompt(caption, question, tmpl);
  prompt.task = gateway::task::kPrismAnswer;
  prompt.slots = {{"caption", std::string(caption)}, {"question", std::string(question)}};
  return text::normalize_whitespace(text_backend.generate_text(prompt));
}

}  // namespace detailcap::eval
