#pragma once

#include <string>
#include <string_view>

#include "detailcap/gateway/backend.hpp"
#include "detailcap/text/prompt_template.hpp"

namespace detailcap::eval {

/// The answering prompt with caption and question filled in.
std::string assemble_prism_prompt(std::string_view caption, std::string_view question,
                                  const text::PromptTemplate& tmpl);

/// Answers a visual question from the caption alone with one text-model
/// call. Throws gateway::PreconditionViolation for an empty caption or
/// question; gateway errors propagate.
std::string prism_answer(const gateway::Backend& text_backend, std::string_view caption, std::string_view question,
                         const text::PromptTemplate& tmpl = text::PromptTemplate::builtin("prism_answer"));

}  // namespace detailcap::eval
