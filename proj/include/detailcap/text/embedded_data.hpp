#pragma once

#include <string_view>

namespace detailcap::text {

std::string_view embedded_function_words();

/// Built-in prompt template by file stem ("object_instructions", "answer",
/// "object_summary", "position_summary", "final_caption", "prism_answer",
/// "caption_instruction"). Throws std::out_of_range for unknown names.
std::string_view embedded_prompt(std::string_view name);

}  // namespace detailcap::text
