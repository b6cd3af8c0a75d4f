#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "detailcap/gateway/backend.hpp"
#include "detailcap/qa/heuristic_qa.hpp"
#include "detailcap/rater/rater.hpp"
#include "detailcap/text/prompt_template.hpp"

namespace detailcap::integrate {

/// A single detail is too large to fit the context limit even on its own.
class ContextOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IntegrationPrompts {
  text::PromptTemplate t_object;    // {{golden}}, {{details}}
  text::PromptTemplate t_position;  // {{golden}}, {{details}}
  text::PromptTemplate t_final;     // {{golden}}, {{c_o}}, {{c_p}}

  static IntegrationPrompts builtin();
  /// Throws text::TemplateError when a required placeholder is missing.
  void validate() const;
};

struct IntegrationOptions {
  std::size_t context_limit_tokens = 16384;
};

struct IntegrationResult {
  std::string c_object;
  std::string c_position;
  std::string final_caption;
  /// Estimated tokens of the unchunked object and position prompts.
  std::size_t input_token_estimate = 0;
  std::size_t llm_calls = 0;
};

/// Golden sentences, one per line.
std::string format_backbone(const rater::GoldenSentenceSet& golden);
/// Filtered text of every non-excluded answer, one per line.
std::vector<std::string> usable_details(std::span<const qa::DetailAnswer> answers);

/// Greedy in-order packing of details into chunks whose rendered prompt
/// (template + backbone + chunk) stays within the limit. Throws
/// ContextOverflow when one detail alone does not fit.
std::vector<std::vector<std::string>> chunk_details(const std::vector<std::string>& details,
                                                    const text::PromptTemplate& tmpl, const std::string& backbone,
                                                    std::size_t context_limit_tokens);

/// Summary of one detail kind. Fits in one call when the assembled prompt is
/// within the limit; otherwise each chunk is summarized with the backbone
/// and the chunk summaries are merged by a further pass of the same template
/// (recursively, if the merge itself overflows).
std::string summarize_details(const gateway::Backend& text_backend, const rater::GoldenSentenceSet& golden,
                              std::span<const qa::DetailAnswer> answers, const text::PromptTemplate& tmpl,
                              const char* task, const IntegrationOptions& options, std::size_t* calls = nullptr);

std::string integrate_object_details(const gateway::Backend& text_backend, const rater::GoldenSentenceSet& golden,
                                     std::span<const qa::DetailAnswer> d_object, const IntegrationPrompts& prompts,
                                     const IntegrationOptions& options, std::size_t* calls = nullptr);

std::string integrate_position_details(const gateway::Backend& text_backend,
                                       const rater::GoldenSentenceSet& golden,
                                       std::span<const qa::DetailAnswer> d_position,
                                       const IntegrationPrompts& prompts, const IntegrationOptions& options,
                                       std::size_t* calls = nullptr);

/// The final caption prompt, exactly as sent.
std::string assemble_final_prompt(const rater::GoldenSentenceSet& golden, const std::string& c_object,
                                  const std::string& c_position, const IntegrationPrompts& prompts);

/// One text-model call; whitespace-normalized result.
std::string compose_final_caption(const gateway::Backend& text_backend, const rater::GoldenSentenceSet& golden,
                                  const std::string& c_object, const std::string& c_position,
                                  const IntegrationPrompts& prompts);

/// Object and position summaries (issued concurrently), then the final
/// caption.
IntegrationResult integrate(const gateway::Backend& text_backend, const rater::GoldenSentenceSet& golden,
                            const qa::DetailSets& details, const IntegrationPrompts& prompts,
                            const IntegrationOptions& options);

}  // namespace detailcap::integrate
