#include "detailcap/integrate/integrator.hpp"

#include <atomic>
#include <future>

#include "detailcap/gateway/types.hpp"
#include "detailcap/text/text_util.hpp"

namespace detailcap::integrate {

namespace {

constexpr int kMaxMergeDepth = 8;

std::string call_llm(const gateway::Backend& backend, std::string user_text, const char* task,
                     std::map<std::string, std::string> slots, std::size_t* calls) {
  gateway::PromptParts prompt;
  prompt.user_text = std::move(user_text);
  prompt.task = task;
  prompt.slots = std::move(slots);
  auto out = backend.generate_text(prompt);
  if (calls) ++*calls;
  return out;
}

std::string render_details(const text::PromptTemplate& tmpl, const std::string& backbone,
                           const std::vector<std::string>& details) {
  return tmpl.render({{"golden", backbone}, {"details", text::join(details, "\n")}});
}

std::string summarize_lines(const gateway::Backend& backend, const std::string& backbone,
                            const std::vector<std::string>& details, const text::PromptTemplate& tmpl,
                            const char* task, std::size_t limit, std::size_t* calls, int depth) {
  auto prompt = render_details(tmpl, backbone, details);
  if (text::estimate_tokens(prompt) <= limit) {
    return call_llm(backend, std::move(prompt), task, {{"golden", backbone}, {"details", text::join(details, "\n")}},
                    calls);
  }
  if (depth >= kMaxMergeDepth)
    throw ContextOverflow("detail summaries still exceed the context limit after " + std::to_string(depth) +
                          " merge passes");

  const auto chunks = chunk_details(details, tmpl, backbone, limit);
  std::atomic<std::size_t> chunk_calls{0};
  std::vector<std::future<std::string>> futures;
  for (const auto& chunk : chunks) {
    futures.push_back(std::async(std::launch::async, [&, chunk] {
      auto text = call_llm(backend, render_details(tmpl, backbone, chunk), task,
                           {{"golden", backbone}, {"details", text::join(chunk, "\n")}}, nullptr);
      ++chunk_calls;
      return text;
    }));
  }
  std::vector<std::string> partials;
  std::exception_ptr error;
  for (auto& f : futures) {
    try {
      partials.push_back(text::normalize_whitespace(f.get()));
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  }
  if (calls) *calls += chunk_calls.load();
  if (error) std::rethrow_exception(error);
  return summarize_lines(backend, backbone, partials, tmpl, task, limit, calls, depth + 1);
}

}  // namespace

IntegrationPrompts IntegrationPrompts::builtin() {
  return {text::PromptTemplate::builtin("object_summary"), text::PromptTemplate::builtin("position_summary"),
          text::PromptTemplate::builtin("final_caption")};
}

void IntegrationPrompts::validate() const {
  t_object.require({"golden", "details"}, "object summary");
  t_position.require({"golden", "details"}, "position summary");
  t_final.require({"golden", "c_o", "c_p"}, "final caption");
}

std::string format_backbone(const rater::GoldenSentenceSet& golden) { return text::join(golden.sentences, "\n"); }

std::vector<std::string> usable_details(std::span<const qa::DetailAnswer> answers) {
  std::vector<std::string> out;
  for (const auto& a : answers)
    if (!a.excluded && !a.filtered_text.empty()) out.push_back(text::normalize_whitespace(a.filtered_text));
  return out;
}

std::vector<std::vector<std::string>> chunk_details(const std::vector<std::string>& details,
                                                    const text::PromptTemplate& tmpl, const std::string& backbone,
                                                    std::size_t context_limit_tokens) {
  std::vector<std::vector<std::string>> chunks;
  std::vector<std::string> current;
  for (const auto& d : details) {
    current.push_back(d);
    if (text::estimate_tokens(render_details(tmpl, backbone, current)) <= context_limit_tokens) continue;
    current.pop_back();
    if (current.empty()) {
      throw ContextOverflow("a single detail (" + std::to_string(text::estimate_tokens(d)) +
                            " estimated tokens) does not fit the context limit of " +
                            std::to_string(context_limit_tokens));
    }
    chunks.push_back(std::move(current));
    current = {d};
    if (text::estimate_tokens(render_details(tmpl, backbone, current)) > context_limit_tokens) {
      throw ContextOverflow("a single detail (" + std::to_string(text::estimate_tokens(d)) +
                            " estimated tokens) does not fit the context limit of " +
                            std::to_string(context_limit_tokens));
    }
  }
  if (!current.empty()) chunks.push_back(std::move(current));
  return chunks;
}

std::string summarize_details(const gateway::Backend& text_backend, const rater::GoldenSentenceSet& golden,
                              std::span<const qa::DetailAnswer> answers, const text::PromptTemplate& tmpl,
                              const char* task, const IntegrationOptions& options, std::size_t* calls) {
  return text::normalize_whitespace(summarize_lines(text_backend, format_backbone(golden), usable_details(answers),
                                                    tmpl, task, options.context_limit_tokens, calls, 0));
}

std::string integrate_object_details(const gateway::Backend& text_backend, const rater::GoldenSentenceSet& golden,
                                     std::span<const qa::DetailAnswer> d_object, const IntegrationPrompts& prompts,
                                     const IntegrationOptions& options, std::size_t* calls) {
  return summarize_details(text_backend, golden, d_object, prompts.t_object, gateway::task::kObjectSummary, options,
                           calls);
}

std::string integrate_position_details(const gateway::Backend& text_backend,
                                       const rater::GoldenSentenceSet& golden,
                                       std::span<const qa::DetailAnswer> d_position,
                                       const IntegrationPrompts& prompts, const IntegrationOptions& options,
                                       std::size_t* calls) {
  return summarize_details(text_backend, golden, d_position, prompts.t_position, gateway::task::kPositionSummary,
                           options, calls);
}

std::string assemble_final_prompt(const rater::GoldenSentenceSet& golden, const std::string& c_object,
                                  const std::string& c_position, const IntegrationPrompts& prompts) {
  return prompts.t_final.render({{"golden", format_backbone(golden)}, {"c_o", c_object}, {"c_p", c_position}});
}

std::string compose_final_caption(const gateway::Backend& text_backend, const rater::GoldenSentenceSet& golden,
                                  const std::string& c_object, const std::string& c_position,
                                  const IntegrationPrompts& prompts) {
  auto text = call_llm(text_backend, assemble_final_prompt(golden, c_object, c_position, prompts),
                       gateway::task::kFinalCaption,
                       {{"golden", format_backbone(golden)}, {"c_o", c_object}, {"c_p", c_position}}, nullptr);
  return text::normalize_whitespace(text);
}

IntegrationResult integrate(const gateway::Backend& text_backend, const rater::GoldenSentenceSet& golden,
                            const qa::DetailSets& details, const IntegrationPrompts& prompts,
                            const IntegrationOptions& options) {
  prompts.validate();
  IntegrationResult result;
  const auto backbone = format_backbone(golden);
  result.input_token_estimate =
      text::estimate_tokens(render_details(prompts.t_object, backbone, usable_details(details.object))) +
      text::estimate_tokens(render_details(prompts.t_position, backbone, usable_details(details.position)));

  std::size_t object_calls = 0;
  std::size_t position_calls = 0;
  auto object_future = std::async(std::launch::async, [&] {
    return integrate_object_details(text_backend, golden, details.object, prompts, options, &object_calls);
  });
  std::string c_position;
  std::exception_ptr position_error;
  try {
    c_position = integrate_position_details(text_backend, golden, details.position, prompts, options, &position_calls);
  } catch (...) {
    position_error = std::current_exception();
  }
  result.c_object = object_future.get();
  if (position_error) std::rethrow_exception(position_error);
  result.c_position = std::move(c_position);

  result.final_caption = compose_final_caption(text_backend, golden, result.c_object, result.c_position, prompts);
  result.llm_calls = object_calls + position_calls + 1;
  return result;
}

}  // namespace detailcap::integrate
