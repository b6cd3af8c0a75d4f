#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "detailcap/gateway/backend.hpp"
#include "detailcap/gateway/image.hpp"

namespace detailcap::gateway {

/// OpenAI-compatible JSON-over-HTTP backend.
///
/// generate/answer/text calls use POST {base_url}/chat/completions. Scoring
/// uses POST {base_url}/completions with echo=true and logprobs, which
/// returns the log-probability of every prompt token; see docs/wire_format.md.
/// Log-probabilities are converted to probabilities here and nowhere else.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendSpec spec);

  std::string name() const override { return "http:" + spec_.model_id; }
  void check_scoring_support() const override;

 protected:
  std::string do_generate_caption(const ImageRef& image, std::string_view instruction) const override;
  std::string do_answer_visual_question(const ImageRef& image, std::string_view instruction) const override;
  ScoredContinuation do_score_continuation(const PromptParts& prefix,
                                           std::string_view continuation) const override;
  std::string do_generate_text(const PromptParts& prompt) const override;

 private:
  std::string chat(const PromptParts& prompt) const;
  nlohmann::json post(const std::string& endpoint, const nlohmann::json& body) const;

  BackendSpec spec_;
  std::string api_key_;
};

namespace wire {

nlohmann::json chat_request(const std::string& model, const PromptParts& prompt,
                            const std::optional<LoadedImage>& image);
/// choices[0].message.content; EmptyResponse when blank, ProtocolError when
/// the field is missing.
std::string parse_chat_response(const nlohmann::json& response);

struct ScoringPrompt {
  std::string text;                  // prefix + continuation
  std::size_t continuation_offset;   // byte offset of the continuation in text
};

/// [system + "\n\n"] + user_text + "\n" + continuation
ScoringPrompt scoring_prompt(const PromptParts& prefix, std::string_view continuation);
nlohmann::json scoring_request(const std::string& model, const ScoringPrompt& prompt,
                               const std::optional<LoadedImage>& image);
/// Token pieces are cut from the prompt text at the echoed text_offset
/// values, so they reproduce the continuation exactly; the generated token
/// after the prompt is ignored. ScoringUnsupported when logprobs are absent.
ScoredContinuation parse_scoring_response(const nlohmann::json& response, const ScoringPrompt& prompt);

/// exp(logprob) clamped into (0, 1].
double probability_from_logprob(double logprob);

}  // namespace wire

}  // namespace detailcap::gateway
