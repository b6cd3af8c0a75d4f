#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "detailcap/gateway/types.hpp"

namespace detailcap::gateway {

/// Uniform access to a vision-language model and a text-only model.
///
/// The public entry points check preconditions and then dispatch to the
/// protected do_* hooks, so decorators and concrete backends never see a
/// request that violates the contract. Implementations must be safe to call
/// concurrently from several threads.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Caption C for an image under instruction T.
  std::string generate_caption(const ImageRef& image, std::string_view instruction) const;

  /// Answer to a follow-up instruction about the image.
  std::string answer_visual_question(const ImageRef& image, std::string_view instruction) const;

  /// Probabilities of `continuation` given `prefix`. With prefix.image set
  /// this is the image-conditioned sequence, without it the text-only one;
  /// both use identical token segmentation of the continuation.
  ScoredContinuation score_continuation(const PromptParts& prefix, std::string_view continuation) const;

  /// Text-only generation; the prompt must not carry an image.
  std::string generate_text(const PromptParts& prompt) const;

  virtual std::string name() const = 0;

  /// Fails fast with ScoringUnsupported when score_continuation cannot work
  /// against this backend. No-op for backends that always support it.
  virtual void check_scoring_support() const {}

 protected:
  virtual std::string do_generate_caption(const ImageRef& image, std::string_view instruction) const = 0;
  virtual std::string do_answer_visual_question(const ImageRef& image,
                                                std::string_view instruction) const = 0;
  virtual ScoredContinuation do_score_continuation(const PromptParts& prefix,
                                                   std::string_view continuation) const = 0;
  virtual std::string do_generate_text(const PromptParts& prompt) const = 0;
};

using BackendPtr = std::shared_ptr<const Backend>;

/// Builds the concrete backend for `spec` wrapped in retry/backoff and the
/// per-handle in-flight bound.
BackendPtr make_backend(const BackendSpec& spec);

}  // namespace detailcap::gateway
