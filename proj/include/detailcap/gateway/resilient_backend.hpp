#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <semaphore>

#include "detailcap/gateway/backend.hpp"

namespace detailcap::gateway {

struct RetryPolicy {
  int max_retries = 3;  // attempts = 1 + max_retries
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::milliseconds max_backoff{8000};

  /// Delay before retry number `retry` (0-based): initial * 2^retry, capped.
  std::chrono::milliseconds delay(int retry) const;
};

/// Wraps a backend with retry-with-exponential-backoff for retryable
/// GatewayErrors and a bound on concurrent in-flight requests. EmptyResponse
/// is retried at most once. Non-retryable errors propagate immediately.
class ResilientBackend final : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  ResilientBackend(BackendPtr inner, RetryPolicy policy, int max_in_flight, Sleeper sleeper = {});

  std::string name() const override { return inner_->name(); }
  void check_scoring_support() const override { inner_->check_scoring_support(); }
  const Backend& inner() const { return *inner_; }

 protected:
  std::string do_generate_caption(const ImageRef& image, std::string_view instruction) const override;
  std::string do_answer_visual_question(const ImageRef& image, std::string_view instruction) const override;
  ScoredContinuation do_score_continuation(const PromptParts& prefix,
                                           std::string_view continuation) const override;
  std::string do_generate_text(const PromptParts& prompt) const override;

 private:
  template <typename Fn>
  auto with_retry(Fn&& fn) const -> decltype(fn());

  BackendPtr inner_;
  RetryPolicy policy_;
  Sleeper sleeper_;
  mutable std::counting_semaphore<> in_flight_;
};

}  // namespace detailcap::gateway
