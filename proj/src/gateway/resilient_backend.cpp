#include "detailcap/gateway/resilient_backend.hpp"

#include <algorithm>
#include <thread>

#include <spdlog/spdlog.h>

#include "detailcap/gateway/errors.hpp"
#include "detailcap/gateway/http_backend.hpp"
#include "detailcap/gateway/mock_backend.hpp"

namespace detailcap::gateway {

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
  auto d = initial_backoff;
  for (int i = 0; i < retry && d < max_backoff; ++i) d *= 2;
  return std::min(d, max_backoff);
}

ResilientBackend::ResilientBackend(BackendPtr inner, RetryPolicy policy, int max_in_flight, Sleeper sleeper)
    : inner_(std::move(inner)),
      policy_(policy),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](auto d) { std::this_thread::sleep_for(d); })),
      in_flight_(std::max(1, max_in_flight)) {}

template <typename Fn>
auto ResilientBackend::with_retry(Fn&& fn) const -> decltype(fn()) {
  int empty_retries = 0;
  for (int retry = 0;; ++retry) {
    try {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{in_flight_};
      return fn();
    } catch (const EmptyResponse& e) {
      if (empty_retries++ >= 1 || retry >= policy_.max_retries) throw;
      spdlog::warn("{}: {} (retrying once)", inner_->name(), e.what());
    } catch (const GatewayError& e) {
      if (!e.retryable() || retry >= policy_.max_retries) throw;
      spdlog::warn("{}: {} (retry {}/{})", inner_->name(), e.what(), retry + 1, policy_.max_retries);
    }
    sleeper_(policy_.delay(retry));
  }
}

std::string ResilientBackend::do_generate_caption(const ImageRef& image, std::string_view instruction) const {
  return with_retry([&] { return inner_->generate_caption(image, instruction); });
}

std::string ResilientBackend::do_answer_visual_question(const ImageRef& image,
                                                        std::string_view instruction) const {
  return with_retry([&] { return inner_->answer_visual_question(image, instruction); });
}

ScoredContinuation ResilientBackend::do_score_continuation(const PromptParts& prefix,
                                                           std::string_view continuation) const {
  return with_retry([&] { return inner_->score_continuation(prefix, continuation); });
}

std::string ResilientBackend::do_generate_text(const PromptParts& prompt) const {
  return with_retry([&] { return inner_->generate_text(prompt); });
}

BackendPtr make_backend(const BackendSpec& spec) {
  spec.validate();
  BackendPtr raw;
  if (spec.kind == BackendKind::mock)
    raw = std::make_shared<MockBackend>(spec.seed);
  else
    raw = std::make_shared<HttpBackend>(spec);
  RetryPolicy policy;
  policy.max_retries = spec.max_retries;
  policy.initial_backoff = std::chrono::milliseconds(spec.backoff_ms);
  return std::make_shared<ResilientBackend>(std::move(raw), policy, spec.max_in_flight);
}

}  // namespace detailcap::gateway
