#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "detailcap/gateway/backend.hpp"
#include "detailcap/pipeline/config.hpp"
#include "detailcap/pipeline/record.hpp"
#include "detailcap/rater/rater.hpp"

namespace detailcap::pipeline {

/// Milliseconds on a monotonic clock.
using Clock = std::function<std::int64_t()>;

std::int64_t steady_clock_ms();

/// Output of the image-dependent, budget-independent stages
/// (generate_caption, rate_caption). Reusable across budgets.
struct PreparedImage {
  CaptionRecord record;
  gateway::ImageRef image;  // materialized
};

/// Runs the full caption pipeline for one image against a vision and a
/// text backend. Stateless between calls; safe to share between threads.
class Annotator {
 public:
  Annotator(PipelineConfig config, gateway::BackendPtr vision, gateway::BackendPtr text, PromptSet prompts,
            Clock clock = steady_clock_ms);

  /// Builds both backends from the config and loads its prompts.
  static Annotator from_config(const PipelineConfig& config, Clock clock = steady_clock_ms);

  /// Never throws: any stage failure is reported as status
  /// "failed:<stage>" with the record filled up to that stage.
  CaptionRecord annotate(const gateway::ImageRef& image) const;

  PreparedImage prepare(const gateway::ImageRef& image) const;
  /// Remaining stages with the given budget. A failed preparation is
  /// returned unchanged.
  CaptionRecord complete(const PreparedImage& prepared, std::size_t budget_n) const;

  const PipelineConfig& config() const { return config_; }
  const PromptSet& prompts() const { return prompts_; }
  const gateway::Backend& vision() const { return *vision_; }
  const gateway::Backend& text() const { return *text_; }
  const rater::ContrastiveRater& rater() const { return rater_; }
  std::string hash_for_budget(std::size_t budget_n) const;

 private:
  PipelineConfig config_;
  gateway::BackendPtr vision_;
  gateway::BackendPtr text_;
  PromptSet prompts_;
  Clock clock_;
  rater::ContrastiveRater rater_;
};

}  // namespace detailcap::pipeline
