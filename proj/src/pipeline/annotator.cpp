#include "detailcap/pipeline/annotator.hpp"

#include <chrono>
#include <future>

#include <spdlog/spdlog.h>

#include "detailcap/gateway/image.hpp"
#include "detailcap/integrate/integrator.hpp"
#include "detailcap/qa/heuristic_qa.hpp"

namespace detailcap::pipeline {

namespace {

template <typename Fn>
bool run_stage(const Clock& clock, CaptionRecord& record, std::string_view stage, Fn&& fn) {
  const auto start = clock();
  try {
    fn();
  } catch (const std::exception& e) {
    record.stage_timings[std::string(stage)] = clock() - start;
    record.status = "failed:" + std::string(stage);
    record.error = e.what();
    spdlog::warn("image '{}': stage {} failed: {}", record.image_id, stage, e.what());
    return false;
  }
  record.stage_timings[std::string(stage)] = clock() - start;
  return true;
}

}  // namespace

std::int64_t steady_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

Annotator::Annotator(PipelineConfig config, gateway::BackendPtr vision, gateway::BackendPtr text, PromptSet prompts,
                     Clock clock)
    : config_(std::move(config)),
      vision_(std::move(vision)),
      text_(std::move(text)),
      prompts_(std::move(prompts)),
      clock_(clock ? std::move(clock) : Clock(steady_clock_ms)) {
  config_.validate();
}

Annotator Annotator::from_config(const PipelineConfig& config, Clock clock) {
  config.validate();
  return Annotator(config, gateway::make_backend(config.vision_backend), gateway::make_backend(config.text_backend),
                   load_prompts(config), std::move(clock));
}

std::string Annotator::hash_for_budget(std::size_t budget_n) const {
  auto copy = config_;
  copy.budget_n = budget_n;
  return config_hash(copy, prompts_);
}

PreparedImage Annotator::prepare(const gateway::ImageRef& image) const {
  PreparedImage prepared;
  auto& rec = prepared.record;
  rec.image_id = image.id;
  rec.image_ref = image.to_string();
  rec.config_hash = hash_for_budget(config_.budget_n);

  if (!run_stage(clock_, rec, "generate_caption", [&] {
        prepared.image = gateway::materialize(image, config_.vision_backend.timeout_s);
        rec.initial_caption = vision_->generate_caption(prepared.image, config_.caption_instruction);
      }))
    return prepared;

  run_stage(clock_, rec, "rate_caption", [&] {
    auto rated = rater_.rate_caption(*vision_, prepared.image, config_.caption_instruction, rec.initial_caption,
                                     config_.tau);
    rec.caption_sentences = std::move(rated.sentences);
    rec.golden = std::move(rated.golden);
  });
  return prepared;
}

CaptionRecord Annotator::complete(const PreparedImage& prepared, std::size_t budget_n) const {
  CaptionRecord rec = prepared.record;
  if (!rec.ok()) return rec;
  rec.config_hash = hash_for_budget(budget_n);

  if (!run_stage(clock_, rec, "raise_instructions", [&] {
        if (budget_n == 0) return;
        auto raised = qa::raise_object_instructions(*text_, rec.golden, prompts_.object_instructions);
        const auto positions = qa::derive_position_instructions(raised.per_sentence);
        rec.instructions =
            qa::schedule_instructions(raised.per_sentence, positions, qa::Budget{budget_n}, config_.instruction_kinds);
      }))
    return rec;

  qa::DetailSets details;
  if (!run_stage(clock_, rec, "collect_details", [&] {
        details = qa::collect_details(*vision_, prepared.image, rec.instructions, rater_, config_.tau_ans,
                                      prompts_.answer);
        rec.answers = details.object;
        rec.answers.insert(rec.answers.end(), details.position.begin(), details.position.end());
      }))
    return rec;

  if (!run_stage(clock_, rec, "integrate", [&] {
        const integrate::IntegrationOptions options{config_.context_limit_tokens};
        auto object_summary = std::async(std::launch::async, [&] {
          return integrate::integrate_object_details(*text_, rec.golden, details.object, prompts_.integration,
                                                     options);
        });
        std::exception_ptr position_error;
        try {
          rec.c_position = integrate::integrate_position_details(*text_, rec.golden, details.position,
                                                                 prompts_.integration, options);
        } catch (...) {
          position_error = std::current_exception();
        }
        rec.c_object = object_summary.get();
        if (position_error) std::rethrow_exception(position_error);
      }))
    return rec;

  run_stage(clock_, rec, "compose", [&] {
    rec.final_caption =
        integrate::compose_final_caption(*text_, rec.golden, rec.c_object, rec.c_position, prompts_.integration);
  });
  return rec;
}

CaptionRecord Annotator::annotate(const gateway::ImageRef& image) const {
  try {
    return complete(prepare(image), config_.budget_n);
  } catch (const std::exception& e) {
    CaptionRecord rec;
    rec.image_id = image.id;
    rec.status = "failed:internal";
    rec.error = e.what();
    return rec;
  }
}

}  // namespace detailcap::pipeline
