#include <gtest/gtest.h>

#include "detailcap/eval/prism.hpp"
#include "detailcap/eval/sweep.hpp"
#include "detailcap/gateway/errors.hpp"
#include "detailcap/gateway/mock_backend.hpp"
#include "test_support.hpp"

using namespace detailcap;
using namespace detailcap::eval;
using testsupport::CountingBackend;
using testsupport::png_ref;

namespace {

struct SweepRig {
  std::shared_ptr<CountingBackend> vision;
  pipeline::Annotator annotator;
};

SweepRig sweep_rig() {
  pipeline::PipelineConfig c;
  c.vision_backend.kind = gateway::BackendKind::mock;
  c.vision_backend.seed = 7;
  c.text_backend = c.vision_backend;
  c.budget_n = 8;
  auto vision = std::make_shared<CountingBackend>(std::make_shared<gateway::MockBackend>(7));
  auto text = std::make_shared<gateway::MockBackend>(7);
  return {vision, pipeline::Annotator(c, vision, text, pipeline::PromptSet::builtin(), [] { return std::int64_t{0}; })};
}

}  // namespace

TEST(Prism, AnswersFromBestMatchingSentence) {
  const gateway::MockBackend backend(7);
  const auto answer =
      prism_answer(backend, "A dog sits on grass. The car is red. A tree stands behind.", "What color is the car?");
  EXPECT_EQ(answer, "Answer: The car is red.");
}

TEST(Prism, PromptEmbedsCaptionVerbatim) {
  const std::string caption = "Line one.\n  Line   two.";
  const auto prompt = assemble_prism_prompt(caption, "Is there a boat?", text::PromptTemplate::builtin("prism_answer"));
  EXPECT_NE(prompt.find(caption), std::string::npos);
  EXPECT_NE(prompt.find("Is there a boat?"), std::string::npos);
}

TEST(Prism, EmptyInputsRejectedWithoutCall) {
  auto counting = std::make_shared<CountingBackend>(std::make_shared<gateway::MockBackend>(7));
  EXPECT_THROW(prism_answer(*counting, "A dog.", "  "), gateway::PreconditionViolation);
  EXPECT_THROW(prism_answer(*counting, "", "What?"), gateway::PreconditionViolation);
  EXPECT_EQ(counting->total_calls(), 0u);
}

TEST(Sweep, CaptionGeneratedOnceAndSharedAcrossBudgets) {
  auto rig = sweep_rig();
  const std::vector<std::size_t> ns{0, 4, 8};
  const auto points = budget_sweep(rig.annotator, png_ref("img-1"), ns);
  ASSERT_EQ(points.size(), 3u);
  EXPECT_EQ(rig.vision->calls("generate_caption"), 1u);
  for (const auto& p : points) {
    ASSERT_TRUE(p.record.ok()) << p.record.status;
    EXPECT_EQ(p.record.initial_caption, points[0].record.initial_caption);
    EXPECT_EQ(p.record.golden.sentences, points[0].record.golden.sentences);
    EXPECT_LE(p.record.instructions.size(), p.n);
    EXPECT_EQ(p.record.config_hash, rig.annotator.hash_for_budget(p.n));
  }
  EXPECT_LE(kept_answers(points[0].record), kept_answers(points[1].record));
  EXPECT_LE(kept_answers(points[1].record), kept_answers(points[2].record));
}

TEST(Sweep, ZeroBudgetIsBackboneOnly) {
  auto rig = sweep_rig();
  const std::vector<std::size_t> ns{0};
  const auto points = budget_sweep(rig.annotator, png_ref("img-2"), ns);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_TRUE(points[0].record.answers.empty());
  EXPECT_EQ(points[0].record.final_caption, text::join(points[0].record.golden.sentences, " "));
}

TEST(Sweep, MatchesIndependentAnnotation) {
  auto rig = sweep_rig();
  const std::vector<std::size_t> ns{8};
  const auto points = budget_sweep(rig.annotator, png_ref("img-3"), ns);
  const auto direct = rig.annotator.annotate(png_ref("img-3"));
  EXPECT_EQ(pipeline::to_json(points[0].record), pipeline::to_json(direct));
}

TEST(Sweep, UnsortedBudgetsRejected) {
  auto rig = sweep_rig();
  const std::vector<std::size_t> ns{4, 2};
  EXPECT_THROW(budget_sweep(rig.annotator, png_ref("img-1"), ns), std::invalid_argument);
  EXPECT_EQ(rig.vision->total_calls(), 0u);
}
