#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "detailcap/gateway/errors.hpp"
#include "detailcap/gateway/mock_backend.hpp"
#include "detailcap/rater/rater.hpp"
#include "test_support.hpp"

using namespace detailcap;
using namespace detailcap::rater;
using gateway::HallucinationPlan;
using gateway::MockBackend;
using gateway::MockOptions;
using testsupport::png_ref;

namespace {

const std::string kInstruction = "Describe this image in detail.";

MockBackend mock_with(HallucinationPlan plan, std::uint64_t seed = 7) {
  MockOptions o;
  o.plan = std::move(plan);
  return MockBackend(seed, o);
}

std::vector<TokenScore> scores_from(const std::vector<std::string>& tokens, const std::vector<double>& deltas) {
  std::vector<TokenScore> out(tokens.size());
  std::size_t off = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out[i].token = tokens[i];
    out[i].span = {off, off + tokens[i].size()};
    out[i].delta = deltas.empty() ? 0.0 : deltas[i];
    off += tokens[i].size();
  }
  return out;
}

std::vector<bool> critical(const std::vector<std::string>& tokens) {
  return identify_critical_tokens(scores_from(tokens, {}), text::FunctionWordLexicon::builtin());
}

}  // namespace

TEST(ComputeDelta, ElementWiseDifference) {
  const std::vector<double> with{0.9, 0.5, 0.7}, without{0.1, 0.5, 0.9};
  const auto d = compute_delta(with, without);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_NEAR(d[0], 0.8, 1e-15);
  EXPECT_EQ(d[1], 0.0);
  EXPECT_NEAR(d[2], -0.2, 1e-15);
}

TEST(ComputeDelta, LengthMismatchThrows) {
  const std::vector<double> a{0.1, 0.2}, b{0.1};
  EXPECT_THROW(compute_delta(a, b), LengthMismatch);
  EXPECT_TRUE(compute_delta(std::vector<double>{}, std::vector<double>{}).empty());
}

TEST(ComputeTokenScores, MatchesMockProbabilities) {
  const MockBackend backend(7);
  const auto scores = compute_token_scores(backend, png_ref("img-1"), kInstruction, "Hi.");
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_EQ(scores[0].token, "Hi");
  EXPECT_EQ(scores[1].token, ".");
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const double pw = testsupport::oracle_mock_probability(7, scores[t].token, t, true);
    const double po = testsupport::oracle_mock_probability(7, scores[t].token, t, false);
    EXPECT_DOUBLE_EQ(scores[t].p_with, pw);
    EXPECT_DOUBLE_EQ(scores[t].p_without, po);
    EXPECT_DOUBLE_EQ(scores[t].delta, pw - po);
  }
}

TEST(ComputeTokenScores, IgnoredImageGivesZeroDeltas) {
  HallucinationPlan plan;
  plan.ignore_image = true;
  const auto backend = mock_with(plan);
  for (const auto& s : compute_token_scores(backend, png_ref("img-1"), kInstruction, "A red car parked by a tree."))
    EXPECT_EQ(s.delta, 0.0);
}

TEST(ComputeTokenScores, PlannedWordDelta) {
  HallucinationPlan plan;
  plan.words["beach"] = {0.2, 0.9};
  const auto backend = mock_with(plan);
  const auto scores = compute_token_scores(backend, png_ref("img-1"), kInstruction, "A beach.");
  ASSERT_EQ(scores[1].token, " beach");
  EXPECT_NEAR(scores[1].delta, -0.7, 1e-12);
}

namespace {

class SplitBrainBackend final : public gateway::Backend {
 public:
  std::string name() const override { return "split"; }

 protected:
  std::string do_generate_caption(const gateway::ImageRef&, std::string_view) const override { return "x"; }
  std::string do_answer_visual_question(const gateway::ImageRef&, std::string_view) const override { return "x"; }
  gateway::ScoredContinuation do_score_continuation(const gateway::PromptParts& p,
                                                    std::string_view) const override {
    if (p.image) return {{"A", " cat."}, {0.5, 0.5}};
    return {{"A ", "cat."}, {0.5, 0.5}};
  }
  std::string do_generate_text(const gateway::PromptParts&) const override { return "x"; }
};

}  // namespace

TEST(ComputeTokenScores, DifferentSegmentationThrows) {
  const SplitBrainBackend backend;
  EXPECT_THROW(compute_token_scores(backend, png_ref("i"), kInstruction, "A cat."), SegmentationMismatch);
}

TEST(ComputeTokenScores, EmptyTextIsPrecondition) {
  const MockBackend backend(7);
  EXPECT_THROW(compute_token_scores(backend, png_ref("i"), kInstruction, "  "), gateway::PreconditionViolation);
}

TEST(SegmentSentences, TokensGoToSentenceTheyStartIn) {
  const std::vector<std::string> tokens{"A", " dog", " runs", ".", " A", " cat", " sleeps", "."};
  const std::string text = "A dog runs. A cat sleeps.";
  const auto sentences = segment_sentences(text, scores_from(tokens, {}));
  ASSERT_EQ(sentences.size(), 2u);
  EXPECT_EQ(sentences[0].text, "A dog runs.");
  EXPECT_EQ(sentences[0].tokens, (TokenRange{0, 4}));
  EXPECT_EQ(sentences[1].text, "A cat sleeps.");
  EXPECT_EQ(sentences[1].tokens, (TokenRange{4, 8}));
}

TEST(SegmentSentences, TokenStraddlingBoundaryBelongsToEarlierSentence) {
  const std::vector<std::string> tokens{"Go", ". N", "ow", "."};
  const auto sentences = segment_sentences("Go. Now.", scores_from(tokens, {}));
  ASSERT_EQ(sentences.size(), 2u);
  EXPECT_EQ(sentences[0].tokens, (TokenRange{0, 2}));
  EXPECT_EQ(sentences[1].tokens, (TokenRange{2, 4}));
}

TEST(CriticalTokens, FunctionWordsAndPunctuationAreNotCritical) {
  EXPECT_EQ(critical({"on", " the", " table"}), (std::vector<bool>{false, false, true}));
  EXPECT_EQ(critical({"...", "..."}), (std::vector<bool>{false, false}));
  EXPECT_EQ(critical({"The", " dog", "."}), (std::vector<bool>{false, true, false}));
}

TEST(CriticalTokens, EveryPieceOfContentWordIsCritical) {
  EXPECT_EQ(critical({"air", "plane"}), (std::vector<bool>{true, true}));
  EXPECT_EQ(critical({" (", "left", ")"}), (std::vector<bool>{false, true, false}));
}

TEST(RateAndSelect, WorkedExample) {
  // "A red car. It is on a beach." with the second sentence hallucinated.
  const std::vector<std::string> tokens{"A", " red", " car", ".", " It", " is", " on", " a", " beach", "."};
  const std::vector<double> deltas{0.1, 0.3, 0.4, 0.0, 0.2, 0.0, 0.0, 0.0, -0.7, 0.0};
  const auto rated = testsupport::library_rating(tokens, deltas, 0.0);
  ASSERT_EQ(rated.sentences.size(), 2u);
  EXPECT_DOUBLE_EQ(rated.sentences[0].rating, 0.4);
  EXPECT_DOUBLE_EQ(rated.sentences[1].rating, -0.7);
  EXPECT_EQ(rated.golden.sentences, (std::vector<std::string>{"A red car."}));
  EXPECT_FALSE(rated.golden.fallback_applied);
}

TEST(RateAndSelect, TauOneKeepsBestThroughFallback) {
  const std::vector<std::string> tokens{"Red", " car", ".", " Blue", " sky", "."};
  const std::vector<double> deltas{0.1, 0.2, 0.0, 0.5, 0.3, 0.0};
  const auto rated = testsupport::library_rating(tokens, deltas, 1.0);
  EXPECT_EQ(rated.golden.sentences, (std::vector<std::string>{"Blue sky."}));
  EXPECT_TRUE(rated.golden.fallback_applied);
}

TEST(RateAndSelect, TauMinusOneKeepsEverySentenceWithCriticalTokens) {
  const std::vector<std::string> tokens{"Red", " car", ".", " It", " is", ".", " Sky", "."};
  const std::vector<double> deltas{-0.9, -0.9, 0.0, 0.5, 0.5, 0.0, -0.5, 0.0};
  const auto rated = testsupport::library_rating(tokens, deltas, -1.0);
  EXPECT_EQ(rated.golden.sentences, (std::vector<std::string>{"Red car.", "Sky."}));
  EXPECT_EQ(rated.sentences[1].rating, kNoRating);
  EXPECT_EQ(rated.sentences[1].critical_count, 0u);
}

TEST(RateAndSelect, TiesFallBackToFirst) {
  const std::vector<std::string> tokens{"Cat", ".", " Dog", "."};
  const auto rated = testsupport::library_rating(tokens, {-0.3, 0.0, -0.3, 0.0}, 0.0);
  EXPECT_EQ(rated.golden.sentences, (std::vector<std::string>{"Cat."}));
  EXPECT_EQ(rated.golden.source_indices, (std::vector<std::size_t>{0}));
}

TEST(RateCaption, PoisonedSentenceDropped) {
  HallucinationPlan plan;
  plan.grounded_default = true;
  plan.poisoned_sentences = {1};
  const auto backend = mock_with(plan);
  const ContrastiveRater rater;
  const auto rated = rater.rate_caption(backend, png_ref("img-1"), kInstruction,
                                        "A dog sits on grass. A surfboard leans on the fence. The sky is blue.", 0.0);
  EXPECT_EQ(rated.golden.sentences,
            (std::vector<std::string>{"A dog sits on grass.", "The sky is blue."}));
}

TEST(FilterAnswer, PoisonedSentenceRemoved) {
  HallucinationPlan plan;
  plan.grounded_default = true;
  plan.poisoned_sentences = {1};
  const auto backend = mock_with(plan);
  const ContrastiveRater rater;
  const auto out = rater.filter_answer(backend, png_ref("img-1"), "Describe more details about the dog.",
                                       "The dog is brown. It wears a crown. Its tail is short.", 0.0);
  EXPECT_EQ(out.text, "The dog is brown. Its tail is short.");
  EXPECT_FALSE(out.excluded);
}

TEST(FilterAnswer, AllPoisonedIsExcludedWithoutFallback) {
  HallucinationPlan plan;
  plan.poisoned_sentences = {0, 1};
  const auto backend = mock_with(plan);
  const ContrastiveRater rater;
  const auto out = rater.filter_answer(backend, png_ref("img-1"), "Describe more details about the dog.",
                                       "A dragon flies. It breathes fire.", 0.0);
  EXPECT_TRUE(out.excluded);
  EXPECT_EQ(out.text, "");
  EXPECT_EQ(out.sentences.size(), 2u);
}

TEST(FilterAnswer, MinusOneKeepsAnswerModuloWhitespace) {
  const MockBackend backend(11);
  const ContrastiveRater rater;
  const std::string answer = "The dog  is brown.\nIts tail is short.  ";
  const auto out = rater.filter_answer(backend, png_ref("img-1"), "Describe more details about the dog.", answer, -1.0);
  EXPECT_EQ(out.text, text::normalize_whitespace(answer));
}

// Properties over random captions.

TEST(RaterProperty, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  const auto& lex = text::FunctionWordLexicon::builtin();
  for (int iter = 0; iter < 500; ++iter) {
    const auto c = testsupport::random_caption(rng);
    const double tau = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    const auto expected = testsupport::brute_force_rating(c.tokens, c.deltas, tau, lex);
    const auto got = testsupport::library_rating(c.tokens, c.deltas, tau);
    ASSERT_EQ(got.sentences.size(), expected.sentences.size()) << c.text();
    for (std::size_t s = 0; s < got.sentences.size(); ++s) {
      EXPECT_EQ(got.sentences[s].text, expected.sentences[s].text) << c.text();
      EXPECT_EQ(got.sentences[s].rating, expected.sentences[s].rating) << c.text();
      EXPECT_EQ(got.sentences[s].retained, expected.sentences[s].retained) << c.text();
    }
    EXPECT_EQ(got.golden.sentences, expected.golden) << c.text();
    EXPECT_EQ(got.golden.fallback_applied, expected.fallback_applied) << c.text();
  }
}

TEST(RaterProperty, SentencesPartitionTokens) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 300; ++iter) {
    const auto c = testsupport::random_caption(rng, 40);
    const auto rated = testsupport::library_rating(c.tokens, c.deltas, 0.0);
    std::size_t next = 0;
    for (const auto& s : rated.sentences) {
      EXPECT_EQ(s.tokens.begin, next);
      next = s.tokens.end;
    }
    EXPECT_EQ(next, c.tokens.size()) << c.text();
  }
}

TEST(RaterProperty, HigherTauNeverRetainsMore) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int iter = 0; iter < 300; ++iter) {
    const auto c = testsupport::random_caption(rng);
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const auto low = testsupport::library_rating(c.tokens, c.deltas, a);
    const auto high = testsupport::library_rating(c.tokens, c.deltas, b);
    for (std::size_t s = 0; s < low.sentences.size(); ++s)
      if (high.sentences[s].retained) {
        EXPECT_TRUE(low.sentences[s].retained);
      }
  }
}

TEST(RaterProperty, ZeroDeltasRetainNothingAtTauZero) {
  std::mt19937_64 rng(13);
  for (int iter = 0; iter < 200; ++iter) {
    auto c = testsupport::random_caption(rng);
    std::fill(c.deltas.begin(), c.deltas.end(), 0.0);
    const auto rated = testsupport::library_rating(c.tokens, c.deltas, 0.0);
    for (const auto& s : rated.sentences) EXPECT_FALSE(s.retained);
    if (!rated.sentences.empty()) {
      EXPECT_TRUE(rated.golden.fallback_applied);
    }
  }
}

TEST(RaterProperty, NonCriticalDeltasDoNotMatter) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int iter = 0; iter < 300; ++iter) {
    const auto c = testsupport::random_caption(rng);
    const auto base = testsupport::library_rating(c.tokens, c.deltas, 0.0);
    auto perturbed = c.deltas;
    for (std::size_t i = 0; i < perturbed.size(); ++i)
      if (!base.tokens[i].is_critical) perturbed[i] = u(rng);
    const auto again = testsupport::library_rating(c.tokens, perturbed, 0.0);
    for (std::size_t s = 0; s < base.sentences.size(); ++s)
      EXPECT_EQ(base.sentences[s].rating, again.sentences[s].rating);
    EXPECT_EQ(base.golden.sentences, again.golden.sentences);
  }
}
