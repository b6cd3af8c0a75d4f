#pragma once

#include <chrono>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "detailcap/gateway/backend.hpp"
#include "detailcap/text/lexicon.hpp"

namespace detailcap::gateway {

struct ProbabilityPair {
  double p_with = 0.5;
  double p_without = 0.5;
};

/// Forces chosen tokens of scored continuations to fixed probabilities, so
/// tests can build captions and answers with known grounded / hallucinated
/// sentences. Precedence: poisoned sentence > word override > default rule.
struct HallucinationPlan {
  /// Keyed by lower-cased word with surrounding punctuation stripped; applies
  /// to every token of that whitespace-delimited word.
  std::map<std::string, ProbabilityPair> words;
  /// Sentence indices (within the scored continuation) whose every token
  /// gets `poison`.
  std::set<std::size_t> poisoned_sentences;
  ProbabilityPair poison{0.2, 0.9};
  /// Unplanned tokens: draw both hash probabilities, assign the larger to
  /// p_with, so the image never lowers a token's probability.
  bool grounded_default = false;
  /// p_with == p_without for every unplanned token.
  bool ignore_image = false;
};

struct MockOptions {
  HallucinationPlan plan;
  /// Artificial per-call delay, for concurrency tests.
  std::chrono::milliseconds latency{0};
};

/// Deterministic stand-in for both model roles. Every output is a pure
/// function of (seed, request content); see docs/mock_backend.md.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::uint64_t seed, MockOptions options = {},
                       const text::FunctionWordLexicon& lexicon = text::FunctionWordLexicon::builtin());

  std::string name() const override { return "mock"; }
  std::uint64_t seed() const { return seed_; }

 protected:
  std::string do_generate_caption(const ImageRef& image, std::string_view instruction) const override;
  std::string do_answer_visual_question(const ImageRef& image, std::string_view instruction) const override;
  ScoredContinuation do_score_continuation(const PromptParts& prefix,
                                           std::string_view continuation) const override;
  std::string do_generate_text(const PromptParts& prompt) const override;

 private:
  void simulate_latency() const;

  std::uint64_t seed_;
  MockOptions options_;
  const text::FunctionWordLexicon* lexicon_;
};

/// FNV-1a 64 over decimal(seed) followed by 0x1F-prefixed fields, passed
/// through the murmur3 fmix64 finalizer, folded to 32 bits as
/// (h >> 32) ^ (h & 0xFFFFFFFF).
std::uint32_t mock_hash(std::uint64_t seed, std::initializer_list<std::string_view> fields);

/// 0.05 + 0.9 * hash(seed, token, t, has_image) / 2^32
double mock_probability(std::uint64_t seed, std::string_view token, std::size_t t, bool has_image);

/// Whitespace attaches to the following piece; words split into pieces of
/// at most six bytes (never inside a UTF-8 sequence); every other byte is a
/// piece of its own. Trailing whitespace becomes a final piece.
std::vector<std::string> mock_tokenize(std::string_view text);

/// Words the mock text model treats as nouns: content words (not in the
/// lexicon after stripping punctuation) that start with a letter and do not
/// end in "ing" or "ed"; lower-cased, in order, duplicates dropped.
std::vector<std::string> mock_nouns(std::string_view sentence, const text::FunctionWordLexicon& lexicon);

/// Identity the mock keys image-dependent outputs on.
std::string mock_image_identity(const ImageRef& image);

}  // namespace detailcap::gateway
