#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "detailcap/gateway/backend.hpp"
#include "detailcap/text/lexicon.hpp"
#include "detailcap/text/text_util.hpp"

namespace detailcap::rater {

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The with-image and text-only scoring calls returned different token lists.
class SegmentationMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rating of a sentence that has no critical token.
inline constexpr double kNoRating = -std::numeric_limits<double>::infinity();

struct TokenScore {
  std::string token;
  text::ByteSpan span;  // into the scored text
  double p_with = 0;
  double p_without = 0;
  double delta = 0;     // p_with - p_without
  bool is_critical = false;
};

struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const TokenRange&) const = default;
};

struct RatedSentence {
  std::size_t index = 0;
  std::string text;
  text::ByteSpan span;
  TokenRange tokens;
  double rating = kNoRating;
  std::size_t critical_count = 0;
  bool retained = false;
};

struct GoldenSentenceSet {
  std::vector<std::string> sentences;       // source order
  std::vector<std::size_t> source_indices;  // RatedSentence::index of each member
  double tau_used = 0;
  bool fallback_applied = false;

  bool empty() const { return sentences.empty(); }
  std::size_t size() const { return sentences.size(); }
};

/// Element-wise p_with - p_without. Throws LengthMismatch.
std::vector<double> compute_delta(std::span<const double> p_with, std::span<const double> p_without);

/// Scores `text` twice, once conditioned on (image, instruction) and once on
/// the instruction alone, and aligns the two sequences. Both scoring calls
/// are issued concurrently. Throws SegmentationMismatch when the backend
/// segments the two calls differently.
std::vector<TokenScore> compute_token_scores(const gateway::Backend& backend, const gateway::ImageRef& image,
                                             std::string_view instruction, std::string_view text);

/// Splits `text` into sentences and assigns every token to the sentence in
/// which it starts. Ratings are left unset.
std::vector<RatedSentence> segment_sentences(std::string_view text, std::span<const TokenScore> tokens);

/// Critical-token mask. The token pieces are concatenated to recover the
/// text; a token is critical when it overlaps a content word (see
/// text::is_content_word) in at least one letter or digit.
std::vector<bool> identify_critical_tokens(std::span<const TokenScore> tokens,
                                           const text::FunctionWordLexicon& lexicon);

/// Fills rating, critical_count and retained (rating > tau) for each sentence
/// from the tokens' delta and is_critical fields.
void rate_sentences(std::span<RatedSentence> sentences, std::span<const TokenScore> tokens, double tau);

enum class Fallback { keep_best, none };

/// Golden set from already-rated sentences. With Fallback::keep_best and no
/// sentence retained, the highest-rated sentence (first on ties) is kept and
/// fallback_applied is set.
GoldenSentenceSet select_golden(std::span<const RatedSentence> sentences, double tau, Fallback fallback);

struct RatedText {
  std::vector<TokenScore> tokens;
  std::vector<RatedSentence> sentences;
  GoldenSentenceSet golden;
};

/// rate_sentences followed by select_golden with Fallback::keep_best.
RatedText rate_and_select(std::vector<RatedSentence> sentences, std::vector<TokenScore> tokens, double tau,
                          Fallback fallback = Fallback::keep_best);

struct FilteredAnswer {
  std::string text;  // surviving sentences joined by single spaces
  std::vector<RatedSentence> sentences;
  bool excluded = false;
};

/// Sentence-level contrastive rating against one backend. Stateless apart
/// from the lexicon reference; safe to share between threads.
class ContrastiveRater {
 public:
  explicit ContrastiveRater(const text::FunctionWordLexicon& lexicon = text::FunctionWordLexicon::builtin())
      : lexicon_(&lexicon) {}

  /// Scores, segments, masks and rates `caption`.
  RatedText rate_caption(const gateway::Backend& backend, const gateway::ImageRef& image,
                         std::string_view instruction, std::string_view caption, double tau) const;

  /// Rates an answer conditioned on the instruction that produced it and
  /// drops sentences at or below tau_ans. No fallback: an all-dropped answer
  /// comes back empty and excluded.
  FilteredAnswer filter_answer(const gateway::Backend& backend, const gateway::ImageRef& image,
                               std::string_view instruction, std::string_view answer, double tau_ans) const;

  const text::FunctionWordLexicon& lexicon() const { return *lexicon_; }

 private:
  RatedText rate(const gateway::Backend& backend, const gateway::ImageRef& image, std::string_view instruction,
                 std::string_view text, double tau, Fallback fallback) const;

  const text::FunctionWordLexicon* lexicon_;
};

}  // namespace detailcap::rater
