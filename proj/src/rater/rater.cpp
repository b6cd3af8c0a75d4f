#include "detailcap/rater/rater.hpp"

#include <algorithm>
#include <future>

#include "detailcap/gateway/errors.hpp"

namespace detailcap::rater {

std::vector<double> compute_delta(std::span<const double> p_with, std::span<const double> p_without) {
  if (p_with.size() != p_without.size()) {
    throw LengthMismatch("compute_delta: " + std::to_string(p_with.size()) + " vs " +
                         std::to_string(p_without.size()) + " probabilities");
  }
  std::vector<double> delta(p_with.size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = p_with[i] - p_without[i];
  return delta;
}

std::vector<TokenScore> compute_token_scores(const gateway::Backend& backend, const gateway::ImageRef& image,
                                             std::string_view instruction, std::string_view text) {
  if (text::trim(text).empty()) throw gateway::PreconditionViolation("cannot rate empty text");

  gateway::PromptParts with_image;
  with_image.user_text = std::string(instruction);
  with_image.image = image;
  gateway::PromptParts text_only = with_image;
  text_only.image.reset();

  auto with_future = std::async(std::launch::async, [&] { return backend.score_continuation(with_image, text); });
  auto without = backend.score_continuation(text_only, text);
  auto with = with_future.get();

  if (with.tokens != without.tokens) {
    throw SegmentationMismatch(backend.name() + " segmented the with-image and text-only continuations differently (" +
                               std::to_string(with.tokens.size()) + " vs " + std::to_string(without.tokens.size()) +
                               " tokens)");
  }
  const auto delta = compute_delta(with.probs, without.probs);

  std::vector<TokenScore> scores(with.tokens.size());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& s = scores[i];
    s.token = std::move(with.tokens[i]);
    s.span = {offset, offset + s.token.size()};
    offset = s.span.end;
    s.p_with = with.probs[i];
    s.p_without = without.probs[i];
    s.delta = delta[i];
  }
  return scores;
}

std::vector<RatedSentence> segment_sentences(std::string_view text, std::span<const TokenScore> tokens) {
  const auto regions = text::sentence_regions(text);
  std::vector<RatedSentence> sentences(regions.size());
  for (std::size_t k = 0; k < regions.size(); ++k) {
    sentences[k].index = k;
    sentences[k].span = regions[k];
    sentences[k].text = text::normalize_whitespace(text.substr(regions[k].begin, regions[k].size()));
  }
  if (sentences.empty()) return sentences;

  // Token starts are non-decreasing, so one forward sweep assigns them.
  std::size_t k = 0;
  std::size_t t = 0;
  for (; k < sentences.size(); ++k) {
    sentences[k].tokens.begin = t;
    while (t < tokens.size() && (k + 1 == sentences.size() || tokens[t].span.begin < regions[k].end)) ++t;
    sentences[k].tokens.end = t;
  }
  return sentences;
}

std::vector<bool> identify_critical_tokens(std::span<const TokenScore> tokens,
                                           const text::FunctionWordLexicon& lexicon) {
  std::string joined;
  std::vector<text::ByteSpan> spans;
  spans.reserve(tokens.size());
  for (const auto& t : tokens) {
    spans.push_back({joined.size(), joined.size() + t.token.size()});
    joined += t.token;
  }
  const auto words = text::whitespace_words(joined);
  std::vector<bool> content(words.size());
  for (std::size_t w = 0; w < words.size(); ++w)
    content[w] = text::is_content_word(std::string_view(joined).substr(words[w].begin, words[w].size()), lexicon);

  std::vector<bool> mask(tokens.size(), false);
  std::size_t w0 = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& s = spans[i];
    while (w0 < words.size() && words[w0].end <= s.begin) ++w0;
    for (std::size_t w = w0; w < words.size() && words[w].begin < s.end; ++w) {
      if (!content[w]) continue;
      const auto b = std::max(s.begin, words[w].begin);
      const auto e = std::min(s.end, words[w].end);
      for (auto p = b; p < e && !mask[i]; ++p) mask[i] = text::is_word_byte(joined[p]);
      if (mask[i]) break;
    }
  }
  return mask;
}

void rate_sentences(std::span<RatedSentence> sentences, std::span<const TokenScore> tokens, double tau) {
  for (auto& s : sentences) {
    s.rating = kNoRating;
    s.critical_count = 0;
    for (auto t = s.tokens.begin; t < s.tokens.end && t < tokens.size(); ++t) {
      if (!tokens[t].is_critical) continue;
      ++s.critical_count;
      s.rating = std::max(s.rating, tokens[t].delta);
    }
    s.retained = s.critical_count > 0 && s.rating > tau;
  }
}

GoldenSentenceSet select_golden(std::span<const RatedSentence> sentences, double tau, Fallback fallback) {
  GoldenSentenceSet golden;
  golden.tau_used = tau;
  for (const auto& s : sentences) {
    if (!s.retained) continue;
    golden.sentences.push_back(s.text);
    golden.source_indices.push_back(s.index);
  }
  if (golden.empty() && fallback == Fallback::keep_best && !sentences.empty()) {
    auto best = sentences.begin();
    for (auto it = sentences.begin(); it != sentences.end(); ++it)
      if (it->rating > best->rating) best = it;
    golden.sentences.push_back(best->text);
    golden.source_indices.push_back(best->index);
    golden.fallback_applied = true;
  }
  return golden;
}

RatedText rate_and_select(std::vector<RatedSentence> sentences, std::vector<TokenScore> tokens, double tau,
                          Fallback fallback) {
  RatedText out;
  out.tokens = std::move(tokens);
  out.sentences = std::move(sentences);
  rate_sentences(out.sentences, out.tokens, tau);
  out.golden = select_golden(out.sentences, tau, fallback);
  return out;
}

RatedText ContrastiveRater::rate(const gateway::Backend& backend, const gateway::ImageRef& image,
                                 std::string_view instruction, std::string_view text, double tau,
                                 Fallback fallback) const {
  auto tokens = compute_token_scores(backend, image, instruction, text);
  const auto mask = identify_critical_tokens(tokens, *lexicon_);
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i].is_critical = mask[i];
  auto sentences = segment_sentences(text, tokens);
  return rate_and_select(std::move(sentences), std::move(tokens), tau, fallback);
}

RatedText ContrastiveRater::rate_caption(const gateway::Backend& backend, const gateway::ImageRef& image,
                                         std::string_view instruction, std::string_view caption, double tau) const {
  return rate(backend, image, instruction, caption, tau, Fallback::keep_best);
}

FilteredAnswer ContrastiveRater::filter_answer(const gateway::Backend& backend, const gateway::ImageRef& image,
                                               std::string_view instruction, std::string_view answer,
                                               double tau_ans) const {
  auto rated = rate(backend, image, instruction, answer, tau_ans, Fallback::none);
  FilteredAnswer out;
  out.text = text::join(rated.golden.sentences, " ");
  out.sentences = std::move(rated.sentences);
  out.excluded = out.text.empty();
  return out;
}

}  // namespace detailcap::rater
