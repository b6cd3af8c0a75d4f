#include "detailcap/gateway/mock_backend.hpp"

#include <algorithm>
#include <array>
#include <thread>

#include "detailcap/gateway/errors.hpp"
#include "detailcap/gateway/image.hpp"
#include "detailcap/text/text_util.hpp"

namespace detailcap::gateway {

namespace {

constexpr std::array kColors{"red", "blue", "green", "white", "black", "yellow", "gray", "brown"};
constexpr std::array kTextures{"smooth", "rough", "glossy", "matte", "weathered", "polished"};
constexpr std::array kParts{"shadow", "label", "pattern", "handle", "reflection", "stripe"};
constexpr std::array kRegions{"upper left", "upper right", "lower left", "lower right",
                              "center", "left side", "right side", "foreground", "background"};
constexpr std::array kRelations{"next to", "behind", "in front of", "above", "below"};
constexpr std::array kDirections{"left", "right", "camera", "horizon"};

template <std::size_t N>
const char* pick(const std::array<const char*, N>& list, std::uint32_t h) {
  return list[h % N];
}

bool is_continuation_byte(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Object phrase of a follow-up instruction, e.g. "Describe more details about
// the position of the red car." -> "red car".
std::string instruction_target(std::string_view instruction, bool& is_position) {
  auto lower = text::to_lower(text::trim(instruction));
  is_position = lower.find("position of") != std::string::npos;
  std::string_view rest = lower;
  if (auto at = rest.find("details about"); at != std::string_view::npos)
    rest = rest.substr(at + std::string_view("details about").size());
  rest = text::trim(rest);
  for (std::string_view prefix : {"the position of", "the ", "a ", "an "}) {
    if (rest.substr(0, prefix.size()) == prefix) rest = text::trim(rest.substr(prefix.size()));
  }
  auto target = std::string(text::strip_punct(text::trim(rest)));
  return target.empty() ? std::string("subject") : target;
}

std::string slot(const PromptParts& p, const std::string& key, std::string_view fallback = {}) {
  auto it = p.slots.find(key);
  return it == p.slots.end() ? std::string(fallback) : it->second;
}

std::string strip_summary_headers(std::string_view s) {
  std::string out(s);
  const std::string header = "Summary:";
  for (auto pos = out.find(header); pos != std::string::npos; pos = out.find(header))
    out.erase(pos, header.size());
  return out;
}

std::string hex32(std::uint32_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(8, '0');
  for (int i = 7; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

}  // namespace

std::uint32_t mock_hash(std::uint64_t seed, std::initializer_list<std::string_view> fields) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (char c : std::to_string(seed)) mix(static_cast<unsigned char>(c));
  for (auto f : fields) {
    mix(0x1F);
    for (char c : f) mix(static_cast<unsigned char>(c));
  }
  // murmur3 fmix64
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return static_cast<std::uint32_t>((h >> 32) ^ (h & 0xFFFFFFFFULL));
}

double mock_probability(std::uint64_t seed, std::string_view token, std::size_t t, bool has_image) {
  const auto h = mock_hash(seed, {token, std::to_string(t), has_image ? "1" : "0"});
  return 0.05 + 0.9 * (static_cast<double>(h) / 4294967296.0);
}

std::vector<std::string> mock_tokenize(std::string_view s) {
  constexpr std::size_t kMaxPiece = 6;
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t ws_begin = i;
    while (i < s.size() && text::is_space(s[i])) ++i;
    std::string piece(s.substr(ws_begin, i - ws_begin));
    if (i >= s.size()) {
      tokens.push_back(std::move(piece));
      break;
    }
    if (!text::is_word_byte(s[i])) {
      piece.push_back(s[i++]);
      tokens.push_back(std::move(piece));
      continue;
    }
    std::size_t run_end = i;
    while (run_end < s.size() && text::is_word_byte(s[run_end])) ++run_end;
    while (i < run_end) {
      std::size_t cut = std::min(i + kMaxPiece, run_end);
      while (cut < run_end && is_continuation_byte(s[cut])) ++cut;
      piece.append(s.substr(i, cut - i));
      tokens.push_back(std::move(piece));
      piece.clear();
      i = cut;
    }
  }
  return tokens;
}

std::vector<std::string> mock_nouns(std::string_view sentence, const text::FunctionWordLexicon& lexicon) {
  std::vector<std::string> nouns;
  for (const auto& w : text::whitespace_words(sentence)) {
    auto raw = sentence.substr(w.begin, w.size());
    if (!text::is_content_word(raw, lexicon)) continue;
    auto word = text::to_lower(text::strip_punct(raw));
    const auto first = static_cast<unsigned char>(word.front());
    if (!(first >= 'a' && first <= 'z')) continue;
    if (ends_with(word, "ing") || ends_with(word, "ed")) continue;
    if (std::find(nouns.begin(), nouns.end(), word) == nouns.end()) nouns.push_back(word);
  }
  return nouns;
}

std::string mock_image_identity(const ImageRef& image) {
  return image.id.empty() ? image.to_string() : image.id;
}

MockBackend::MockBackend(std::uint64_t seed, MockOptions options, const text::FunctionWordLexicon& lexicon)
    : seed_(seed), options_(std::move(options)), lexicon_(&lexicon) {}

void MockBackend::simulate_latency() const {
  if (options_.latency.count() > 0) std::this_thread::sleep_for(options_.latency);
}

std::string MockBackend::do_generate_caption(const ImageRef& image, std::string_view) const {
  load_image(image);
  simulate_latency();
  const auto h = mock_hash(seed_, {mock_image_identity(image)});
  const auto a = h % 10;
  const auto b = (a + 1 + (h >> 8) % 9) % 10;
  return "A scene containing object-" + std::to_string(a) + " and object-" + std::to_string(b) + ".";
}

std::string MockBackend::do_answer_visual_question(const ImageRef& image, std::string_view instruction) const {
  load_image(image);
  simulate_latency();
  const auto h = mock_hash(seed_, {mock_image_identity(image), instruction});
  bool is_position = false;
  const auto obj = instruction_target(instruction, is_position);
  const std::string part = pick(kParts, h >> 12);
  if (is_position) {
    return "The " + obj + " is in the " + pick(kRegions, h) + " of the image. It is " +
           pick(kRelations, h >> 4) + " a " + part + ". The " + obj + " faces the " +
           pick(kDirections, h >> 8) + ".";
  }
  return "The " + obj + " is " + pick(kColors, h) + ". It has a " + pick(kTextures, h >> 4) +
         " surface. A " + part + " is visible on the " + obj + ".";
}

ScoredContinuation MockBackend::do_score_continuation(const PromptParts& prefix,
                                                      std::string_view continuation) const {
  if (prefix.image) load_image(*prefix.image);
  simulate_latency();
  const bool has_image = prefix.image.has_value();
  const auto& plan = options_.plan;

  ScoredContinuation out;
  out.tokens = mock_tokenize(continuation);
  out.probs.reserve(out.tokens.size());

  const auto regions = text::sentence_regions(continuation);
  const auto words = text::whitespace_words(continuation);
  std::size_t offset = 0;
  for (std::size_t t = 0; t < out.tokens.size(); ++t) {
    const auto& tok = out.tokens[t];
    const std::size_t begin = offset;
    offset += tok.size();

    std::optional<ProbabilityPair> forced;
    if (!plan.poisoned_sentences.empty()) {
      for (std::size_t k = 0; k < regions.size(); ++k)
        if (regions[k].contains(begin) && plan.poisoned_sentences.contains(k)) forced = plan.poison;
    }
    if (!forced && !plan.words.empty()) {
      // Word containing the first non-space byte of the token.
      std::size_t first = begin;
      while (first < offset && text::is_space(continuation[first])) ++first;
      for (const auto& w : words) {
        if (!w.contains(first)) continue;
        auto key = text::to_lower(text::strip_punct(continuation.substr(w.begin, w.size())));
        if (auto it = plan.words.find(key); it != plan.words.end()) forced = it->second;
        break;
      }
    }
    if (forced) {
      out.probs.push_back(has_image ? forced->p_with : forced->p_without);
      continue;
    }
    if (plan.ignore_image) {
      out.probs.push_back(mock_probability(seed_, tok, t, false));
    } else if (plan.grounded_default) {
      const double a = mock_probability(seed_, tok, t, true);
      const double b = mock_probability(seed_, tok, t, false);
      out.probs.push_back(has_image ? std::max(a, b) : std::min(a, b));
    } else {
      out.probs.push_back(mock_probability(seed_, tok, t, has_image));
    }
  }
  return out;
}

std::string MockBackend::do_generate_text(const PromptParts& prompt) const {
  simulate_latency();
  const auto& task = prompt.task;
  if (task == task::kObjectInstructions) {
    const auto nouns = mock_nouns(slot(prompt, "sentence", prompt.user_text), *lexicon_);
    if (nouns.empty()) return "No objects found.";
    std::vector<std::string> lines;
    for (const auto& n : nouns) lines.push_back("Describe more details about the " + n + ".");
    return text::join(lines, "\n");
  }
  if (task == task::kObjectSummary || task == task::kPositionSummary) {
    return text::normalize_whitespace("Summary: " + slot(prompt, "golden") + " " + slot(prompt, "details"));
  }
  if (task == task::kFinalCaption) {
    std::vector<std::string> sentences;
    for (const auto* key : {"golden", "c_o", "c_p"}) {
      for (auto& s : text::split_sentences(text::normalize_whitespace(strip_summary_headers(slot(prompt, key))))) {
        if (!s.empty() && std::find(sentences.begin(), sentences.end(), s) == sentences.end())
          sentences.push_back(std::move(s));
      }
    }
    return text::join(sentences, " ");
  }
  if (task == task::kPrismAnswer) {
    const auto sentences = text::split_sentences(slot(prompt, "caption"));
    const auto question = slot(prompt, "question");
    std::vector<std::string> qwords;
    for (const auto& w : text::whitespace_words(question)) {
      auto raw = std::string_view(question).substr(w.begin, w.size());
      if (text::is_content_word(raw, *lexicon_)) qwords.push_back(text::to_lower(text::strip_punct(raw)));
    }
    std::size_t best = 0, best_overlap = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      std::size_t overlap = 0;
      std::string_view s = sentences[i];
      for (const auto& w : text::whitespace_words(s)) {
        auto word = text::to_lower(text::strip_punct(s.substr(w.begin, w.size())));
        if (std::find(qwords.begin(), qwords.end(), word) != qwords.end()) ++overlap;
      }
      if (overlap > best_overlap) {
        best = i;
        best_overlap = overlap;
      }
    }
    return sentences.empty() ? std::string("Answer: unknown.") : "Answer: " + sentences[best];
  }
  std::string all = prompt.system_text.value_or("") + "\n" + prompt.user_text;
  return "Mock response " + hex32(mock_hash(seed_, {all})) + ".";
}

}  // namespace detailcap::gateway
