#include "detailcap/eval/chair.hpp"

#include <algorithm>

#include "detailcap/text/text_util.hpp"

namespace detailcap::eval {

namespace {

std::vector<std::string> lower_words(std::string_view s) {
  std::vector<std::string> words;
  std::string current;
  for (char c : s) {
    if (text::is_word_byte(c)) {
      current += c;
    } else if (!current.empty()) {
      words.push_back(text::to_lower(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(text::to_lower(current));
  return words;
}

bool word_matches(const std::string& caption_word, const std::string& phrase_word, bool last) {
  if (caption_word == phrase_word) return true;
  if (!last || !caption_word.starts_with(phrase_word)) return false;
  const auto suffix = std::string_view(caption_word).substr(phrase_word.size());
  return suffix == "s" || suffix == "es";
}

struct Phrase {
  std::vector<std::string> words;
  std::string canonical;
};

}  // namespace

Canonicalizer::Canonicalizer(const SynonymMap& synonyms) {
  for (const auto& [canonical, aliases] : synonyms) {
    const auto c = text::to_lower(canonical);
    auto [it, inserted] = to_canonical_.emplace(c, c);
    if (!inserted && it->second != c)
      throw DuplicateAlias("'" + canonical + "' is both a canonical name and an alias of '" + it->second + "'");
  }
  for (const auto& [canonical, aliases] : synonyms) {
    const auto c = text::to_lower(canonical);
    for (const auto& alias : aliases) {
      const auto a = text::to_lower(alias);
      auto [it, inserted] = to_canonical_.emplace(a, c);
      if (!inserted && it->second != c)
        throw DuplicateAlias("alias '" + alias + "' maps to both '" + it->second + "' and '" + c + "'");
    }
  }
}

std::string Canonicalizer::canonical(std::string_view name) const {
  auto key = text::to_lower(text::normalize_whitespace(name));
  auto it = to_canonical_.find(key);
  return it == to_canonical_.end() ? key : it->second;
}

std::set<std::string> Canonicalizer::canonical(const std::set<std::string>& names) const {
  std::set<std::string> out;
  for (const auto& n : names) out.insert(canonical(n));
  return out;
}

nlohmann::ordered_json ChairScores::to_json() const {
  nlohmann::ordered_json j;
  j["chair_s"] = chair_s;
  j["chair_i"] = chair_i;
  j["counts"] = {{"captions", counts.captions},
                 {"hallucinated_captions", counts.hallucinated_captions},
                 {"mentions", counts.mentions},
                 {"hallucinated_mentions", counts.hallucinated_mentions}};
  j["hallucinated"] = nlohmann::ordered_json::object();
  for (const auto& [id, objects] : hallucinated)
    if (!objects.empty()) j["hallucinated"][id] = objects;
  return j;
}

ChairScores chair_scores(const ChairInput& input) {
  const Canonicalizer canon(input.synonym_map);
  ChairScores scores;
  for (const auto& item : input.items) {
    const auto mentioned = canon.canonical(item.mentioned_objects);
    const auto truth = canon.canonical(item.ground_truth_objects);
    std::set<std::string> bad;
    std::set_difference(mentioned.begin(), mentioned.end(), truth.begin(), truth.end(),
                        std::inserter(bad, bad.end()));
    ++scores.counts.captions;
    scores.counts.mentions += mentioned.size();
    scores.counts.hallucinated_mentions += bad.size();
    if (!bad.empty()) ++scores.counts.hallucinated_captions;
    scores.hallucinated[item.caption_id] = std::move(bad);
  }
  const auto& c = scores.counts;
  scores.chair_s = c.captions ? static_cast<double>(c.hallucinated_captions) / static_cast<double>(c.captions) : 0.0;
  scores.chair_i = c.mentions ? static_cast<double>(c.hallucinated_mentions) / static_cast<double>(c.mentions) : 0.0;
  return scores;
}

std::set<std::string> extract_mentions(std::string_view caption, const Vocabulary& vocabulary) {
  if (vocabulary.objects.empty() && vocabulary.synonyms.empty())
    throw std::invalid_argument("extract_mentions: empty vocabulary");
  const Canonicalizer canon(vocabulary.synonyms);

  std::vector<Phrase> phrases;
  auto add = [&](std::string_view name, const std::string& canonical) {
    auto words = lower_words(name);
    if (!words.empty()) phrases.push_back({std::move(words), canonical});
  };
  for (const auto& obj : vocabulary.objects) add(obj, canon.canonical(obj));
  for (const auto& [canonical, aliases] : vocabulary.synonyms) {
    const auto c = canon.canonical(canonical);
    add(canonical, c);
    for (const auto& a : aliases) add(a, c);
  }
  std::stable_sort(phrases.begin(), phrases.end(),
                   [](const Phrase& a, const Phrase& b) { return a.words.size() > b.words.size(); });

  const auto words = lower_words(caption);
  std::set<std::string> found;
  for (std::size_t i = 0; i < words.size();) {
    std::size_t advance = 1;
    for (const auto& p : phrases) {
      if (i + p.words.size() > words.size()) continue;
      bool match = true;
      for (std::size_t k = 0; k < p.words.size() && match; ++k)
        match = word_matches(words[i + k], p.words[k], k + 1 == p.words.size());
      if (match) {
        found.insert(p.canonical);
        advance = p.words.size();
        break;
      }
    }
    i += advance;
  }
  return found;
}

SynonymMap parse_synonyms(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("synonyms: expected an object of canonical -> [aliases]");
  SynonymMap map;
  for (const auto& [canonical, aliases] : doc.items()) {
    if (!aliases.is_array()) throw std::invalid_argument("synonyms." + canonical + ": expected an array");
    auto& set = map[canonical];
    for (const auto& a : aliases) set.insert(a.get<std::string>());
  }
  return map;
}

}  // namespace detailcap::eval
