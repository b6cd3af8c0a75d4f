#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace detailcap::eval {

/// An alias listed under two canonical names, or a canonical name listed as
/// another's alias.
class DuplicateAlias : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// canonical -> aliases
using SynonymMap = std::map<std::string, std::set<std::string>>;

/// Lower-cased alias -> canonical lookup built from a SynonymMap.
class Canonicalizer {
 public:
  Canonicalizer() = default;
  /// Throws DuplicateAlias.
  explicit Canonicalizer(const SynonymMap& synonyms);

  /// Canonical form of `name`; unknown names come back lower-cased.
  std::string canonical(std::string_view name) const;
  std::set<std::string> canonical(const std::set<std::string>& names) const;

 private:
  std::map<std::string, std::string, std::less<>> to_canonical_;
};

struct ChairItem {
  std::string caption_id;
  std::set<std::string> mentioned_objects;
  std::set<std::string> ground_truth_objects;
};

struct ChairInput {
  std::vector<ChairItem> items;
  SynonymMap synonym_map;
};

struct ChairCounts {
  std::size_t captions = 0;
  std::size_t hallucinated_captions = 0;
  std::size_t mentions = 0;
  std::size_t hallucinated_mentions = 0;
};

struct ChairScores {
  double chair_s = 0;  // captions with a hallucinated object / captions
  double chair_i = 0;  // hallucinated mentions / mentions
  ChairCounts counts;
  /// caption_id -> hallucinated canonical objects
  std::map<std::string, std::set<std::string>> hallucinated;

  nlohmann::ordered_json to_json() const;
};

/// Mentions and ground truth are canonicalized before comparison; a mention
/// is hallucinated when its canonical form is not in the caption's ground
/// truth. Empty denominators give 0. Throws DuplicateAlias.
ChairScores chair_scores(const ChairInput& input);

struct Vocabulary {
  std::vector<std::string> objects;  // canonical names
  SynonymMap synonyms;
};

/// Canonical objects mentioned in `caption`: case-insensitive whole-word
/// matches of canonical names and aliases (longest phrase first), with a
/// plural "s"/"es" accepted on the last word. Throws std::invalid_argument
/// for an empty vocabulary and DuplicateAlias.
std::set<std::string> extract_mentions(std::string_view caption, const Vocabulary& vocabulary);

/// Parses {"canonical": ["alias", ...], ...}.
SynonymMap parse_synonyms(const nlohmann::json& doc);

}  // namespace detailcap::eval
