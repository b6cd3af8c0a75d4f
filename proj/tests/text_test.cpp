#include <gtest/gtest.h>

#include "detailcap/text/lexicon.hpp"
#include "detailcap/text/prompt_template.hpp"
#include "detailcap/text/text_util.hpp"

using namespace detailcap::text;

namespace {

std::vector<std::string> region_texts(std::string_view s) {
  std::vector<std::string> out;
  for (auto r : sentence_regions(s)) out.emplace_back(s.substr(r.begin, r.size()));
  return out;
}

}  // namespace

TEST(SentenceRegions, SplitsOnTerminatorFollowedBySpace) {
  EXPECT_EQ(region_texts("A dog runs. A cat sleeps."), (std::vector<std::string>{"A dog runs.", " A cat sleeps."}));
}

TEST(SentenceRegions, DecimalIsNotABoundary) {
  EXPECT_EQ(split_sentences("It is 3.5 m tall."), (std::vector<std::string>{"It is 3.5 m tall."}));
}

TEST(SentenceRegions, EmptyInput) { EXPECT_TRUE(sentence_regions("").empty()); }

TEST(SentenceRegions, TerminatorRunsAndMissingFinalPeriod) {
  EXPECT_EQ(split_sentences("Wait... what?! No way"), (std::vector<std::string>{"Wait...", "what?!", "No way"}));
}

TEST(SentenceRegions, TerminatorWithoutFollowingSpaceStaysInside) {
  EXPECT_EQ(split_sentences("See example.com for more. Done."),
            (std::vector<std::string>{"See example.com for more.", "Done."}));
}

TEST(SentenceRegions, RegionsTileTheInput) {
  const std::string s = "  One.  Two!\nThree?   ";
  const auto regions = sentence_regions(s);
  ASSERT_EQ(regions.size(), 3u);
  EXPECT_EQ(regions.front().begin, 0u);
  EXPECT_EQ(regions.back().end, s.size());
  for (std::size_t i = 1; i < regions.size(); ++i) EXPECT_EQ(regions[i].begin, regions[i - 1].end);
}

TEST(TextUtil, NormalizeWhitespace) {
  EXPECT_EQ(normalize_whitespace("  a \t b\n\nc  "), "a b c");
  EXPECT_EQ(normalize_whitespace(""), "");
}

TEST(TextUtil, StripPunct) {
  EXPECT_EQ(strip_punct("\"table,\""), "table");
  EXPECT_EQ(strip_punct("..."), "");
  EXPECT_EQ(strip_punct("object-5."), "object-5");
}

TEST(TextUtil, EstimateTokensIsCeilingOfQuarterBytes) {
  EXPECT_EQ(estimate_tokens(""), 0u);
  EXPECT_EQ(estimate_tokens("abc"), 1u);
  EXPECT_EQ(estimate_tokens("abcd"), 1u);
  EXPECT_EQ(estimate_tokens("abcde"), 2u);
}

TEST(TextUtil, WhitespaceWords) {
  const std::string s = " on  the table.";
  const auto words = whitespace_words(s);
  ASSERT_EQ(words.size(), 3u);
  EXPECT_EQ(s.substr(words[2].begin, words[2].size()), "table.");
}

TEST(Lexicon, BuiltinCoversClosedClasses) {
  const auto& lex = FunctionWordLexicon::builtin();
  EXPECT_GT(lex.size(), 250u);
  for (auto w : {"the", "a", "an", "on", "in", "of", "and", "it", "is", "was", "The", "ON"})
    EXPECT_TRUE(lex.contains(w)) << w;
  for (auto w : {"table", "dog", "airplane", "red"}) EXPECT_FALSE(lex.contains(w)) << w;
}

TEST(Lexicon, ParseSkipsCommentsAndBlanks) {
  const auto lex = FunctionWordLexicon::parse("# comment\nfoo\n\n  Bar \n");
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_TRUE(lex.contains("bar"));
  EXPECT_FALSE(lex.contains("# comment"));
}

TEST(Lexicon, ContentWordDecision) {
  const auto& lex = FunctionWordLexicon::builtin();
  EXPECT_TRUE(is_content_word("table.", lex));
  EXPECT_FALSE(is_content_word("The", lex));
  EXPECT_FALSE(is_content_word("...", lex));
  EXPECT_FALSE(is_content_word("(on)", lex));
}

TEST(PromptTemplate, RendersNamedPlaceholders) {
  PromptTemplate t("Hello {{name}}, {{ name }} again; {{other}}.");
  EXPECT_EQ(t.render({{"name", "x"}, {"other", "y"}}), "Hello x, x again; y.");
  EXPECT_TRUE(t.has_placeholder("name"));
}

TEST(PromptTemplate, MissingValueThrows) {
  PromptTemplate t("{{a}} {{b}}");
  EXPECT_THROW(t.render({{"a", "1"}}), TemplateError);
}

TEST(PromptTemplate, RequireNamesMissingPlaceholder) {
  PromptTemplate t("only {{a}}");
  EXPECT_NO_THROW(t.require({"a"}, "test"));
  EXPECT_THROW(t.require({"a", "b"}, "test"), TemplateError);
}

TEST(PromptTemplate, UnterminatedIsRejected) { EXPECT_THROW(PromptTemplate("oops {{a"), TemplateError); }

TEST(PromptTemplate, BuiltinsCarryTheirPlaceholders) {
  EXPECT_TRUE(PromptTemplate::builtin("object_instructions").has_placeholder("sentence"));
  EXPECT_TRUE(PromptTemplate::builtin("answer").has_placeholder("instruction"));
  EXPECT_TRUE(PromptTemplate::builtin("final_caption").has_placeholder("c_p"));
  EXPECT_THROW(PromptTemplate::builtin("nope"), std::out_of_range);
}
