#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dialsum/preprocess.hpp"
#include "dialsum/rng.hpp"
#include "dialsum/tagger.hpp"
#include "dialsum/tagset.hpp"
#include "dialsum/vocabulary.hpp"

namespace dialsum {
namespace {

using Tokens = std::vector<std::string>;

TEST(TagSet, TwentyFiveUniqueSymbols) {
  EXPECT_EQ(kNumTags, 25);
  for (int i = 0; i < kNumTags; ++i) {
    EXPECT_EQ(tag_id(tag_symbol(i)), i);
  }
  EXPECT_FALSE(is_tag("IGNORE"));
  EXPECT_LT(kIgnoreLabel, 0);
}

TEST(LexiconRuleTagger, TagExamples) {
  const LexiconRuleTagger t;
  EXPECT_EQ(tag({":)"}, t).tags, Tokens{"E"});
  EXPECT_EQ(tag({"btw"}, t).tags, Tokens{"G"});
  EXPECT_EQ(tag({"and"}, t).tags, Tokens{"&"});
}

TEST(LexiconRuleTagger, PriorityCascade) {
  const LexiconRuleTagger t;
  const Tokens tokens = {"hey", "Tom", "i'm", "at", "http://a.io", "@ann", "#tbt", "10:30", "!!",
                         "the", "really", "walked", "famous", "dog", "up", "rt", "there", "<3"};
  const Tokens want = {"!", "^", "L", "P", "U", "@", "#", "$", ",", "D", "R", "V", "A", "N", "T", "~", "X", "E"};
  EXPECT_EQ(tag(tokens, t).tags, want);
}

TEST(LexiconRuleTagger, InitialCapitalIsNotProperNoun) {
  const LexiconRuleTagger t;
  EXPECT_EQ(tag({"Dog", "Tom"}, t).tags, (Tokens{"N", "^"}));
  // lexicon lookup is case-insensitive and wins over capitalization
  EXPECT_EQ(tag({"ok", "The"}, t).tags, (Tokens{"!", "D"}));
}

TEST(LexiconRuleTagger, CurlyApostropheNormalized) {
  const LexiconRuleTagger t;
  EXPECT_EQ(tag({"I\xE2\x80\x99m"}, t).tags, Tokens{"L"});
}

TEST(LexiconRuleTagger, ShortWordsSkipSuffixRules) {
  const LexiconRuleTagger t;
  EXPECT_EQ(tag({"bed", "fly"}, t).tags, (Tokens{"N", "N"}));
}

TEST(LexiconRuleTagger, BuiltinMatchesDataFiles) {
  const Lexicons files = load_lexicons(std::string(DIALSUM_DATA_DIR) + "/lexicons");
  EXPECT_EQ(files, builtin_lexicons());
}

TEST(LexiconRuleTagger, RejectsUnknownLexiconTag) {
  EXPECT_THROW(LexiconRuleTagger(Lexicons{{"Q", {"x"}}}), ArgumentError);
}

class BadTagger : public Tagger {
 public:
  std::vector<std::string> tag_tokens(const std::vector<std::string>& tokens) const override {
    std::vector<std::string> out(tokens.size(), "N");
    if (!out.empty()) out.back() = "not-a-tag";
    return out;
  }
};

class ShortTagger : public Tagger {
 public:
  std::vector<std::string> tag_tokens(const std::vector<std::string>&) const override { return {}; }
};

TEST(Tag, ErrorsCarryTokenIndex) {
  try {
    tag({"a", "b", "c"}, BadTagger());
    FAIL();
  } catch (const TaggingError& e) {
    EXPECT_EQ(e.token_index(), 2u);
  }
  EXPECT_THROW(tag({"a"}, ShortTagger()), TaggingError);
}

// Same length out as in, every tag valid, same answer twice.
TEST(TagProperty, LengthPreservingAndDeterministic) {
  const LexiconRuleTagger a, b;
  const Tokens pieces = {"Hi", "there", ":)", "i'm", "late", "again", "!!", "@tom", "walked", "#x",
                         "9", "and", "Paris", "quickly", "dangerous", "xD", "u", "?", "the", "photos"};
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (std::size_t i = 0, n = rng.below(12); i < n; ++i) text += pieces[rng.below(pieces.size())] + " ";
    const auto tokens = tokenize(text);
    const auto tagged = tag(tokens, a);
    ASSERT_EQ(tagged.tags.size(), tokens.size());
    for (const auto& s : tagged.tags) EXPECT_TRUE(is_tag(s)) << s;
    EXPECT_EQ(tagged.tags, b.tag_tokens(tokens));
  }
}

Corpus small_corpus(const std::vector<std::string>& utterances, const std::string& summary = "s") {
  Corpus c;
  Dialogue d;
  d.id = "d";
  const int spk = d.intern_speaker("ann");
  for (const auto& u : utterances) d.turns.push_back({spk, u, std::nullopt, std::nullopt});
  d.summary = summary;
  c.dialogues.push_back(d);
  return c;
}

TEST(BuildVocab, FrequencyOrderAndMinFreq) {
  Corpus c = small_corpus({"a a b"}, "a");
  tokenize_corpus(c);
  const Vocabulary v1 = build_vocab(c, 1);
  // counts: a=3, ann=1, b=1 -> a first, then ann and b lexicographically
  ASSERT_EQ(v1.size(), 9u);
  EXPECT_EQ(v1.token(6), "a");
  EXPECT_EQ(v1.token(7), "ann");
  EXPECT_EQ(v1.token(8), "b");
  const Vocabulary v2 = build_vocab(c, 2);
  EXPECT_EQ(v2.size(), 7u);
  EXPECT_EQ(v2.id("b"), Vocabulary::kUnk);
  EXPECT_EQ(v2.id("a"), 6);
}

TEST(BuildVocab, RequiresTokens) {
  const Corpus c = small_corpus({"a"});
  EXPECT_THROW(build_vocab(c, 1), PreconditionError);
}

TEST(Vocabulary, SpecialsAndRoundTrip) {
  Corpus c = small_corpus({"hello there :) hello"});
  tokenize_corpus(c);
  const Vocabulary v = build_vocab(c, 1);
  EXPECT_EQ(v.id("[PAD]"), 0);
  EXPECT_EQ(v.token(Vocabulary::kEou), "[EOU]");
  for (TokenId i = 0; i < static_cast<TokenId>(v.size()); ++i) EXPECT_EQ(v.id(v.token(i)), i);
  EXPECT_EQ(Vocabulary::from_tokens(v.tokens()).tokens(), v.tokens());
  EXPECT_EQ(v.decode({Vocabulary::kBos, v.id("hello"), Vocabulary::kEos}), Tokens{"hello"});
  EXPECT_THROW(Vocabulary::from_tokens({"[PAD]"}), DataError);
}

}  // namespace
}  // namespace dialsum
