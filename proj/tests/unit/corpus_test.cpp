#include <cgnmt/corpus.hpp>
#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "../common/support.hpp"

namespace cgnmt {
namespace {

Tokens words(std::string_view line) { return tokenize(line); }

TEST(Vocabulary, ReservedIdsFixed) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.token(kUnk), "<unk>");
  EXPECT_EQ(v.token(kBos), "<s>");
  EXPECT_EQ(v.token(kEos), "</s>");
  EXPECT_EQ(v.id("nothing"), kUnk);
  EXPECT_THROW(v.token(7), InputError);
}

TEST(BuildVocabulary, FrequencyCut) {
  const std::vector<Tokens> corpus = {words("a a b")};
  const Vocabulary v = build_vocabulary(corpus, 4);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.id("a"), kFirstContentId);
  EXPECT_EQ(v.id("b"), kUnk);
}

TEST(BuildVocabulary, AllUniqueTokensKept) {
  const std::vector<Tokens> corpus = {words("p q r"), words("s t")};
  const Vocabulary v = build_vocabulary(corpus, 100);
  EXPECT_EQ(v.size(), 8u);
  for (const char* w : {"p", "q", "r", "s", "t"}) EXPECT_TRUE(v.contains(w)) << w;
}

TEST(BuildVocabulary, TiesGoToFirstOccurrence) {
  const std::vector<Tokens> corpus = {words("x y y x")};
  const Vocabulary v = build_vocabulary(corpus, 4);
  EXPECT_TRUE(v.contains("x"));
  EXPECT_FALSE(v.contains("y"));
  const Vocabulary both = build_vocabulary(corpus, 5);
  EXPECT_EQ(both.id("x"), 3);
  EXPECT_EQ(both.id("y"), 4);
}

TEST(BuildVocabulary, EmptyInputGivesReservedOnly) {
  const Vocabulary v = build_vocabulary({}, 10);
  EXPECT_EQ(v.size(), 3u);
}

TEST(BuildVocabulary, TooSmallLimitRejected) {
  EXPECT_THROW(build_vocabulary({}, 3), ConfigError);
}

TEST(Numberize, EmptyStaysEmpty) {
  EXPECT_TRUE(numberize(Tokens{}, Vocabulary{}).empty());
}

TEST(Numberize, RoundTripInVocabulary) {
  const std::vector<Tokens> corpus = {words("the cat sat on the mat")};
  const Vocabulary v = build_vocabulary(corpus, 50);
  const Sentence ids = numberize(corpus[0], v);
  EXPECT_EQ(denumberize(ids, v), corpus[0]);
}

TEST(Numberize, OneUnknownAtItsPosition) {
  const std::vector<Tokens> corpus = {words("a b c")};
  const Vocabulary v = build_vocabulary(corpus, 50);
  const Sentence ids = numberize(words("a zz c"), v);
  ASSERT_EQ(ids.size(), 3u);
  EXPECT_NE(ids[0], kUnk);
  EXPECT_EQ(ids[1], kUnk);
  EXPECT_NE(ids[2], kUnk);
}

TEST(Numberize, IdsStayInRange) {
  ToyTaskSpec spec;
  spec.kind = TaskKind::copy;
  const auto voc = toy_vocabularies(spec);
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Tokens t;
    for (int k = 0; k < 10; ++k) t.push_back("w" + std::to_string(rng.below(80)));
    for (TokenId id : numberize(t, voc.source)) {
      EXPECT_GE(id, 0);
      EXPECT_LT(id, static_cast<TokenId>(voc.source.size()));
    }
  }
}

TEST(VocabularyFile, RoundTrip) {
  test::TempDir dir("vocab");
  const std::vector<Tokens> corpus = {words("d e f g")};
  const Vocabulary v = build_vocabulary(corpus, 10);
  v.save(dir / "v.txt");
  EXPECT_EQ(Vocabulary::load(dir / "v.txt"), v);
}

TEST(VocabularyFile, WrongHeaderRejected) {
  test::TempDir dir("vocab_bad");
  std::ofstream(dir / "v.txt") << "<s>\n<unk>\n</s>\nx\n";
  EXPECT_THROW(Vocabulary::load(dir / "v.txt"), FormatError);
}

TEST(Synthesize, CopyExample) {
  ToyTaskSpec spec;
  spec.kind = TaskKind::copy;
  for (const auto& p : synthesize_corpus(spec, 50)) {
    Sentence expected = p.source;
    expected.push_back(kEos);
    EXPECT_EQ(p.target, expected);
  }
}

TEST(Synthesize, ReverseExample) {
  ToyTaskSpec spec;
  spec.kind = TaskKind::reverse;
  for (const auto& p : synthesize_corpus(spec, 50)) {
    Sentence expected(p.source.rbegin(), p.source.rend());
    expected.push_back(kEos);
    EXPECT_EQ(p.target, expected);
  }
}

TEST(Synthesize, LexiconWithFullFunctionRate) {
  ToyTaskSpec spec;
  spec.function_rate = 1.0;
  spec.min_length = 1;
  spec.max_length = 1;
  for (const auto& p : synthesize_corpus(spec, 30)) {
    ASSERT_EQ(p.source.size(), 1u);
    const TokenId mapped = lexicon_map(spec, p.source[0]);
    const Sentence expected = {mapped, kFirstContentId + mapped % 4, kEos};
    EXPECT_EQ(p.target, expected);
  }
}

TEST(Synthesize, LexiconLengths) {
  for (double rate : {0.0, 1.0}) {
    ToyTaskSpec spec;
    spec.function_rate = rate;
    for (const auto& p : synthesize_corpus(spec, 200)) {
      const std::size_t per_word = rate == 0.0 ? 1 : 2;
      EXPECT_EQ(p.target.size(), per_word * p.source.size() + 1);
    }
  }
}

TEST(Synthesize, LexiconIsBijective) {
  ToyTaskSpec spec;
  for (int v : {1, 7, 13, 50, 64}) {
    spec.vocab_size = v;
    std::set<TokenId> images;
    for (int k = 0; k < v; ++k) {
      const TokenId t = lexicon_map(spec, kFirstContentId + k);
      EXPECT_GE(t, kFirstContentId + kFunctionTokenCount);
      EXPECT_LT(t, kFirstContentId + kFunctionTokenCount + v);
      images.insert(t);
    }
    EXPECT_EQ(images.size(), static_cast<std::size_t>(v));
  }
}

TEST(Synthesize, ContentNeverReserved) {
  for (auto kind : {TaskKind::copy, TaskKind::reverse, TaskKind::lexicon}) {
    ToyTaskSpec spec;
    spec.kind = kind;
    spec.function_rate = 0.5;
    const auto voc = toy_vocabularies(spec);
    for (const auto& p : synthesize_corpus(spec, 100)) {
      for (TokenId t : p.source) {
        EXPECT_GE(t, kFirstContentId);
        EXPECT_LT(t, static_cast<TokenId>(voc.source.size()));
      }
      for (std::size_t i = 0; i + 1 < p.target.size(); ++i) {
        EXPECT_GE(p.target[i], kFirstContentId);
        EXPECT_LT(p.target[i], static_cast<TokenId>(voc.target.size()));
      }
      EXPECT_EQ(p.target.back(), kEos);
      EXPECT_GE(static_cast<int>(p.source.size()), spec.min_length);
      EXPECT_LE(static_cast<int>(p.source.size()), spec.max_length);
    }
  }
}

TEST(Synthesize, SameSeedSameCorpus) {
  ToyTaskSpec spec;
  spec.function_rate = 0.5;
  const auto a = synthesize_corpus(spec, 300);
  const auto b = synthesize_corpus(spec, 300);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].source, b[i].source);
    EXPECT_EQ(a[i].target, b[i].target);
  }
  spec.seed = 2;
  const auto c = synthesize_corpus(spec, 300);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].source != c[i].source;
  EXPECT_TRUE(differs);
}

TEST(Synthesize, SplitsUseSeedOffsets) {
  ToyTaskSpec spec;
  spec.seed = 10;
  const auto splits = synthesize_splits(spec, 5, 5, 5);
  ToyTaskSpec shifted = spec;
  shifted.seed = 12;
  const auto test_split = synthesize_corpus(shifted, 5);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(splits.test[i].source, test_split[i].source);
}

TEST(Synthesize, InvalidSpecRejected) {
  ToyTaskSpec spec;
  spec.min_length = 0;
  EXPECT_THROW(synthesize_corpus(spec, 1), ConfigError);
  spec = {};
  spec.min_length = 6;
  spec.max_length = 5;
  EXPECT_THROW(synthesize_corpus(spec, 1), ConfigError);
  spec = {};
  spec.function_rate = 1.5;
  EXPECT_THROW(synthesize_corpus(spec, 1), ConfigError);
  EXPECT_THROW(synthesize_corpus(ToyTaskSpec{}, 0), ConfigError);
}

TEST(ValidatePair, Contract) {
  EXPECT_NO_THROW(validate_pair({{3}, {4, kEos}}));
  EXPECT_THROW(validate_pair({{}, {kEos}}), InputError);
  EXPECT_THROW(validate_pair({{3}, {4}}), InputError);
  EXPECT_THROW(validate_pair({{3}, {kEos, kEos}}), InputError);
}

TEST(ParallelFiles, RoundTrip) {
  test::TempDir dir("parallel");
  ToyTaskSpec spec;
  spec.function_rate = 0.3;
  const auto voc = toy_vocabularies(spec);
  const auto pairs = synthesize_corpus(spec, 20);
  write_parallel(dir / "a.src", dir / "a.tgt", pairs, voc.source, voc.target);
  const auto back = read_parallel(dir / "a.src", dir / "a.tgt", voc.source, voc.target);
  ASSERT_EQ(back.size(), pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(back[i].source, pairs[i].source);
    EXPECT_EQ(back[i].target, pairs[i].target);
  }
}

TEST(ParallelFiles, LineCountMismatchRejected) {
  test::TempDir dir("parallel_bad");
  std::ofstream(dir / "a.src") << "a b\nc\n";
  std::ofstream(dir / "a.tgt") << "x\n";
  EXPECT_THROW(read_parallel(dir / "a.src", dir / "a.tgt", Vocabulary{}, Vocabulary{}),
               FormatError);
}

TEST(Tokenize, CollapsesWhitespace) {
  const Tokens t = tokenize("  a\tbb   c \r");
  EXPECT_EQ(t, (Tokens{"a", "bb", "c"}));
  EXPECT_EQ(join_tokens(t), "a bb c");
}

}  // namespace
}  // namespace cgnmt
