#include <gtest/gtest.h>

#include <random>
#include <set>

#include "dyntok/bpe.hpp"
#include "dyntok/corpus.hpp"
#include "dyntok/error.hpp"
#include "dyntok/prefix_trie.hpp"
#include "fixtures.hpp"

using namespace dyntok;
using dyntok::testing::conflict_tokenizer1;
using dyntok::testing::conflict_tokenizer2;
using dyntok::testing::texts;

TEST(TrainBpe, StopsWhenNoPairsRemain) {
  const std::vector<std::string> corpus{"ab ab ab"};
  const auto model = train_bpe(corpus, {.target_size = 4});
  EXPECT_EQ(model.alphabet(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(model.merges(), (std::vector<MergeRule>{{"a", "b"}}));
  EXPECT_EQ(model.tokens(), (std::vector<std::string>{"a", "b", "ab"}));
}

TEST(TrainBpe, TargetEqualToAlphabetMeansNoMerges) {
  const std::vector<std::string> corpus{"abc abc"};
  EXPECT_TRUE(train_bpe(corpus, {.target_size = 3}).merges().empty());
}

TEST(TrainBpe, OverlappingCountsPickAA) {
  const std::vector<std::string> corpus(3, "aaab");
  // oracle: (a,a) occurs at 2 positions per word * 3 = 6; (a,b) 3
  const auto model = train_bpe(corpus, {.target_size = 5, .min_pair_freq = 2});
  ASSERT_FALSE(model.merges().empty());
  EXPECT_EQ(model.merges().front(), (MergeRule{"a", "a"}));
}

TEST(TrainBpe, MinPairFreqStopsTraining) {
  const std::vector<std::string> corpus{"ab cd"};
  EXPECT_TRUE(train_bpe(corpus, {.target_size = 10, .min_pair_freq = 2}).merges().empty());
  EXPECT_EQ(train_bpe(corpus, {.target_size = 10, .min_pair_freq = 1}).merges().size(), 2u);
}

TEST(TrainBpe, EmptyCorpus) {
  try {
    train_bpe(std::vector<std::string>{}, {.target_size = 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
}

TEST(TrainBpe, DeterministicAndShardInvariant) {
  std::mt19937 rng(9);
  std::vector<std::string> corpus;
  const std::string letters = "abcdeabcab";
  for (int line = 0; line < 200; ++line) {
    std::string text;
    for (int w = 0; w < 8; ++w) {
      const int len = 1 + static_cast<int>(rng() % 6);
      for (int i = 0; i < len; ++i) text.push_back(letters[rng() % letters.size()]);
      text.push_back(' ');
    }
    corpus.push_back(text);
  }
  const auto a = train_bpe(corpus, {.target_size = 60});
  const auto b = train_bpe(corpus, {.target_size = 60});
  const auto c = train_bpe(corpus, {.target_size = 60, .shards = 4});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_GT(a.merges().size(), 10u);
}

TEST(UnionVocab, Sizes) {
  Vocabulary init({"a", "b", "c"});
  BpeModel disjoint({"d", "e"}, {});
  EXPECT_EQ(union_vocab(init, disjoint).size(), 5u);
  BpeModel same({"a", "b", "c"}, {});
  const auto u = union_vocab(init, same);
  EXPECT_EQ(u.tokens(), init.tokens());
  EXPECT_FALSE(u.has_merges());
}

TEST(UnionVocab, MillionScaleSetArithmetic) {
  std::vector<std::string> init;
  for (int i = 0; i < 32000; ++i) init.push_back("i" + std::to_string(i));
  std::vector<std::string> fresh;
  for (int i = 0; i < 7000; ++i) fresh.push_back("i" + std::to_string(i));  // shared
  for (int i = 0; i < 968000; ++i) fresh.push_back("n" + std::to_string(i));
  ASSERT_EQ(fresh.size(), 975000u);
  const auto u = union_vocab(Vocabulary(init), BpeModel(fresh, {}));
  EXPECT_EQ(u.size(), 32000u + 975000u - 7000u);
  EXPECT_EQ(u.size(), 1000000u);
  EXPECT_EQ(u.tokens().front(), "i0");
  EXPECT_EQ(u.tokens()[32000], "n0");
}

TEST(ConcatMergeTables, ConflictExampleOrder) {
  const auto merged = concat_merge_tables(conflict_tokenizer1(), conflict_tokenizer2());
  EXPECT_EQ(merged.merges(),
            (std::vector<MergeRule>{{"a", "b"}, {"ab", "c"}, {"d", "e"}, {"a", "d"}, {"ad", "e"}, {"b", "c"}}));
  EXPECT_EQ(merged.tokens(),
            (std::vector<std::string>{"a", "b", "c", "d", "e", "ab", "abc", "de", "ad", "ade", "bc"}));
}

TEST(ConcatMergeTables, EmptyAndSelf) {
  const auto t1 = conflict_tokenizer1();
  EXPECT_EQ(concat_merge_tables(t1, BpeModel(t1.alphabet(), {})), t1);
  EXPECT_EQ(concat_merge_tables(t1, t1), t1);
}

TEST(FindUnreachable, ConflictExample) {
  const auto merged = concat_merge_tables(conflict_tokenizer1(), conflict_tokenizer2());
  EXPECT_EQ(find_unreachable_tokens(merged), (std::vector<std::string>{"ade"}));
  EXPECT_EQ(texts(base_tokenize("ade", merged.to_vocabulary())), (std::vector<std::string>{"a", "de"}));
  EXPECT_TRUE(find_unreachable_tokens(conflict_tokenizer2()).empty());
  EXPECT_TRUE(find_unreachable_tokens(BpeModel({"a", "b"}, {})).empty());
}

TEST(ConcatMergeTables, RefinesFirstTable) {
  const auto t1 = conflict_tokenizer1();
  const auto merged = concat_merge_tables(t1, conflict_tokenizer2());
  const auto v1 = t1.to_vocabulary();
  const auto vm = merged.to_vocabulary();
  std::mt19937 rng(4);
  const std::string alphabet = "abcde";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const int len = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
    EXPECT_LE(base_tokenize(s, vm).size(), base_tokenize(s, v1).size()) << s;
  }
}

TEST(BpeModelJson, RoundTrip) {
  const auto m = concat_merge_tables(conflict_tokenizer1(), conflict_tokenizer2());
  EXPECT_EQ(parse_bpe_model(format_bpe_model(m)), m);
  EXPECT_THROW(parse_bpe_model(R"({"alphabet": ["a"], "merges": [["a", "b"]]})"), Error);
}

namespace {
Vocabulary conflict_union() {
  return Vocabulary({"a", "b", "c", "d", "e", "ab", "abc", "de", "ad", "ade", "bc"});
}
}  // namespace

TEST(PrefixTrie, TerminalsMatchVocabulary) {
  const auto v = conflict_union();
  PrefixTrie trie(v);
  EXPECT_EQ(trie.size(), v.size());
  std::set<std::string> expected(v.tokens().begin(), v.tokens().end());
  const auto stored = trie.tokens();
  EXPECT_EQ(std::set<std::string>(stored.begin(), stored.end()), expected);
  EXPECT_TRUE(trie.contains("ade"));
  EXPECT_FALSE(trie.contains("ad e"));
  EXPECT_EQ(trie.longest_prefix("adebc"), 3u);
  EXPECT_EQ(trie.longest_prefix("z"), 0u);
}

TEST(LpTokenize, ConflictExamples) {
  PrefixTrie trie(conflict_union());
  EXPECT_EQ(texts(lp_tokenize("ade", trie)), (std::vector<std::string>{"ade"}));
  EXPECT_EQ(texts(lp_tokenize("e", trie)), (std::vector<std::string>{"e"}));
  EXPECT_EQ(texts(lp_tokenize("adebc", trie)), (std::vector<std::string>{"ade", "bc"}));
}

TEST(LpTokenize, PerWordFlagsAndErrors) {
  PrefixTrie trie(conflict_union());
  const auto seq = lp_tokenize("abc de", trie);
  EXPECT_EQ(seq.tokens, (std::vector<Token>{{"abc", true}, {"de", true}}));
  try {
    lp_tokenize("ab xa", trie);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UncoveredCharacter);
    EXPECT_NE(std::string(e.what()).find("position 3"), std::string::npos) << e.what();
  }
}

TEST(LpTokenize, LosslessAndGreedy) {
  const auto v = conflict_union();
  PrefixTrie trie(v);
  std::mt19937 rng(8);
  const std::string alphabet = "abcde ";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const int len = static_cast<int>(rng() % 14);
    for (int i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
    const auto seq = lp_tokenize(s, trie);
    ASSERT_EQ(seq.words(), pre_tokenize(s));
    // greedy: no longer vocabulary token prefixes the remaining word text
    for (const auto& word : pre_tokenize(s)) {
      std::string_view rest = word;
      while (!rest.empty()) {
        std::size_t best = 0;
        for (const auto& t : v.tokens()) {
          if (rest.starts_with(t)) best = std::max(best, t.size());
        }
        ASSERT_EQ(trie.longest_prefix(rest), best);
        rest.remove_prefix(best);
      }
    }
  }
}
