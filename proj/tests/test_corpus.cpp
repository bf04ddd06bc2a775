#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "dyntok/corpus.hpp"
#include "dyntok/error.hpp"
#include "fixtures.hpp"

using namespace dyntok;
using dyntok::testing::texts;

namespace {

Vocabulary abc_model() { return Vocabulary({"a", "b", "c", "ab", "abc"}, std::vector<MergeRule>{{"a", "b"}, {"ab", "c"}}); }

Vocabulary conflict_merged_vocab() {
  return Vocabulary({"a", "b", "c", "d", "e", "ab", "abc", "de", "ad", "ade", "bc"},
                    std::vector<MergeRule>{{"a", "b"}, {"ab", "c"}, {"d", "e"}, {"a", "d"}, {"ad", "e"}, {"b", "c"}});
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Usage;
}

}  // namespace

TEST(PreTokenize, Empty) { EXPECT_TRUE(pre_tokenize("").empty()); }

TEST(PreTokenize, SplitsOnWhitespace) {
  EXPECT_EQ(pre_tokenize("A substantial improvement"),
            (std::vector<std::string>{"A", "substantial", "improvement"}));
}

TEST(PreTokenize, CollapsesWhitespaceRunsLikeRegexSplit) {
  const std::string text = "Uboreshaji  mkubwa";
  std::vector<std::string> oracle;
  const std::regex ws("\\S+");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), ws); it != std::sregex_iterator(); ++it) {
    oracle.push_back(it->str());
  }
  EXPECT_EQ(pre_tokenize(text), oracle);
  EXPECT_EQ(pre_tokenize(text), (std::vector<std::string>{"Uboreshaji", "mkubwa"}));
}

TEST(PreTokenize, JoinIsIdempotent) {
  std::mt19937 rng(3);
  const std::string alphabet = "ab \t\n";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    for (int i = 0; i < 20; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
    const auto words = pre_tokenize(text);
    std::string joined;
    for (std::size_t i = 0; i < words.size(); ++i) joined += (i ? " " : "") + words[i];
    EXPECT_EQ(pre_tokenize(joined), words);
  }
}

TEST(BaseTokenize, AppliesMergesInTableOrder) {
  const auto seq = base_tokenize("abc", abc_model());
  EXPECT_EQ(texts(seq), (std::vector<std::string>{"abc"}));
  EXPECT_TRUE(seq.tokens[0].word_start);
}

TEST(BaseTokenize, SingleCharacter) {
  Vocabulary v({"e"}, std::vector<MergeRule>{});
  EXPECT_EQ(texts(base_tokenize("e", v)), (std::vector<std::string>{"e"}));
}

TEST(BaseTokenize, ConcatenatedTableConflict) {
  EXPECT_EQ(texts(base_tokenize("ade", conflict_merged_vocab())), (std::vector<std::string>{"a", "de"}));
}

TEST(BaseTokenize, UncoveredCharacterReportsPosition) {
  try {
    base_tokenize("ab xz", abc_model());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UncoveredCharacter);
    EXPECT_NE(std::string(e.what()).find("'x' at position 3"), std::string::npos) << e.what();
  }
}

TEST(BaseTokenize, RequiresMerges) {
  EXPECT_EQ(code_of([] { base_tokenize("a", Vocabulary({"a"})); }), ErrorCode::DomainError);
}

TEST(BaseTokenize, UnicodeCharactersAreAtoms) {
  Vocabulary v({"ü", "b", "üb"}, std::vector<MergeRule>{{"ü", "b"}});
  EXPECT_EQ(texts(base_tokenize("übü", v)), (std::vector<std::string>{"üb", "ü"}));
}

TEST(BaseTokenize, LosslessAndWordBounded) {
  const auto model = conflict_merged_vocab();
  std::mt19937 rng(11);
  const std::string alphabet = "abcde ";
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const int len = static_cast<int>(rng() % 16);
    for (int i = 0; i < len; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
    const auto seq = base_tokenize(text, model);
    EXPECT_EQ(seq.words(), pre_tokenize(text));
    seq.validate();
  }
}

TEST(TokenStream, ParsesOneLine) {
  const auto batch = parse_token_stream(R"({"id": "s1", "tokens": [{"t": "im", "w": true}, {"t": "prove", "w": false}]})");
  ASSERT_EQ(batch.sequences.size(), 1u);
  EXPECT_EQ(batch.sequences[0].sample_id, "s1");
  EXPECT_EQ(batch.sequences[0].words(), (std::vector<std::string>{"improve"}));
}

TEST(TokenStream, FirstTokenMustStartWord) {
  EXPECT_EQ(code_of([] { parse_token_stream(R"({"id": "s1", "tokens": [{"t": "im", "w": false}]})"); }),
            ErrorCode::InvariantViolation);
}

TEST(TokenStream, EmptyFileIsEmptyBatch) { EXPECT_TRUE(parse_token_stream("").sequences.empty()); }

TEST(TokenStream, MalformedLineNumber) {
  try {
    parse_token_stream("{\"id\": \"a\", \"tokens\": []}\n{not json}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedLine);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(TokenStream, DuplicateIdsRejected) {
  EXPECT_EQ(code_of([] { parse_token_stream("{\"id\":\"a\",\"tokens\":[]}\n{\"id\":\"a\",\"tokens\":[]}\n"); }),
            ErrorCode::InvariantViolation);
}

TEST(TokenStream, FormatParseRoundTrip) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Batch b = dyntok::testing::random_batch(rng);
    EXPECT_EQ(parse_token_stream(format_token_stream(b)), b);
  }
}

TEST(TokenStream, MarkerConversion) {
  TokenSequence imported{"x", {{"▁im", true}, {"prove", false}, {"▁", false}, {"s", false}}};
  const auto converted = convert_marker_tokens(imported, "▁");
  EXPECT_EQ(converted.tokens, (std::vector<Token>{{"im", true}, {"prove", false}, {"s", true}}));
}

TEST(VocabularyJson, RoundTripAndValidation) {
  const auto v = conflict_merged_vocab();
  EXPECT_EQ(parse_vocabulary(format_vocabulary(v)), v);
  EXPECT_EQ(code_of([] { parse_vocabulary(R"({"tokens": ["a", "a"]})"); }), ErrorCode::InvariantViolation);
  EXPECT_EQ(code_of([] { parse_vocabulary(R"({"tokens": ["a"], "merges": [["a", "a"]]})"); }),
            ErrorCode::InvariantViolation);
}
