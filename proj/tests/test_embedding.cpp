#include <gtest/gtest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <random>
#include <thread>

#include "dyntok/embedding_table.hpp"
#include "dyntok/error.hpp"
#include "dyntok/merger.hpp"
#include "dyntok/provider.hpp"
#include "fixtures.hpp"

using namespace dyntok;

namespace {

EmbeddingTable make_table(const std::vector<std::pair<std::string, std::vector<float>>>& rows) {
  EmbeddingTable t(rows.front().second.size());
  for (const auto& [tok, v] : rows) t.add_row(tok, v);
  return t;
}

// Conflict tokenizer 1 plus a few extra characters for the FVT checks.
Vocabulary tokenizer1_vocab() { return dyntok::testing::conflict_tokenizer1().to_vocabulary(); }

class CountingProvider final : public EmbeddingProvider {
 public:
  explicit CountingProvider(std::string id = "counting") : id_(std::move(id)) {}
  ProviderKind kind() const noexcept override { return ProviderKind::TableLookup; }
  const std::string& id() const noexcept override { return id_; }
  std::size_t dim() const noexcept override { return 2; }
  bool covers(std::string_view token) const override { return token != "bad"; }
  std::vector<float> embed(std::string_view token) const override {
    ++calls;
    if (token == "bad") throw Error(ErrorCode::MissingEmbedding, "bad token");
    return {static_cast<float>(token.size()), 1.0f};
  }
  mutable std::atomic<int> calls{0};

 private:
  std::string id_;
};

}  // namespace

TEST(Fvt, MeanOfTwoUnitVectors) {
  Vocabulary base({"a", "b", "ab"}, std::vector<MergeRule>{});
  const auto table = make_table({{"a", {1, 0}}, {"b", {0, 1}}});
  EXPECT_EQ(fvt_compose("ab", base, table), (std::vector<float>{0.5f, 0.5f}));
}

TEST(Fvt, SingleBaseTokenIsExactRow) {
  const auto table = make_table({{"a", {0.1f, 0.3f}}, {"b", {0, 1}}, {"c", {1, 1}}, {"d", {2, 2}}, {"e", {3, 3}},
                                 {"ab", {0.7f, -0.2f}}, {"abc", {1.5f, 2.5f}}, {"de", {4, 4}}});
  EXPECT_EQ(fvt_compose("ab", tokenizer1_vocab(), table), (std::vector<float>{0.7f, -0.2f}));
  EXPECT_EQ(fvt_compose("abc", tokenizer1_vocab(), table), (std::vector<float>{1.5f, 2.5f}));
}

TEST(Fvt, ComposesOverBaseDecomposition) {
  // Without rule (ab, c), "abc" decomposes as [ab, c].
  Vocabulary base({"a", "b", "c", "ab"}, std::vector<MergeRule>{{"a", "b"}});
  const auto table = make_table({{"a", {9, 9}}, {"b", {9, 9}}, {"c", {0, 4}}, {"ab", {2, 0}}});
  EXPECT_EQ(fvt_compose("abc", base, table), (std::vector<float>{1, 2}));
}

TEST(Fvt, Errors) {
  Vocabulary base({"a", "b", "ab"}, std::vector<MergeRule>{{"a", "b"}});
  const auto table = make_table({{"a", {1, 0}}, {"b", {0, 1}}});
  try {
    fvt_compose("ab", base, table);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingEmbedding);
  }
  try {
    fvt_compose("az", base, table);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UncoveredCharacter);
  }
}

TEST(Fvt, Linearity) {
  Vocabulary base({"a", "b", "ab"}, std::vector<MergeRule>{});
  const auto t1 = make_table({{"a", {1, -2}}, {"b", {3, 5}}});
  const auto t3 = make_table({{"a", {3, -6}}, {"b", {9, 15}}});
  const auto v1 = fvt_compose("ab", base, t1);
  const auto v3 = fvt_compose("ab", base, t3);
  for (std::size_t i = 0; i < v1.size(); ++i) EXPECT_FLOAT_EQ(v3[i], 3 * v1[i]);
}

TEST(LruCache, EvictsLeastRecentlyUsed) {
  LruCache<std::string, int> cache(2);
  std::vector<std::string> computed;
  auto compute = [&](const std::string& k) {
    computed.push_back(k);
    return static_cast<int>(k.size());
  };
  for (const char* k : {"a", "b", "a", "c", "b"}) cache.get_or_compute(k, compute);
  // oracle: after a,b,a the order is [a,b]; c evicts b; b then misses again
  EXPECT_EQ(computed, (std::vector<std::string>{"a", "b", "c", "b"}));
  EXPECT_FALSE(cache.contains("a"));
  EXPECT_EQ(cache.size(), 2u);
}

TEST(LruCache, CapacityOneRepeatedKey) {
  LruCache<std::string, int> cache(1);
  int calls = 0;
  for (int i = 0; i < 5; ++i) cache.get_or_compute("a", [&](const std::string&) { return ++calls; });
  EXPECT_EQ(calls, 1);
}

TEST(LruCache, DistinctKeysWithinCapacity) {
  LruCache<std::string, int> cache(3);
  int calls = 0;
  int evictions = 0;
  cache.set_observer([&](CacheEvent ev, const std::string&) { evictions += ev == CacheEvent::Evict; });
  for (const char* k : {"a", "b", "c"}) cache.get_or_compute(k, [&](const std::string&) { return ++calls; });
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(evictions, 0);
}

TEST(LruCache, FailedComputationNotCached) {
  LruCache<std::string, int> cache(2);
  EXPECT_THROW(cache.get_or_compute("x", [](const std::string&) -> int { throw Error(ErrorCode::Io, "boom"); }),
               Error);
  EXPECT_FALSE(cache.contains("x"));
  EXPECT_THROW((LruCache<int, int>(0)), Error);
}

TEST(LruCache, ConcurrentAccessKeepsInvariants) {
  LruCache<int, int> cache(8);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      std::mt19937 rng(t);
      for (int i = 0; i < 2000; ++i) {
        const int key = static_cast<int>(rng() % 32);
        EXPECT_EQ(cache.get_or_compute(key, [](int k) { return k * 3; }), key * 3);
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_LE(cache.size(), 8u);
}

TEST(EmbedBatchVocab, TableProvider) {
  auto table = std::make_shared<const EmbeddingTable>(make_table({{"a", {1, 1}}}));
  TableLookupProvider provider(table);
  EmbeddingCache cache(4);
  const std::vector<std::string> vocab{"a"};
  const auto out = embed_batch_vocab(vocab, provider, cache);
  ASSERT_EQ(out.rows(), 1u);
  EXPECT_EQ(std::vector<float>(out.row(0).begin(), out.row(0).end()), (std::vector<float>{1, 1}));
}

TEST(EmbedBatchVocab, CacheHitAcrossCalls) {
  CountingProvider provider;
  EmbeddingCache cache(1);
  const std::vector<std::string> vocab{"the"};
  embed_batch_vocab(vocab, provider, cache);
  embed_batch_vocab(vocab, provider, cache);
  EXPECT_EQ(provider.calls.load(), 1);
}

TEST(EmbedBatchVocab, ProviderIdentityIsPartOfKey) {
  CountingProvider p1("one");
  CountingProvider p2("two");
  EmbeddingCache cache(8);
  const std::vector<std::string> vocab{"tok"};
  embed_batch_vocab(vocab, p1, cache);
  embed_batch_vocab(vocab, p2, cache);
  EXPECT_EQ(p1.calls.load(), 1);
  EXPECT_EQ(p2.calls.load(), 1);
}

TEST(EmbedBatchVocab, AggregatesFailures) {
  CountingProvider provider;
  EmbeddingCache cache(8);
  const std::vector<std::string> vocab{"ok", "bad"};
  try {
    embed_batch_vocab(vocab, provider, cache);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingEmbedding);
    EXPECT_NE(std::string(e.what()).find("'bad'"), std::string::npos);
  }
}

TEST(EmbedBatchVocab, EnglishExampleWordLevelVocabulary) {
  const auto merged = apply_dynamic_tokenization(dyntok::testing::english_example(), 4).batch;
  std::vector<std::string> vocab;
  for (const auto& t : merged.sequences[0].tokens) {
    if (std::find(vocab.begin(), vocab.end(), t.text) == vocab.end()) vocab.push_back(t.text);
  }
  CountingProvider provider;
  EmbeddingCache cache(16);
  const auto table = embed_batch_vocab(vocab, provider, cache);
  EXPECT_EQ(table.vocabulary().tokens(), (std::vector<std::string>{"A", "substantial", "improvement", "fosters",
                                                                   "further", "improvements"}));
  EXPECT_EQ(provider.calls.load(), 6);
}

TEST(ExternalTableProvider, CoverageIsIngestedTokens) {
  auto table = std::make_shared<const EmbeddingTable>(make_table({{"uboreshaji", {1, 2}}}));
  ExternalTableProvider provider(table, "hn.bin");
  EXPECT_TRUE(provider.covers("uboreshaji"));
  EXPECT_FALSE(provider.covers("zaidi"));
  EXPECT_EQ(provider.covered_tokens(), (std::vector<std::string>{"uboreshaji"}));
  EXPECT_EQ(provider.id(), "external:hn.bin");
  EXPECT_THROW(provider.embed("zaidi"), Error);
}

TEST(TableSerialization, RoundTrip) {
  std::mt19937 rng(1);
  std::normal_distribution<float> n;
  EmbeddingTable t(4);
  for (int r = 0; r < 3; ++r) {
    std::vector<float> v(4);
    for (auto& x : v) x = n(rng);
    t.add_row("tok" + std::to_string(r), v);
  }
  const auto bytes = serialize_table(t);
  EXPECT_EQ(bytes.size(), 6u + 8u + 12u * 4u);
  const auto back = deserialize_table(bytes, Vocabulary(t.vocabulary().tokens()));
  EXPECT_EQ(serialize_table(back), bytes);
  EXPECT_EQ(back, t);
}

TEST(TableSerialization, TruncatedIsFormatError) {
  EmbeddingTable t(2);
  t.add_row("a", std::vector<float>{1, 2});
  auto bytes = serialize_table(t);
  bytes.pop_back();
  try {
    deserialize_table(bytes, Vocabulary({"a"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FormatError);
  }
  try {
    deserialize_table("DTEMB", Vocabulary({"a"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FormatError);
  }
}

TEST(TableSerialization, VocabularyLengthMismatch) {
  EmbeddingTable t(8);
  t.add_row("a", std::vector<float>(8, 1.0f));
  t.add_row("b", std::vector<float>(8, 2.0f));
  try {
    deserialize_table(serialize_table(t), Vocabulary({"a", "b", "c"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(TableSerialization, FilesRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "dyntok_table_test";
  std::filesystem::create_directories(dir);
  EmbeddingTable t(1);
  t.add_row("only", std::vector<float>{-0.0f});
  save_table(t, (dir / "t.bin").string(), (dir / "t.json").string());
  const auto back = load_table((dir / "t.bin").string(), (dir / "t.json").string());
  EXPECT_EQ(serialize_table(back), serialize_table(t));
  std::filesystem::remove_all(dir);
}

TEST(EmbeddingTable, RejectsBadRows) {
  EmbeddingTable t(2);
  EXPECT_THROW(t.add_row("a", std::vector<float>{1}), Error);
  EXPECT_THROW(t.add_row("n", std::vector<float>{1, std::nanf("")}), Error);
  t.add_row("a", std::vector<float>{1, 2});
  EXPECT_THROW(t.add_row("a", std::vector<float>{1, 2}), Error);
}
