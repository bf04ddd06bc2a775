#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dyntok/bpe.hpp"
#include "dyntok/token.hpp"

namespace dyntok::testing {

// Words given as subword pieces; the first piece of each word starts it.
inline TokenSequence make_sequence(const std::string& id, const std::vector<std::vector<std::string>>& words) {
  TokenSequence seq{id, {}};
  for (const auto& w : words) {
    for (std::size_t i = 0; i < w.size(); ++i) seq.tokens.push_back({w[i], i == 0});
  }
  return seq;
}

inline std::vector<std::string> texts(const TokenSequence& seq) {
  std::vector<std::string> out;
  for (const auto& t : seq.tokens) out.push_back(t.text);
  return out;
}

// "A sub/stantial im/prove/ment fosters further im/prove/ment/s" (12 tokens)
inline Batch english_example() {
  return Batch{{make_sequence("en", {{"A"},
                                     {"sub", "stantial"},
                                     {"im", "prove", "ment"},
                                     {"fosters"},
                                     {"further"},
                                     {"im", "prove", "ment", "s"}})}};
}

// "U/bor/esh/aj/i mk/ub/wa una/ku/za u/bor/esh/aj/i za/idi" (18 tokens)
inline Batch swahili_example() {
  return Batch{{make_sequence("sw", {{"U", "bor", "esh", "aj", "i"},
                                     {"mk", "ub", "wa"},
                                     {"una", "ku", "za"},
                                     {"u", "bor", "esh", "aj", "i"},
                                     {"za", "idi"}})}};
}

inline BpeModel conflict_tokenizer1() {
  return BpeModel({"a", "b", "c", "d", "e"}, {{"a", "b"}, {"ab", "c"}, {"d", "e"}});
}

inline BpeModel conflict_tokenizer2() {
  return BpeModel({"a", "b", "c", "d", "e"}, {{"a", "d"}, {"ad", "e"}, {"b", "c"}});
}

// Random batch over a small alphabet so pairs repeat.
inline Batch random_batch(std::mt19937_64& rng, std::size_t max_seqs = 20, std::size_t max_tokens = 30) {
  static const std::vector<std::string> pieces = {"a", "b", "c", "ab", "ba", "x", "yz", "q"};
  std::uniform_int_distribution<std::size_t> n_seq(0, max_seqs);
  std::uniform_int_distribution<std::size_t> n_tok(0, max_tokens);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::bernoulli_distribution starts(0.3);
  Batch batch;
  const std::size_t seqs = n_seq(rng);
  for (std::size_t s = 0; s < seqs; ++s) {
    TokenSequence seq{"s" + std::to_string(s), {}};
    const std::size_t len = n_tok(rng);
    for (std::size_t t = 0; t < len; ++t) seq.tokens.push_back({pieces[pick(rng)], t == 0 || starts(rng)});
    batch.sequences.push_back(std::move(seq));
  }
  return batch;
}

}  // namespace dyntok::testing
