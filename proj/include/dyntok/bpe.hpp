#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dyntok/token.hpp"

namespace dyntok {

// Alphabet plus an ordered merge table. Tokens are derived: the alphabet
// followed by each merge product in rule order, without duplicates.
class BpeModel {
 public:
  BpeModel() = default;
  BpeModel(std::vector<std::string> alphabet, std::vector<MergeRule> merges);

  const std::vector<std::string>& alphabet() const noexcept { return alphabet_; }
  const std::vector<MergeRule>& merges() const noexcept { return merges_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  Vocabulary to_vocabulary() const { return Vocabulary(tokens_, merges_); }

  bool operator==(const BpeModel& other) const {
    return alphabet_ == other.alphabet_ && merges_ == other.merges_;
  }

 private:
  std::vector<std::string> alphabet_;
  std::vector<MergeRule> merges_;
  std::vector<std::string> tokens_;
};

struct BpeTrainOptions {
  std::size_t target_size = 0;
  std::size_t min_pair_freq = 2;
  // Pair counting is split over this many shards; the result does not
  // depend on the value.
  std::size_t shards = 1;
};

// Classic word-frequency BPE: repeatedly merges the most frequent intra-word
// pair, ties to the pair occurring first in the corpus.
BpeModel train_bpe(std::span<const std::string> corpus, const BpeTrainOptions& options);

// v_init tokens in order, then v_new tokens not already present. No merges.
Vocabulary union_vocab(const Vocabulary& v_init, const BpeModel& v_new);

// t1 merges then t2 merges, dropping repeated rules. Alphabets are unioned.
BpeModel concat_merge_tables(const BpeModel& t1, const BpeModel& t2);

// Tokens the model's own merge table never produces for their surface string.
std::vector<std::string> find_unreachable_tokens(const BpeModel& model);

// {"alphabet": [...], "merges": [["l","r"], ...]}
BpeModel parse_bpe_model(std::string_view json_text);
BpeModel read_bpe_model(const std::string& path);
std::string format_bpe_model(const BpeModel& model);

}  // namespace dyntok
