#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dyntok/token.hpp"

namespace dyntok {

// Maximal runs of non-whitespace characters, in order.
std::vector<std::string> pre_tokenize(std::string_view text);

// Applies an ordered merge table to pre-tokens. Rules run in table order,
// each one left-to-right over the word before the next rule is considered.
class BpeTokenizer {
 public:
  // `vocab` must carry merges.
  explicit BpeTokenizer(const Vocabulary& vocab);

  TokenSequence tokenize(std::string_view text, std::string sample_id = {}) const;

  // Tokenizes a single pre-token. `char_offset` is only used in diagnostics.
  std::vector<std::string> tokenize_word(std::string_view word, std::size_t char_offset = 0) const;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }

 private:
  struct PairHash {
    std::size_t operator()(const std::pair<std::string, std::string>& p) const noexcept;
  };

  Vocabulary vocab_;
  // Every rank at which a pair appears in the table, ascending.
  std::unordered_map<std::pair<std::string, std::string>, std::vector<std::int64_t>, PairHash> ranks_;
};

TokenSequence base_tokenize(std::string_view text, const Vocabulary& model);

// JSONL token stream: {"id": ..., "tokens": [{"t": ..., "w": ...}, ...]} per line.
Batch parse_token_stream(std::string_view data);
Batch read_token_stream(const std::string& path);
std::string format_token_stream(const Batch& batch);

// Converts marker-prefixed tokens (e.g. "▁word") into word_start flags with
// the marker stripped. Bare marker tokens are dropped and flag their successor.
TokenSequence convert_marker_tokens(const TokenSequence& seq, std::string_view marker);

// Vocabulary JSON: {"tokens": [...], "merges": [["l","r"], ...]} (merges optional).
Vocabulary parse_vocabulary(std::string_view json_text);
Vocabulary read_vocabulary(const std::string& path);
std::string format_vocabulary(const Vocabulary& vocab);

}  // namespace dyntok
