#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dyntok/string_hash.hpp"

namespace dyntok {

// A token carries its surface text and whether it begins a pre-token (word).
struct Token {
  std::string text;
  bool word_start = false;

  bool operator==(const Token&) const = default;
};

struct TokenSequence {
  std::string sample_id;
  std::vector<Token> tokens;

  bool operator==(const TokenSequence&) const = default;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }

  // Reassembles the words by concatenating each word_start-delimited run.
  std::vector<std::string> words() const;

  // Throws InvariantViolation if a token is empty or the first token does not
  // start a word.
  void validate() const;
};

struct Batch {
  std::vector<TokenSequence> sequences;

  bool operator==(const Batch&) const = default;

  std::size_t total_tokens() const noexcept;

  // Validates each sequence plus sample_id uniqueness.
  void validate() const;
};

struct MergeRule {
  std::string left;
  std::string right;

  bool operator==(const MergeRule&) const = default;
  std::string product() const { return left + right; }
};

// Ordered set of unique token strings with optional ordered merge rules.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens,
                      std::optional<std::vector<MergeRule>> merges = std::nullopt);

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::optional<std::vector<MergeRule>>& merges() const noexcept { return merges_; }
  bool has_merges() const noexcept { return merges_.has_value(); }

  std::size_t size() const noexcept { return tokens_.size(); }
  bool contains(std::string_view token) const;
  std::optional<std::size_t> index_of(std::string_view token) const;

  // Appends if absent; returns the row index either way.
  std::size_t add(std::string token);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && merges_ == other.merges_;
  }

 private:
  std::vector<std::string> tokens_;
  StringMap<std::size_t> index_;
  std::optional<std::vector<MergeRule>> merges_;
};

}  // namespace dyntok
