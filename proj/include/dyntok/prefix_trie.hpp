#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dyntok/token.hpp"

namespace dyntok {

// Byte trie over vocabulary tokens. Tokens are valid UTF-8, so every terminal
// sits on a character boundary.
class PrefixTrie {
 public:
  PrefixTrie();
  explicit PrefixTrie(const Vocabulary& vocab);

  void insert(std::string_view token);

  // Byte length of the longest token that prefixes `text`; 0 if none.
  std::size_t longest_prefix(std::string_view text) const;

  bool contains(std::string_view token) const;
  std::size_t size() const noexcept { return terminals_; }

  // All stored tokens, in byte-lexicographic order.
  std::vector<std::string> tokens() const;

 private:
  struct Node {
    std::vector<std::pair<unsigned char, std::uint32_t>> children;  // sorted by byte
    bool terminal = false;
  };

  std::uint32_t child(std::uint32_t node, unsigned char byte) const;

  std::vector<Node> nodes_;
  std::size_t terminals_ = 0;
};

// Greedy longest-prefix segmentation, applied per pre-token.
TokenSequence lp_tokenize(std::string_view text, const PrefixTrie& trie);

}  // namespace dyntok
