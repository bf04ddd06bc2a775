#include "dyntok/prefix_trie.hpp"

#include <algorithm>

#include "dyntok/corpus.hpp"
#include "dyntok/error.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

namespace {
constexpr std::uint32_t kNone = 0xffffffffu;
}

PrefixTrie::PrefixTrie() : nodes_(1) {}

PrefixTrie::PrefixTrie(const Vocabulary& vocab) : PrefixTrie() {
  for (const auto& t : vocab.tokens()) insert(t);
}

std::uint32_t PrefixTrie::child(std::uint32_t node, unsigned char byte) const {
  const auto& kids = nodes_[node].children;
  auto it = std::lower_bound(kids.begin(), kids.end(), byte,
                             [](const auto& entry, unsigned char b) { return entry.first < b; });
  return (it != kids.end() && it->first == byte) ? it->second : kNone;
}

void PrefixTrie::insert(std::string_view token) {
  if (token.empty()) throw Error(ErrorCode::DomainError, "cannot insert an empty token into the trie");
  std::uint32_t node = 0;
  for (char c : token) {
    const auto byte = static_cast<unsigned char>(c);
    std::uint32_t next = child(node, byte);
    if (next == kNone) {
      next = static_cast<std::uint32_t>(nodes_.size());
      nodes_.emplace_back();
      auto& kids = nodes_[node].children;
      auto it = std::lower_bound(kids.begin(), kids.end(), byte,
                                 [](const auto& entry, unsigned char b) { return entry.first < b; });
      kids.insert(it, {byte, next});
    }
    node = next;
  }
  if (!nodes_[node].terminal) {
    nodes_[node].terminal = true;
    ++terminals_;
  }
}

std::size_t PrefixTrie::longest_prefix(std::string_view text) const {
  std::size_t best = 0;
  std::uint32_t node = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    node = child(node, static_cast<unsigned char>(text[i]));
    if (node == kNone) break;
    if (nodes_[node].terminal) best = i + 1;
  }
  return best;
}

bool PrefixTrie::contains(std::string_view token) const {
  std::uint32_t node = 0;
  for (char c : token) {
    node = child(node, static_cast<unsigned char>(c));
    if (node == kNone) return false;
  }
  return !token.empty() && nodes_[node].terminal;
}

std::vector<std::string> PrefixTrie::tokens() const {
  std::vector<std::string> out;
  std::string path;
  // Iterative DFS; each stack entry is (node, next child index).
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next == 0 && node != 0 && nodes_[node].terminal) out.push_back(path);
    if (next < nodes_[node].children.size()) {
      const auto [byte, kid] = nodes_[node].children[next++];
      path.push_back(static_cast<char>(byte));
      stack.emplace_back(kid, 0);
    } else {
      stack.pop_back();
      if (!path.empty()) path.pop_back();
    }
  }
  return out;
}

TokenSequence lp_tokenize(std::string_view text, const PrefixTrie& trie) {
  TokenSequence seq;
  std::size_t char_pos = 0;
  std::size_t byte_pos = 0;
  for (const auto& word : pre_tokenize(text)) {
    const std::size_t at = text.find(word, byte_pos);
    char_pos += utf8::count_chars(text.substr(byte_pos, at - byte_pos));
    byte_pos = at + word.size();

    std::string_view rest = word;
    bool first = true;
    while (!rest.empty()) {
      const std::size_t len = trie.longest_prefix(rest);
      if (len == 0) {
        const std::size_t clen = std::max<std::size_t>(1, utf8::char_length(rest));
        throw uncovered_character(rest.substr(0, clen), char_pos);
      }
      seq.tokens.push_back({std::string(rest.substr(0, len)), first});
      char_pos += utf8::count_chars(rest.substr(0, len));
      rest.remove_prefix(len);
      first = false;
    }
  }
  return seq;
}

}  // namespace dyntok
