#include "dyntok/token.hpp"

#include <unordered_set>

#include "dyntok/error.hpp"

namespace dyntok {

std::vector<std::string> TokenSequence::words() const {
  std::vector<std::string> out;
  for (const auto& tok : tokens) {
    if (tok.word_start || out.empty()) {
      out.push_back(tok.text);
    } else {
      out.back() += tok.text;
    }
  }
  return out;
}

void TokenSequence::validate() const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].text.empty()) {
      throw invariant_violation(sample_id, "token " + std::to_string(i) + " has empty text");
    }
  }
  if (!tokens.empty() && !tokens.front().word_start) {
    throw invariant_violation(sample_id, "first token must have word_start=true");
  }
}

std::size_t Batch::total_tokens() const noexcept {
  std::size_t n = 0;
  for (const auto& seq : sequences) n += seq.size();
  return n;
}

void Batch::validate() const {
  std::unordered_set<std::string_view> seen;
  for (const auto& seq : sequences) {
    seq.validate();
    if (!seen.insert(seq.sample_id).second) {
      throw invariant_violation(seq.sample_id, "duplicate sample_id in batch");
    }
  }
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::optional<std::vector<MergeRule>> merges)
    : merges_(std::move(merges)) {
  tokens_.reserve(tokens.size());
  for (auto& t : tokens) {
    if (index_.contains(t)) {
      throw Error(ErrorCode::InvariantViolation, "duplicate vocabulary token '" + t + "'");
    }
    index_.emplace(t, tokens_.size());
    tokens_.push_back(std::move(t));
  }
  if (merges_) {
    for (const auto& rule : *merges_) {
      if (rule.left.empty() || rule.right.empty()) {
        throw Error(ErrorCode::InvariantViolation, "merge rule with empty operand");
      }
      if (!contains(rule.product())) {
        throw Error(ErrorCode::InvariantViolation,
                    "merge product '" + rule.product() + "' is not a vocabulary token");
      }
    }
  }
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.find(token) != index_.end();
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::add(std::string token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const std::size_t row = tokens_.size();
  index_.emplace(token, row);
  tokens_.push_back(std::move(token));
  return row;
}

}  // namespace dyntok
