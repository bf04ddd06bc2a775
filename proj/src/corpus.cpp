#include "dyntok/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dyntok/error.hpp"
#include "dyntok/io.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

using nlohmann::json;

std::vector<std::string> pre_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  std::size_t word_begin = std::string_view::npos;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t cp = utf8::decode(text, pos);
    if (utf8::is_space(cp)) {
      if (word_begin != std::string_view::npos) {
        out.emplace_back(text.substr(word_begin, start - word_begin));
        word_begin = std::string_view::npos;
      }
    } else if (word_begin == std::string_view::npos) {
      word_begin = start;
    }
  }
  if (word_begin != std::string_view::npos) out.emplace_back(text.substr(word_begin));
  return out;
}

std::size_t BpeTokenizer::PairHash::operator()(const std::pair<std::string, std::string>& p) const noexcept {
  const std::size_t h1 = std::hash<std::string>{}(p.first);
  const std::size_t h2 = std::hash<std::string>{}(p.second);
  return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
}

BpeTokenizer::BpeTokenizer(const Vocabulary& vocab) : vocab_(vocab) {
  if (!vocab_.has_merges()) {
    throw Error(ErrorCode::DomainError, "base tokenization requires a vocabulary with merges");
  }
  const auto& merges = *vocab_.merges();
  for (std::size_t r = 0; r < merges.size(); ++r) {
    ranks_[{merges[r].left, merges[r].right}].push_back(static_cast<std::int64_t>(r));
  }
}

std::vector<std::string> BpeTokenizer::tokenize_word(std::string_view word, std::size_t char_offset) const {
  std::vector<std::string> parts = utf8::split_chars(word);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!vocab_.contains(parts[i])) throw uncovered_character(parts[i], char_offset + i);
  }
  const auto& merges = *vocab_.merges();
  std::int64_t cursor = -1;
  std::pair<std::string, std::string> key;
  while (parts.size() > 1) {
    std::int64_t best = -1;
    for (std::size_t j = 0; j + 1 < parts.size(); ++j) {
      key.first = parts[j];
      key.second = parts[j + 1];
      auto it = ranks_.find(key);
      if (it == ranks_.end()) continue;
      auto r = std::upper_bound(it->second.begin(), it->second.end(), cursor);
      if (r != it->second.end() && (best < 0 || *r < best)) best = *r;
    }
    if (best < 0) break;
    const MergeRule& rule = merges[static_cast<std::size_t>(best)];
    std::vector<std::string> next;
    next.reserve(parts.size());
    for (std::size_t j = 0; j < parts.size(); ++j) {
      if (j + 1 < parts.size() && parts[j] == rule.left && parts[j + 1] == rule.right) {
        next.push_back(parts[j] + parts[j + 1]);
        ++j;
      } else {
        next.push_back(std::move(parts[j]));
      }
    }
    parts = std::move(next);
    cursor = best;
  }
  return parts;
}

TokenSequence BpeTokenizer::tokenize(std::string_view text, std::string sample_id) const {
  TokenSequence seq{std::move(sample_id), {}};
  std::size_t offset = 0;
  std::size_t pos = 0;
  // Character offsets for diagnostics are computed against the original text.
  for (const auto& word : pre_tokenize(text)) {
    const std::size_t at = text.find(word, pos);
    offset += utf8::count_chars(text.substr(pos, at - pos));
    pos = at + word.size();
    bool first = true;
    for (auto& piece : tokenize_word(word, offset)) {
      seq.tokens.push_back({std::move(piece), first});
      first = false;
    }
    offset += utf8::count_chars(word);
  }
  return seq;
}

TokenSequence base_tokenize(std::string_view text, const Vocabulary& model) {
  return BpeTokenizer(model).tokenize(text);
}

Batch parse_token_stream(std::string_view data) {
  Batch batch;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    std::string_view line = data.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw malformed_line(line_no, e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() || !obj.contains("tokens") ||
        !obj["tokens"].is_array()) {
      throw malformed_line(line_no, "expected {\"id\": string, \"tokens\": array}");
    }
    TokenSequence seq;
    seq.sample_id = obj["id"].get<std::string>();
    for (const auto& t : obj["tokens"]) {
      if (!t.is_object() || !t.contains("t") || !t["t"].is_string() || !t.contains("w") || !t["w"].is_boolean()) {
        throw malformed_line(line_no, "token entries must be {\"t\": string, \"w\": bool}");
      }
      seq.tokens.push_back({t["t"].get<std::string>(), t["w"].get<bool>()});
    }
    try {
      seq.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::InvariantViolation, std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
    batch.sequences.push_back(std::move(seq));
  }
  try {
    batch.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvariantViolation, e.what());
  }
  return batch;
}

Batch read_token_stream(const std::string& path) { return parse_token_stream(read_file(path)); }

std::string format_token_stream(const Batch& batch) {
  std::string out;
  for (const auto& seq : batch.sequences) {
    json tokens = json::array();
    for (const auto& t : seq.tokens) tokens.push_back({{"t", t.text}, {"w", t.word_start}});
    json line = {{"id", seq.sample_id}, {"tokens", std::move(tokens)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

TokenSequence convert_marker_tokens(const TokenSequence& seq, std::string_view marker) {
  TokenSequence out{seq.sample_id, {}};
  bool pending_start = false;
  for (const auto& tok : seq.tokens) {
    std::string_view text = tok.text;
    bool starts = tok.word_start || pending_start;
    pending_start = false;
    if (!marker.empty() && text.starts_with(marker)) {
      text.remove_prefix(marker.size());
      starts = true;
    }
    if (text.empty()) {
      pending_start = true;
      continue;
    }
    if (out.tokens.empty()) starts = true;
    out.tokens.push_back({std::string(text), starts});
  }
  return out;
}

Vocabulary parse_vocabulary(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::FormatError, std::string("vocabulary JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("tokens") || !doc["tokens"].is_array()) {
    throw Error(ErrorCode::FormatError, "vocabulary JSON must be an object with a \"tokens\" array");
  }
  std::vector<std::string> tokens;
  for (const auto& t : doc["tokens"]) {
    if (!t.is_string()) throw Error(ErrorCode::FormatError, "vocabulary tokens must be strings");
    tokens.push_back(t.get<std::string>());
  }
  std::optional<std::vector<MergeRule>> merges;
  if (doc.contains("merges") && !doc["merges"].is_null()) {
    merges.emplace();
    for (const auto& m : doc["merges"]) {
      if (!m.is_array() || m.size() != 2 || !m[0].is_string() || !m[1].is_string()) {
        throw Error(ErrorCode::FormatError, "merges must be [left, right] string pairs");
      }
      merges->push_back({m[0].get<std::string>(), m[1].get<std::string>()});
    }
  }
  return Vocabulary(std::move(tokens), std::move(merges));
}

Vocabulary read_vocabulary(const std::string& path) { return parse_vocabulary(read_file(path)); }

std::string format_vocabulary(const Vocabulary& vocab) {
  json doc;
  doc["tokens"] = vocab.tokens();
  if (vocab.has_merges()) {
    json merges = json::array();
    for (const auto& m : *vocab.merges()) merges.push_back({m.left, m.right});
    doc["merges"] = std::move(merges);
  }
  return doc.dump() + "\n";
}

}  // namespace dyntok
