#include "dyntok/bpe.hpp"

#include <algorithm>
#include <limits>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "dyntok/corpus.hpp"
#include "dyntok/error.hpp"
#include "dyntok/io.hpp"
#include "dyntok/string_hash.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

BpeModel::BpeModel(std::vector<std::string> alphabet, std::vector<MergeRule> merges)
    : alphabet_(std::move(alphabet)), merges_(std::move(merges)) {
  StringSet known;
  for (const auto& ch : alphabet_) {
    if (ch.empty() || !known.insert(ch).second) {
      throw Error(ErrorCode::InvariantViolation, "alphabet entries must be unique and non-empty");
    }
    tokens_.push_back(ch);
  }
  for (const auto& rule : merges_) {
    if (!known.contains(rule.left) || !known.contains(rule.right)) {
      throw Error(ErrorCode::InvariantViolation,
                  "merge (" + rule.left + ", " + rule.right + ") uses an operand not produced earlier");
    }
    if (known.insert(rule.product()).second) tokens_.push_back(rule.product());
  }
}

namespace {

struct PairStat {
  std::size_t count = 0;
  std::size_t first = std::numeric_limits<std::size_t>::max();
};

using PairTable = std::unordered_map<std::uint64_t, PairStat>;

std::uint64_t pack(std::uint32_t l, std::uint32_t r) { return (static_cast<std::uint64_t>(l) << 32) | r; }

struct Word {
  std::vector<std::uint32_t> ids;
  std::size_t count = 0;
  // Ordinal of this word's first pair position in corpus order.
  std::size_t base = 0;
};

void count_range(const std::vector<Word>& words, std::size_t begin, std::size_t end, PairTable& out) {
  for (std::size_t w = begin; w < end; ++w) {
    const auto& word = words[w];
    for (std::size_t j = 0; j + 1 < word.ids.size(); ++j) {
      auto& st = out[pack(word.ids[j], word.ids[j + 1])];
      st.count += word.count;
      st.first = std::min(st.first, word.base + j);
    }
  }
}

PairTable count_pairs(const std::vector<Word>& words, std::size_t shards) {
  shards = std::max<std::size_t>(1, std::min(shards, words.size()));
  std::vector<PairTable> partial(shards);
  const std::size_t chunk = (words.size() + shards - 1) / std::max<std::size_t>(shards, 1);
  if (shards == 1) {
    count_range(words, 0, words.size(), partial[0]);
    return std::move(partial[0]);
  }
  std::vector<std::thread> workers;
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t b = std::min(words.size(), s * chunk);
    const std::size_t e = std::min(words.size(), b + chunk);
    workers.emplace_back(count_range, std::cref(words), b, e, std::ref(partial[s]));
  }
  for (auto& t : workers) t.join();
  PairTable total = std::move(partial[0]);
  for (std::size_t s = 1; s < shards; ++s) {
    for (const auto& [key, st] : partial[s]) {
      auto& dst = total[key];
      dst.count += st.count;
      dst.first = std::min(dst.first, st.first);
    }
  }
  return total;
}

}  // namespace

BpeModel train_bpe(std::span<const std::string> corpus, const BpeTrainOptions& options) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "BPE training needs at least one text");
  if (options.min_pair_freq == 0) throw Error(ErrorCode::DomainError, "min_pair_freq must be positive");

  std::vector<std::string> texts;
  StringMap<std::uint32_t> ids;
  auto intern = [&](std::string s) {
    auto [it, inserted] = ids.try_emplace(s, static_cast<std::uint32_t>(texts.size()));
    if (inserted) texts.push_back(std::move(s));
    return it->second;
  };

  std::vector<std::string> alphabet;
  std::vector<Word> words;
  StringMap<std::size_t> word_index;
  bool any_word = false;
  for (const auto& text : corpus) {
    for (auto& w : pre_tokenize(text)) {
      any_word = true;
      auto [it, inserted] = word_index.try_emplace(w, words.size());
      if (!inserted) {
        ++words[it->second].count;
        continue;
      }
      Word word;
      word.count = 1;
      for (auto& ch : utf8::split_chars(w)) {
        const bool fresh = !ids.contains(ch);
        const auto id = intern(ch);
        if (fresh) alphabet.push_back(texts[id]);
        word.ids.push_back(id);
      }
      words.push_back(std::move(word));
    }
  }
  if (!any_word) throw Error(ErrorCode::EmptyCorpus, "corpus contains no words");

  std::size_t ordinal = 0;
  for (auto& w : words) {
    w.base = ordinal;
    ordinal += w.ids.size();
  }

  StringSet vocab(alphabet.begin(), alphabet.end());
  std::vector<MergeRule> merges;
  while (vocab.size() < options.target_size) {
    const PairTable stats = count_pairs(words, options.shards);
    std::uint64_t best_key = 0;
    PairStat best{0, std::numeric_limits<std::size_t>::max()};
    for (const auto& [key, st] : stats) {
      if (st.count > best.count || (st.count == best.count && st.first < best.first)) {
        best = st;
        best_key = key;
      }
    }
    if (best.count == 0 || best.count < options.min_pair_freq) break;

    const auto left = static_cast<std::uint32_t>(best_key >> 32);
    const auto right = static_cast<std::uint32_t>(best_key & 0xffffffffu);
    MergeRule rule{texts[left], texts[right]};
    const auto merged = intern(rule.product());
    vocab.insert(rule.product());
    merges.push_back(std::move(rule));

    for (auto& w : words) {
      std::size_t out = 0;
      for (std::size_t j = 0; j < w.ids.size(); ++j, ++out) {
        if (j + 1 < w.ids.size() && w.ids[j] == left && w.ids[j + 1] == right) {
          w.ids[out] = merged;
          ++j;
        } else {
          w.ids[out] = w.ids[j];
        }
      }
      w.ids.resize(out);
    }
  }
  return BpeModel(std::move(alphabet), std::move(merges));
}

Vocabulary union_vocab(const Vocabulary& v_init, const BpeModel& v_new) {
  Vocabulary out(v_init.tokens());
  for (const auto& t : v_new.tokens()) out.add(t);
  return out;
}

BpeModel concat_merge_tables(const BpeModel& t1, const BpeModel& t2) {
  std::vector<std::string> alphabet = t1.alphabet();
  StringSet seen(alphabet.begin(), alphabet.end());
  for (const auto& ch : t2.alphabet()) {
    if (seen.insert(ch).second) alphabet.push_back(ch);
  }
  std::vector<MergeRule> merges;
  StringSet seen_rules;
  for (const auto* table : {&t1, &t2}) {
    for (const auto& rule : table->merges()) {
      // Operands are non-empty and contain no NUL in practice; the joined key
      // only needs to be unique per rule.
      std::string key = rule.left;
      key.push_back('\0');
      key += rule.right;
      if (seen_rules.insert(std::move(key)).second) merges.push_back(rule);
    }
  }
  return BpeModel(std::move(alphabet), std::move(merges));
}

std::vector<std::string> find_unreachable_tokens(const BpeModel& model) {
  if (model.merges().empty()) return {};
  const BpeTokenizer tokenizer(model.to_vocabulary());
  std::vector<std::string> out;
  for (const auto& token : model.tokens()) {
    const auto pieces = tokenizer.tokenize_word(token);
    if (pieces.size() != 1 || pieces.front() != token) out.push_back(token);
  }
  return out;
}

BpeModel parse_bpe_model(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::FormatError, std::string("BPE model JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("alphabet") || !doc["alphabet"].is_array()) {
    throw Error(ErrorCode::FormatError, "BPE model JSON needs an \"alphabet\" array");
  }
  std::vector<std::string> alphabet;
  for (const auto& ch : doc["alphabet"]) {
    if (!ch.is_string()) throw Error(ErrorCode::FormatError, "alphabet entries must be strings");
    alphabet.push_back(ch.get<std::string>());
  }
  std::vector<MergeRule> merges;
  if (doc.contains("merges")) {
    for (const auto& m : doc["merges"]) {
      if (!m.is_array() || m.size() != 2 || !m[0].is_string() || !m[1].is_string()) {
        throw Error(ErrorCode::FormatError, "merges must be [left, right] string pairs");
      }
      merges.push_back({m[0].get<std::string>(), m[1].get<std::string>()});
    }
  }
  return BpeModel(std::move(alphabet), std::move(merges));
}

BpeModel read_bpe_model(const std::string& path) { return parse_bpe_model(read_file(path)); }

std::string format_bpe_model(const BpeModel& model) {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : model.merges()) merges.push_back({m.left, m.right});
  nlohmann::json doc = {{"alphabet", model.alphabet()}, {"merges", std::move(merges)}};
  return doc.dump() + "\n";
}

}  // namespace dyntok
