#include "dyntok/merger.hpp"

#include <limits>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "dyntok/error.hpp"
#include "dyntok/string_hash.hpp"

namespace dyntok {
namespace {

struct PairStat {
  std::size_t count = 0;
  std::size_t first = 0;
};

std::uint64_t pack(std::uint32_t left, std::uint32_t right) {
  return (static_cast<std::uint64_t>(left) << 32) | right;
}

// Batch with token texts interned to integer ids.
class InternedBatch {
 public:
  explicit InternedBatch(const Batch& batch) {
    seqs_.reserve(batch.sequences.size());
    for (const auto& seq : batch.sequences) {
      Seq s;
      s.ids.reserve(seq.tokens.size());
      s.starts.reserve(seq.tokens.size());
      for (const auto& tok : seq.tokens) {
        s.ids.push_back(intern(tok.text));
        s.starts.push_back(tok.word_start);
      }
      total_ += s.ids.size();
      seqs_.push_back(std::move(s));
    }
  }

  std::size_t total() const noexcept { return total_; }

  std::unordered_map<std::uint64_t, PairStat> count_pairs() const {
    std::unordered_map<std::uint64_t, PairStat> stats;
    std::size_t ordinal = 0;
    for (const auto& s : seqs_) {
      for (std::size_t j = 0; j + 1 < s.ids.size(); ++j, ++ordinal) {
        if (s.starts[j + 1]) continue;
        auto [it, inserted] = stats.try_emplace(pack(s.ids[j], s.ids[j + 1]));
        if (inserted) it->second.first = ordinal;
        ++it->second.count;
      }
    }
    return stats;
  }

  // Returns false when no intra-word pair remains.
  bool merge_best(MergeRule& applied) {
    const auto stats = count_pairs();
    if (stats.empty()) return false;
    std::uint64_t best_key = 0;
    PairStat best{0, std::numeric_limits<std::size_t>::max()};
    for (const auto& [key, st] : stats) {
      if (st.count > best.count || (st.count == best.count && st.first < best.first)) {
        best = st;
        best_key = key;
      }
    }
    const auto left = static_cast<std::uint32_t>(best_key >> 32);
    const auto right = static_cast<std::uint32_t>(best_key & 0xffffffffu);
    applied = {texts_[left], texts_[right]};
    const std::uint32_t merged = intern(applied.left + applied.right);

    for (auto& s : seqs_) {
      std::size_t out = 0;
      for (std::size_t j = 0; j < s.ids.size(); ++j, ++out) {
        if (j + 1 < s.ids.size() && !s.starts[j + 1] && s.ids[j] == left && s.ids[j + 1] == right) {
          s.ids[out] = merged;
          s.starts[out] = s.starts[j];
          ++j;
          --total_;
        } else {
          s.ids[out] = s.ids[j];
          s.starts[out] = s.starts[j];
        }
      }
      s.ids.resize(out);
      s.starts.resize(out);
    }
    return true;
  }

  Batch to_batch(const Batch& like) const {
    Batch out;
    out.sequences.reserve(seqs_.size());
    for (std::size_t i = 0; i < seqs_.size(); ++i) {
      TokenSequence seq{like.sequences[i].sample_id, {}};
      seq.tokens.reserve(seqs_[i].ids.size());
      for (std::size_t j = 0; j < seqs_[i].ids.size(); ++j) {
        seq.tokens.push_back({texts_[seqs_[i].ids[j]], seqs_[i].starts[j] != 0});
      }
      out.sequences.push_back(std::move(seq));
    }
    return out;
  }

 private:
  struct Seq {
    std::vector<std::uint32_t> ids;
    std::vector<char> starts;
  };

  std::uint32_t intern(const std::string& text) {
    auto [it, inserted] = ids_.try_emplace(text, static_cast<std::uint32_t>(texts_.size()));
    if (inserted) texts_.push_back(text);
    return it->second;
  }

  std::vector<Seq> seqs_;
  std::vector<std::string> texts_;
  StringMap<std::uint32_t> ids_;
  std::size_t total_ = 0;
};

}  // namespace

PairFrequencies compute_pair_freqs(const Batch& batch) {
  PairFrequencies freqs;
  for (const auto& seq : batch.sequences) {
    for (std::size_t j = 0; j + 1 < seq.tokens.size(); ++j) {
      if (seq.tokens[j + 1].word_start) continue;
      ++freqs[{seq.tokens[j].text, seq.tokens[j + 1].text}];
    }
  }
  return freqs;
}

MergeRule most_frequent_pair(const PairFrequencies& freqs, const Batch& batch) {
  if (freqs.empty()) throw Error(ErrorCode::NoMergeablePair, "no adjacent intra-word pair to merge");
  std::size_t best_count = 0;
  for (const auto& [pair, count] : freqs) best_count = std::max(best_count, count);
  // Walk the batch in order; the first pair seen at the best count wins.
  for (const auto& seq : batch.sequences) {
    for (std::size_t j = 0; j + 1 < seq.tokens.size(); ++j) {
      if (seq.tokens[j + 1].word_start) continue;
      auto it = freqs.find({seq.tokens[j].text, seq.tokens[j + 1].text});
      if (it != freqs.end() && it->second == best_count) return {it->first.first, it->first.second};
    }
  }
  // Counts not drawn from this batch; fall back to the smallest key.
  for (const auto& [pair, count] : freqs) {
    if (count == best_count) return {pair.first, pair.second};
  }
  throw Error(ErrorCode::NoMergeablePair, "no adjacent intra-word pair to merge");
}

DynamicTokenization apply_dynamic_tokenization(const Batch& batch, std::size_t m) {
  InternedBatch state(batch);
  MergeTrace trace;
  trace.requested = m;
  trace.lengths.push_back(state.total());
  for (std::size_t i = 0; i < m; ++i) {
    MergeRule rule;
    if (!state.merge_best(rule)) {
      trace.truncated = true;
      break;
    }
    trace.rules.push_back(std::move(rule));
    trace.lengths.push_back(state.total());
  }
  return {state.to_batch(batch), std::move(trace)};
}

std::size_t compute_max_merges(const Batch& batch) {
  InternedBatch state(batch);
  std::size_t merges = 0;
  MergeRule rule;
  while (state.merge_best(rule)) ++merges;
  return merges;
}

double reduction_percentage(std::size_t len_init, std::size_t len_m, std::size_t len_word) {
  if (!(len_word <= len_m && len_m <= len_init)) {
    throw Error(ErrorCode::DomainError, "reduction percentage requires len_word <= len_m <= len_init");
  }
  if (len_init == len_word) return 100.0;
  return 100.0 * static_cast<double>(len_init - len_m) / static_cast<double>(len_init - len_word);
}

std::size_t solve_merges_from_trace(const MergeTrace& full_trace, double percent) {
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw Error(ErrorCode::DomainError, "target reduction must lie in [0, 100]");
  }
  const auto& lengths = full_trace.lengths;
  const std::size_t len_init = lengths.front();
  const std::size_t len_word = lengths.back();
  for (std::size_t m = 0; m < lengths.size(); ++m) {
    if (reduction_percentage(len_init, lengths[m], len_word) >= percent) return m;
  }
  return lengths.size() - 1;
}

std::size_t solve_merges_for_reduction(const Batch& batch, double percent) {
  const auto full = apply_dynamic_tokenization(batch, std::numeric_limits<std::size_t>::max());
  return solve_merges_from_trace(full.trace, percent);
}

std::size_t sample_merge_count(std::size_t m_max, std::uint64_t seed) {
  // mt19937_64 output is fully specified by the standard; the bounded draw
  // uses rejection so the result does not depend on the library's
  // uniform_int_distribution.
  std::mt19937_64 gen(seed);
  const std::uint64_t range = static_cast<std::uint64_t>(m_max) + 1;
  if (range == 0) return static_cast<std::size_t>(gen());
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              (std::numeric_limits<std::uint64_t>::max() % range + 1) % range;
  std::uint64_t draw = gen();
  while (draw > limit) draw = gen();
  return static_cast<std::size_t>(draw % range);
}

ScoringPlan build_scoring_plan(const TokenSequence& prefix, const TokenSequence& suffix, std::size_t m) {
  prefix.validate();
  suffix.validate();
  Batch single{{prefix}};
  auto compressed = apply_dynamic_tokenization(single, m);
  ScoringPlan plan;
  plan.prefix_tokens = std::move(compressed.batch.sequences.front());
  plan.suffix_tokens = suffix;
  plan.boundary_index = plan.prefix_tokens.size();
  return plan;
}

std::string trace_to_json(const MergeTrace& trace) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : trace.rules) rules.push_back({r.left, r.right});
  nlohmann::json doc = {{"requested", trace.requested},
                        {"applied", trace.rules.size()},
                        {"truncated", trace.truncated},
                        {"rules", std::move(rules)},
                        {"lengths", trace.lengths}};
  return doc.dump();
}

}  // namespace dyntok
