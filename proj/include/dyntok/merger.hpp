#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dyntok/token.hpp"

namespace dyntok {

using PairKey = std::pair<std::string, std::string>;
using PairFrequencies = std::map<PairKey, std::size_t>;

struct MergeTrace {
  std::vector<MergeRule> rules;
  // Total batch token count after 0..rules.size() merges.
  std::vector<std::size_t> lengths;
  std::size_t requested = 0;
  // Set when `requested` exceeded the merges available before word level.
  bool truncated = false;
};

struct DynamicTokenization {
  Batch batch;
  MergeTrace trace;
};

struct ScoringPlan {
  TokenSequence prefix_tokens;
  TokenSequence suffix_tokens;
  std::size_t boundary_index = 0;
};

// Counts adjacent intra-word token pairs across the whole batch.
PairFrequencies compute_pair_freqs(const Batch& batch);

// Highest-count pair; ties go to the pair occurring first in batch order.
// Throws NoMergeablePair when `freqs` is empty.
MergeRule most_frequent_pair(const PairFrequencies& freqs, const Batch& batch);

// Performs min(m, m_max) batch-level merges, recounting pairs every step.
DynamicTokenization apply_dynamic_tokenization(const Batch& batch, std::size_t m);

// Merges needed until every word is a single token.
std::size_t compute_max_merges(const Batch& batch);

// 100 * (len_init - len_m) / (len_init - len_word); 100 when len_init == len_word.
double reduction_percentage(std::size_t len_init, std::size_t len_m, std::size_t len_word);

// Smallest m whose reduction percentage reaches `percent`.
std::size_t solve_merges_for_reduction(const Batch& batch, double percent);

// Same as above, reading lengths from an already computed full trace.
std::size_t solve_merges_from_trace(const MergeTrace& full_trace, double percent);

// Uniform draw from {0, ..., m_max}; identical across platforms for a seed.
std::size_t sample_merge_count(std::size_t m_max, std::uint64_t seed);

ScoringPlan build_scoring_plan(const TokenSequence& prefix, const TokenSequence& suffix, std::size_t m);

std::string trace_to_json(const MergeTrace& trace);

}  // namespace dyntok
