#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dyntok/token.hpp"

namespace dyntok {

struct LengthStats {
  std::string language;
  std::size_t len_init = 0;
  std::size_t len_word = 0;
  std::size_t len_m = 0;
  std::size_t samples = 0;
  double reduction_pct = 0.0;
  double avg_tokens_per_sample = 0.0;
  // Per-sample token counts at m; model FLOPs are averaged over these.
  std::vector<std::size_t> sample_lengths;
  // Distinct merged tokens absent from the base stream, and the mean number
  // of base tokens each one spans. Inputs to the hypernetwork cost model.
  std::size_t unique_new_tokens = 0;
  double avg_decomposition_len = 0.0;
};

struct ModelConfig {
  double n_params = 0.0;
  double d_model = 0.0;
  double n_layers = 0.0;

  void validate() const;
};

// 7.24B parameters, width 4096, 32 layers.
ModelConfig mistral_7b_preset();
// Looks up a named preset; throws Usage for unknown names.
ModelConfig model_preset(std::string_view name);

struct HypernetCostConfig {
  double flops_per_processed_token = 0.0;
};

// `before`, `after` and `word_level` must hold the same samples (ids and
// words) at m = 0, m and m_max. Throws SampleMismatch.
LengthStats sequence_stats(const Batch& before, const Batch& after, const Batch& word_level,
                           std::string_view language);

// 2 * n_params * L + 4 * L^2 * d_model * n_layers.
double estimate_model_flops(double seq_len, const ModelConfig& cfg);

double estimate_hypernet_flops(double n_unique_new_tokens, double avg_decomposition_len,
                               const HypernetCostConfig& cost);

// Per-token cost that makes the hypernetwork estimate hit `target_flops`.
HypernetCostConfig calibrate_hypernet_cost(double target_flops, double n_unique_new_tokens,
                                           double avg_decomposition_len);

struct FlopsRow {
  std::string language;
  double reduction_pct = 0.0;
  double avg_seq_len = 0.0;
  double model_flops = 0.0;
  double hn_flops = 0.0;
  double hn_fraction_pct = 0.0;
};

struct FlopsReport {
  std::vector<FlopsRow> rows;

  std::string to_json() const;
  // Aligned text table, one block per language.
  std::string to_text() const;
};

FlopsRow flops_row(const LengthStats& stats, const ModelConfig& cfg, const HypernetCostConfig& cost);
FlopsReport flops_report(std::span<const LengthStats> stats, const ModelConfig& cfg, const HypernetCostConfig& cost);

std::string stats_to_json(const LengthStats& stats);

// "10.1T", "169.3B" style rendering.
std::string format_flops(double flops);

}  // namespace dyntok
