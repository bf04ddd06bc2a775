#include "dyntok/analytics.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "dyntok/error.hpp"
#include "dyntok/json_util.hpp"
#include "dyntok/merger.hpp"
#include "dyntok/string_hash.hpp"

namespace dyntok {

void ModelConfig::validate() const {
  if (!(n_params > 0 && d_model > 0 && n_layers > 0)) {
    throw Error(ErrorCode::DomainError, "model config values must be positive");
  }
}

ModelConfig mistral_7b_preset() { return {7.24e9, 4096.0, 32.0}; }

ModelConfig model_preset(std::string_view name) {
  if (name == "mistral-7b") return mistral_7b_preset();
  throw Error(ErrorCode::Usage, "unknown model preset '" + std::string(name) + "'");
}

namespace {

void check_same_samples(const Batch& a, const Batch& b, std::string_view what) {
  if (a.sequences.size() != b.sequences.size()) {
    throw Error(ErrorCode::SampleMismatch, std::string(what) + ": sample counts differ");
  }
  for (std::size_t i = 0; i < a.sequences.size(); ++i) {
    const auto& x = a.sequences[i];
    const auto& y = b.sequences[i];
    if (x.sample_id != y.sample_id || x.words() != y.words()) {
      throw Error(ErrorCode::SampleMismatch, std::string(what) + ": sample '" + x.sample_id + "' differs");
    }
  }
}

}  // namespace

LengthStats sequence_stats(const Batch& before, const Batch& after, const Batch& word_level,
                           std::string_view language) {
  check_same_samples(before, after, "after");
  check_same_samples(before, word_level, "word_level");

  LengthStats s;
  s.language = std::string(language);
  s.len_init = before.total_tokens();
  s.len_m = after.total_tokens();
  s.len_word = word_level.total_tokens();
  s.samples = before.sequences.size();
  s.reduction_pct = reduction_percentage(s.len_init, s.len_m, s.len_word);
  s.avg_tokens_per_sample = s.samples == 0 ? 0.0 : static_cast<double>(s.len_m) / static_cast<double>(s.samples);
  for (const auto& seq : after.sequences) s.sample_lengths.push_back(seq.size());

  // Walk both streams in lockstep by byte length to find each merged token's
  // base span.
  StringSet base_tokens;
  for (const auto& seq : before.sequences) {
    for (const auto& t : seq.tokens) base_tokens.insert(t.text);
  }
  StringMap<std::size_t> new_tokens;
  for (std::size_t i = 0; i < after.sequences.size(); ++i) {
    const auto& base = before.sequences[i].tokens;
    std::size_t bi = 0;
    for (const auto& tok : after.sequences[i].tokens) {
      std::size_t covered = 0;
      std::size_t span = 0;
      while (covered < tok.text.size() && bi < base.size()) {
        covered += base[bi++].text.size();
        ++span;
      }
      if (!base_tokens.contains(tok.text)) new_tokens.try_emplace(tok.text, span);
    }
  }
  s.unique_new_tokens = new_tokens.size();
  if (!new_tokens.empty()) {
    double total = 0.0;
    for (const auto& [text, span] : new_tokens) total += static_cast<double>(span);
    s.avg_decomposition_len = total / static_cast<double>(new_tokens.size());
  }
  return s;
}

double estimate_model_flops(double seq_len, const ModelConfig& cfg) {
  if (seq_len < 0) throw Error(ErrorCode::DomainError, "sequence length must be non-negative");
  return 2.0 * cfg.n_params * seq_len + 4.0 * seq_len * seq_len * cfg.d_model * cfg.n_layers;
}

double estimate_hypernet_flops(double n_unique_new_tokens, double avg_decomposition_len,
                               const HypernetCostConfig& cost) {
  if (n_unique_new_tokens < 0 || avg_decomposition_len < 0 || cost.flops_per_processed_token < 0) {
    throw Error(ErrorCode::DomainError, "hypernetwork cost inputs must be non-negative");
  }
  return n_unique_new_tokens * avg_decomposition_len * cost.flops_per_processed_token;
}

HypernetCostConfig calibrate_hypernet_cost(double target_flops, double n_unique_new_tokens,
                                           double avg_decomposition_len) {
  const double processed = n_unique_new_tokens * avg_decomposition_len;
  if (!(processed > 0) || target_flops < 0) {
    throw Error(ErrorCode::DomainError, "calibration needs a positive processed-token count");
  }
  return {target_flops / processed};
}

FlopsRow flops_row(const LengthStats& stats, const ModelConfig& cfg, const HypernetCostConfig& cost) {
  FlopsRow row;
  row.language = stats.language;
  row.reduction_pct = stats.reduction_pct;
  row.avg_seq_len = stats.avg_tokens_per_sample;
  if (!stats.sample_lengths.empty()) {
    double total = 0.0;
    for (auto len : stats.sample_lengths) total += estimate_model_flops(static_cast<double>(len), cfg);
    row.model_flops = total / static_cast<double>(stats.sample_lengths.size());
  } else {
    row.model_flops = estimate_model_flops(stats.avg_tokens_per_sample, cfg);
  }
  // Hypernetwork work is per batch; spread it over the samples.
  const double per_sample = stats.samples == 0 ? 1.0 : static_cast<double>(stats.samples);
  row.hn_flops =
      estimate_hypernet_flops(static_cast<double>(stats.unique_new_tokens), stats.avg_decomposition_len, cost) /
      per_sample;
  const double total = row.hn_flops + row.model_flops;
  row.hn_fraction_pct = total > 0 ? 100.0 * row.hn_flops / total : 0.0;
  return row;
}

FlopsReport flops_report(std::span<const LengthStats> stats, const ModelConfig& cfg, const HypernetCostConfig& cost) {
  cfg.validate();
  FlopsReport report;
  for (const auto& s : stats) report.rows.push_back(flops_row(s, cfg, cost));
  return report;
}

std::string FlopsReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"language", r.language},
                   {"reduction_pct", round_sig6(r.reduction_pct)},
                   {"model_flops", round_sig6(r.model_flops)},
                   {"hn_flops", round_sig6(r.hn_flops)},
                   {"hn_fraction_pct", round_sig6(r.hn_fraction_pct)},
                   {"avg_seq_len", round_sig6(r.avg_seq_len)}});
  }
  return arr.dump(2) + "\n";
}

std::string format_flops(double flops) {
  char buf[32];
  if (flops >= 1e12) {
    std::snprintf(buf, sizeof(buf), "%.1fT", flops / 1e12);
  } else if (flops >= 1e9) {
    std::snprintf(buf, sizeof(buf), "%.1fB", flops / 1e9);
  } else if (flops >= 1e6) {
    std::snprintf(buf, sizeof(buf), "%.1fM", flops / 1e6);
  } else {
    std::snprintf(buf, sizeof(buf), "%.0f", flops);
  }
  return buf;
}

std::string FlopsReport::to_text() const {
  // language -> rows in input order
  std::vector<std::string> order;
  std::map<std::string, std::vector<const FlopsRow*>> groups;
  for (const auto& r : rows) {
    if (!groups.contains(r.language)) order.push_back(r.language);
    groups[r.language].push_back(&r);
  }
  std::string out;
  char cell[64];
  auto line = [&](const char* label, const std::vector<const FlopsRow*>& g, auto&& fmt) {
    std::snprintf(cell, sizeof(cell), "%-6s%-18s", "", label);
    out += cell;
    for (const auto* r : g) {
      std::snprintf(cell, sizeof(cell), "%14s", fmt(*r).c_str());
      out += cell;
    }
    out += '\n';
  };
  for (const auto& lang : order) {
    const auto& g = groups[lang];
    std::snprintf(cell, sizeof(cell), "%-6s%-18s", lang.c_str(), "Reduction");
    out += cell;
    for (const auto* r : g) {
      std::snprintf(cell, sizeof(cell), "%13.0f%%", r->reduction_pct);
      out += cell;
    }
    out += '\n';
    line("Model", g, [](const FlopsRow& r) { return format_flops(r.model_flops); });
    line("Hypernet", g, [](const FlopsRow& r) { return format_flops(r.hn_flops); });
    line("HN FLOPs / total", g, [](const FlopsRow& r) {
      char b[32];
      std::snprintf(b, sizeof(b), "%.1f%%", r.hn_fraction_pct);
      return std::string(b);
    });
    line("Seq. Length", g, [](const FlopsRow& r) {
      char b[32];
      std::snprintf(b, sizeof(b), "%.1f", r.avg_seq_len);
      return std::string(b);
    });
  }
  return out;
}

std::string stats_to_json(const LengthStats& s) {
  nlohmann::json doc = {{"language", s.language},
                        {"len_init", s.len_init},
                        {"len_m", s.len_m},
                        {"len_word", s.len_word},
                        {"samples", s.samples},
                        {"reduction_pct", round_sig6(s.reduction_pct)},
                        {"avg_tokens_per_sample", round_sig6(s.avg_tokens_per_sample)},
                        {"unique_new_tokens", s.unique_new_tokens},
                        {"avg_decomposition_len", round_sig6(s.avg_decomposition_len)}};
  return doc.dump(2) + "\n";
}

}  // namespace dyntok
