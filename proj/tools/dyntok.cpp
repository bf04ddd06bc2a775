// dyntok: batch pipelines over the dyntok library.
//
// Every subcommand prints one JSON document (the machine-readable result) on
// stdout and a one-line human summary on stderr. Files are written atomically.
// Exit codes: 0 ok, 2 usage, 3 data error, 4 internal.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dyntok/analytics.hpp"
#include "dyntok/bpe.hpp"
#include "dyntok/corpus.hpp"
#include "dyntok/embedding_table.hpp"
#include "dyntok/error.hpp"
#include "dyntok/io.hpp"
#include "dyntok/ivf.hpp"
#include "dyntok/json_util.hpp"
#include "dyntok/merger.hpp"
#include "dyntok/prefix_trie.hpp"
#include "dyntok/provider.hpp"

using json = nlohmann::json;
using namespace dyntok;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

[[noreturn]] void usage(const std::string& msg) { throw Error(ErrorCode::Usage, msg); }

// Explicit --seed wins, then DYNTOK_SEED; otherwise the caller decides.
std::optional<std::uint64_t> resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv("DYNTOK_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    usage(std::string("DYNTOK_SEED is not an unsigned integer: ") + env);
  }
  return std::nullopt;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& flag, const char* what) {
  auto seed = resolve_seed(flag);
  if (!seed) usage(std::string(what) + " needs --seed (or DYNTOK_SEED)");
  return *seed;
}

void emit(const json& result, const std::string& summary) {
  std::cout << result.dump(2) << '\n';
  std::cerr << summary << '\n';
}

double r6(double v) { return round_sig6(v); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Runs fn(i) for i in [0, n) on a small pool; results land at index i so
// output order never depends on completion order. The first failure (by
// index) is rethrown.
template <typename T, typename Fn>
std::vector<T> ordered_map(std::size_t n, std::size_t threads, Fn fn) {
  std::vector<std::optional<T>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

std::vector<Batch> split_batches(const Batch& all, std::size_t batch_size) {
  std::vector<Batch> out;
  for (std::size_t i = 0; i < all.sequences.size(); i += batch_size) {
    const auto end = std::min(all.sequences.size(), i + batch_size);
    out.push_back(Batch{{all.sequences.begin() + static_cast<std::ptrdiff_t>(i),
                         all.sequences.begin() + static_cast<std::ptrdiff_t>(end)}});
  }
  return out;
}

void append(Batch& dst, Batch&& src) {
  for (auto& s : src.sequences) dst.sequences.push_back(std::move(s));
}

// One token per pre-token: what unbounded merging converges to.
Batch word_level(const Batch& batch) {
  Batch out;
  for (const auto& seq : batch.sequences) {
    TokenSequence w{seq.sample_id, {}};
    for (const auto& t : seq.tokens) {
      if (t.word_start || w.tokens.empty()) {
        w.tokens.push_back({t.text, true});
      } else {
        w.tokens.back().text += t.text;
      }
    }
    out.sequences.push_back(std::move(w));
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

json tokens_json(const TokenSequence& seq) {
  json arr = json::array();
  for (const auto& t : seq.tokens) arr.push_back(t.text);
  return arr;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------- compress

struct CompressOpts {
  std::string input, output, trace, stats, language;
  std::optional<std::size_t> merges;
  std::optional<double> target;
  bool sample = false;
  std::optional<std::uint64_t> seed;
  std::size_t batch_size = 32;
  std::size_t threads = default_threads();
};

struct BatchResult {
  DynamicTokenization dt;
  std::size_t m_max = 0;
};

int cmd_compress(const CompressOpts& o) {
  const int modes = int(o.merges.has_value()) + int(o.target.has_value()) + int(o.sample);
  if (modes != 1) usage("compress needs exactly one of --merges, --target-reduction, --sample");
  if (o.batch_size == 0) usage("--batch-size must be positive");
  std::uint64_t seed = 0;
  if (o.sample) seed = require_seed(o.seed, "--sample");

  const Batch all = read_token_stream(o.input);
  const auto batches = split_batches(all, o.batch_size);
  auto results = ordered_map<BatchResult>(batches.size(), o.threads, [&](std::size_t b) {
    const Batch& batch = batches[b];
    BatchResult r;
    r.m_max = compute_max_merges(batch);
    std::size_t m = 0;
    if (o.merges) {
      m = *o.merges;
    } else if (o.target) {
      m = solve_merges_for_reduction(batch, *o.target);
    } else {
      // Per-batch seeds derive from the run seed and the batch position, so
      // the draw is independent of scheduling.
      m = sample_merge_count(r.m_max, seed + b);
    }
    r.dt = apply_dynamic_tokenization(batch, m);
    return r;
  });

  Batch out;
  json traces = json::array();
  json per_batch = json::array();
  for (std::size_t b = 0; b < results.size(); ++b) {
    auto& r = results[b];
    per_batch.push_back({{"index", b},
                         {"m", r.dt.trace.rules.size()},
                         {"m_max", r.m_max},
                         {"truncated", r.dt.trace.truncated}});
    if (!o.trace.empty()) traces.push_back(json::parse(trace_to_json(r.dt.trace)));
    append(out, std::move(r.dt.batch));
  }
  const auto stats = sequence_stats(all, out, word_level(all), o.language);

  write_file_atomic(o.output, format_token_stream(out));
  if (!o.trace.empty()) write_file_atomic(o.trace, traces.dump(2) + "\n");
  if (!o.stats.empty()) write_file_atomic(o.stats, stats_to_json(stats));

  json result = {{"command", "compress"},
                 {"output", o.output},
                 {"batches", per_batch},
                 {"stats", json::parse(stats_to_json(stats))}};
  emit(result, "compress: " + std::to_string(all.sequences.size()) + " samples in " +
                   std::to_string(batches.size()) + " batches, " + std::to_string(stats.len_init) + " -> " +
                   std::to_string(stats.len_m) + " tokens (" + fmt(r6(stats.reduction_pct)) + "% of word level)");
  return kExitOk;
}

// ------------------------------------------------------------ solve-merges

int cmd_solve_merges(const std::string& input, double target, std::size_t batch_size) {
  if (batch_size == 0) usage("--batch-size must be positive");
  const auto batches = split_batches(read_token_stream(input), batch_size);
  json rows = json::array();
  std::size_t total = 0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto m = solve_merges_for_reduction(batches[b], target);
    total += m;
    rows.push_back({{"index", b}, {"m", m}, {"m_max", compute_max_merges(batches[b])}});
  }
  emit({{"command", "solve-merges"}, {"target_reduction", r6(target)}, {"batches", rows}},
       "solve-merges: " + std::to_string(batches.size()) + " batches, " + std::to_string(total) +
           " merges in total for " + fmt(target) + "%");
  return kExitOk;
}

// --------------------------------------------------------------- train-bpe

int cmd_train_bpe(const std::string& input, const std::string& output, const std::string& vocab_output,
                  const BpeTrainOptions& opts) {
  const auto corpus = read_lines(input);
  const auto model = train_bpe(corpus, opts);
  write_file_atomic(output, format_bpe_model(model));
  if (!vocab_output.empty()) write_file_atomic(vocab_output, format_vocabulary(model.to_vocabulary()));
  emit({{"command", "train-bpe"},
        {"output", output},
        {"alphabet", model.alphabet().size()},
        {"merges", model.merges().size()},
        {"tokens", model.tokens().size()}},
       "train-bpe: " + std::to_string(model.tokens().size()) + " tokens (" +
           std::to_string(model.merges().size()) + " merges) from " + std::to_string(corpus.size()) + " lines");
  return kExitOk;
}

// ------------------------------------------------------------ merge-vocabs

int cmd_merge_vocabs(const std::string& base, const std::string& added, const std::string& output,
                     const std::string& vocab_output) {
  const auto t1 = read_bpe_model(base);
  const auto t2 = read_bpe_model(added);
  const auto concat = concat_merge_tables(t1, t2);
  const auto unreachable = find_unreachable_tokens(concat);
  const auto merged_vocab = union_vocab(t1.to_vocabulary(), t2);
  if (!output.empty()) write_file_atomic(output, format_bpe_model(concat));
  if (!vocab_output.empty()) write_file_atomic(vocab_output, format_vocabulary(merged_vocab));
  emit({{"command", "merge-vocabs"},
        {"tokens", merged_vocab.size()},
        {"merges", concat.merges().size()},
        {"unreachable", unreachable}},
       "merge-vocabs: " + std::to_string(merged_vocab.size()) + " tokens, " +
           std::to_string(unreachable.size()) + " unreachable under concatenated merges" +
           (unreachable.empty() ? "" : ": " + join(unreachable)));
  return kExitOk;
}

// ------------------------------------------------------------- lp-tokenize

int cmd_lp_tokenize(const std::string& vocab_path, const std::string& bpe_path, const std::vector<std::string>& texts,
                    const std::string& input, const std::string& output) {
  if (vocab_path.empty() == bpe_path.empty()) usage("lp-tokenize needs exactly one of --vocab, --bpe");
  if (texts.empty() == input.empty()) usage("lp-tokenize needs exactly one of --text, --input");
  const auto lines = input.empty() ? texts : read_lines(input);

  std::optional<PrefixTrie> trie;
  std::optional<BpeTokenizer> bpe;
  if (!vocab_path.empty()) {
    trie.emplace(read_vocabulary(vocab_path));
  } else {
    bpe.emplace(read_bpe_model(bpe_path).to_vocabulary());
  }

  Batch out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      auto seq = trie ? lp_tokenize(lines[i], *trie) : bpe->tokenize(lines[i]);
      seq.sample_id = std::to_string(i);
      out.sequences.push_back(std::move(seq));
    } catch (const Error& e) {
      if (input.empty()) throw;
      throw Error(e.code(), input + ": line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (!output.empty()) write_file_atomic(output, format_token_stream(out));

  json seqs = json::array();
  std::size_t total = 0;
  for (const auto& s : out.sequences) {
    seqs.push_back(tokens_json(s));
    total += s.size();
  }
  emit({{"command", "lp-tokenize"}, {"mode", trie ? "longest-prefix" : "bpe"}, {"sequences", seqs}},
       "lp-tokenize: " + std::to_string(out.sequences.size()) + " lines, " + std::to_string(total) + " tokens" +
           (out.sequences.size() == 1 ? " [" + join(tokens_json(out.sequences[0]).get<std::vector<std::string>>()) + "]"
                                      : ""));
  return kExitOk;
}

// ------------------------------------------------------ compose-embeddings

struct ComposeOpts {
  std::string provider = "fvt";
  std::string base_table, base_vocab, base_rows, external_table, external_vocab;
  std::string tokens_file, input;
  std::string output, output_vocab;
  std::optional<std::size_t> cache_capacity;
};

int cmd_compose(const ComposeOpts& o) {
  if (!o.cache_capacity) usage("compose-embeddings needs --cache-capacity");
  if (o.tokens_file.empty() == o.input.empty()) usage("compose-embeddings needs exactly one of --tokens, --input");

  std::unique_ptr<EmbeddingProvider> provider;
  if (o.provider == "fvt" || o.provider == "table") {
    if (o.base_table.empty() || o.base_vocab.empty()) usage("--provider " + o.provider + " needs --base-table and --base-vocab");
    const auto base_vocab = read_vocabulary(o.base_vocab);
    const auto& rows = o.base_rows.empty() ? o.base_vocab : o.base_rows;
    auto table = std::make_shared<const EmbeddingTable>(load_table(o.base_table, rows));
    if (o.provider == "fvt") {
      if (!base_vocab.has_merges()) usage("--provider fvt needs a base vocabulary with merges");
      provider = std::make_unique<FvtProvider>(base_vocab, table);
    } else {
      provider = std::make_unique<TableLookupProvider>(table);
    }
  } else if (o.provider == "external") {
    if (o.external_table.empty() || o.external_vocab.empty()) usage("--provider external needs --external-table and --external-vocab");
    auto table = std::make_shared<const EmbeddingTable>(load_table(o.external_table, o.external_vocab));
    provider = std::make_unique<ExternalTableProvider>(table, o.external_table);
  } else {
    usage("unknown provider: " + o.provider);
  }

  std::vector<std::string> tokens;
  if (!o.tokens_file.empty()) {
    for (auto& line : read_lines(o.tokens_file)) {
      if (!line.empty()) tokens.push_back(std::move(line));
    }
  } else {
    for (const auto& seq : read_token_stream(o.input).sequences) {
      for (const auto& t : seq.tokens) tokens.push_back(t.text);
    }
  }
  // Distinct, first-occurrence order.
  Vocabulary distinct;
  for (auto& t : tokens) distinct.add(std::move(t));

  EmbeddingCache cache(*o.cache_capacity);
  std::size_t hits = 0, misses = 0, evictions = 0;
  cache.set_observer([&](CacheEvent ev, const auto&) {
    if (ev == CacheEvent::Hit) ++hits;
    if (ev == CacheEvent::Miss) ++misses;
    if (ev == CacheEvent::Evict) ++evictions;
  });
  const auto table = embed_batch_vocab(distinct.tokens(), *provider, cache);
  save_table(table, o.output, o.output_vocab);

  emit({{"command", "compose-embeddings"},
        {"provider", provider->id()},
        {"rows", table.rows()},
        {"dim", table.dim()},
        {"cache", {{"capacity", *o.cache_capacity}, {"hits", hits}, {"misses", misses}, {"evictions", evictions}}}},
       "compose-embeddings: " + std::to_string(table.rows()) + " rows x " + std::to_string(table.dim()) + " via " +
           provider->id());
  return kExitOk;
}

// ------------------------------------------------------------------- index

struct IndexOpts {
  std::string table, vocab, index, output;
  std::size_t num_leaves = IndexParams{}.num_leaves;
  std::optional<std::size_t> leaves_to_search;
  std::optional<std::size_t> reorder;
  std::size_t training_sample_size = IndexParams{}.training_sample_size;
  std::optional<std::uint64_t> seed;
  std::size_t k = 10;
  std::vector<std::string> query_tokens;
  std::string query_vector;
  std::size_t queries = 100;
};

IndexParams index_params(const IndexOpts& o, std::uint64_t seed) {
  IndexParams p;
  p.num_leaves = o.num_leaves;
  p.leaves_to_search = o.leaves_to_search.value_or(std::min(p.leaves_to_search, p.num_leaves));
  p.reorder = o.reorder.value_or(p.reorder);
  p.training_sample_size = o.training_sample_size;
  p.seed = seed;
  return p;
}

void apply_search_overrides(IvfIndex& index, const IndexOpts& o) {
  if (o.leaves_to_search || o.reorder) {
    index.set_search_params(o.leaves_to_search.value_or(index.params().leaves_to_search),
                            o.reorder.value_or(index.params().reorder));
  }
}

json params_json(const IndexParams& p) {
  return {{"num_leaves", p.num_leaves},
          {"leaves_to_search", p.leaves_to_search},
          {"reorder", p.reorder},
          {"training_sample_size", p.training_sample_size},
          {"seed", p.seed}};
}

int cmd_index_build(const IndexOpts& o) {
  const auto seed = require_seed(o.seed, "index build");
  const auto table = load_table(o.table, o.vocab);
  const auto params = index_params(o, seed);
  const auto index = build_index(table, params);
  save_index(index, o.output);
  std::size_t largest = 0, empty = 0;
  for (const auto& leaf : index.leaves()) {
    largest = std::max(largest, leaf.rows.size());
    empty += leaf.rows.empty();
  }
  emit({{"command", "index build"},
        {"output", o.output},
        {"rows", index.row_count()},
        {"dim", index.dim()},
        {"params", params_json(params)},
        {"largest_leaf", largest},
        {"empty_leaves", empty}},
       "index build: " + std::to_string(index.row_count()) + " rows into " + std::to_string(index.num_leaves()) +
           " leaves");
  return kExitOk;
}

std::vector<float> parse_vector(const std::string& text) {
  std::vector<float> v;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stof(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage("--query-vector: not a number: '" + item + "'");
    }
  }
  return v;
}

int cmd_index_query(const IndexOpts& o) {
  if (o.query_tokens.empty() == o.query_vector.empty()) usage("index query needs --query-token or --query-vector");
  if (!o.query_tokens.empty() && o.table.empty()) usage("--query-token needs --table and --vocab");
  auto index = load_index(o.index);
  apply_search_overrides(index, o);
  std::optional<Vocabulary> names;
  std::optional<EmbeddingTable> table;
  if (!o.table.empty()) {
    table = load_table(o.table, o.vocab);
    names = table->vocabulary();
  } else if (!o.vocab.empty()) {
    names = read_vocabulary(o.vocab);
  }

  std::vector<std::pair<std::string, std::vector<float>>> queries;
  if (!o.query_vector.empty()) queries.emplace_back("vector", parse_vector(o.query_vector));
  for (const auto& tok : o.query_tokens) {
    const auto row = table->find(tok);
    if (!row) throw Error(ErrorCode::MissingEmbedding, "query token not in table: '" + tok + "'");
    queries.emplace_back(tok, std::vector<float>(row->begin(), row->end()));
  }

  json results = json::array();
  for (const auto& [label, h] : queries) {
    const auto hits = query_top_k(index, h, o.k);
    std::vector<double> scores;
    for (const auto& hit : hits) scores.push_back(hit.score);
    const auto probs = hits.empty() ? std::vector<double>{} : softmax_over_candidates(scores);
    json arr = json::array();
    for (std::size_t i = 0; i < hits.size(); ++i) {
      json entry = {{"row", hits[i].row}, {"score", r6(hits[i].score)}, {"probability", r6(probs[i])}};
      if (names && hits[i].row < names->size()) entry["token"] = names->tokens()[hits[i].row];
      arr.push_back(std::move(entry));
    }
    results.push_back({{"query", label}, {"hits", arr}});
  }
  emit({{"command", "index query"}, {"k", o.k}, {"results", results}},
       "index query: " + std::to_string(queries.size()) + " queries, top " + std::to_string(o.k));
  return kExitOk;
}

int cmd_index_eval(const IndexOpts& o) {
  const auto seed = require_seed(o.seed, "index eval");
  const auto table = load_table(o.table, o.vocab);
  IvfIndex index;
  if (!o.index.empty()) {
    index = load_index(o.index);
    if (index.dim() != table.dim() || index.row_count() != table.rows()) {
      throw Error(ErrorCode::DimensionMismatch, "index does not match table shape");
    }
    apply_search_overrides(index, o);
  } else {
    index = build_index(table, index_params(o, seed));
  }
  // Queries: isotropic Gaussian directions, normalized.
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> gauss;
  std::vector<std::vector<float>> queries(o.queries, std::vector<float>(table.dim()));
  for (auto& q : queries) {
    double norm = 0;
    for (auto& x : q) {
      x = gauss(rng);
      norm += double(x) * x;
    }
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (auto& x : q) x = static_cast<float>(x / norm);
    }
  }
  const double recall = recall_at_k(index, table, queries, o.k);
  emit({{"command", "index eval"},
        {"k", o.k},
        {"queries", o.queries},
        {"recall_at_k", r6(recall)},
        {"params", params_json(index.params())}},
       "index eval: recall@" + std::to_string(o.k) + " = " + fmt(recall) + " over " + std::to_string(o.queries) +
           " queries");
  return kExitOk;
}

// ------------------------------------------------------------------- stats

int cmd_stats(const std::string& before_path, const std::string& after_path, const std::string& language,
              const std::string& output) {
  const auto before = read_token_stream(before_path);
  const auto after = read_token_stream(after_path);
  const auto stats = sequence_stats(before, after, word_level(before), language);
  const auto text = stats_to_json(stats);
  if (!output.empty()) write_file_atomic(output, text);
  emit(json::parse(text), "stats: " + std::to_string(stats.len_init) + " -> " + std::to_string(stats.len_m) +
                              " tokens, word level " + std::to_string(stats.len_word) + ", reduction " +
                              fmt(r6(stats.reduction_pct)) + "%");
  return kExitOk;
}

// ------------------------------------------------------------------- flops

struct FlopsOpts {
  std::string preset = "mistral-7b";
  std::optional<double> n_params, d_model, n_layers;
  std::vector<double> seq_len;
  std::vector<double> reduction_pct;
  std::vector<std::string> stats_files;
  std::string language;
  double hn_cost = 0.0;
  std::optional<double> calibrate_hn_flops;
  double unique_new_tokens = 0.0;
  double avg_decomposition_len = 0.0;
};

int cmd_flops(const FlopsOpts& o) {
  ModelConfig cfg = model_preset(o.preset);
  if (o.n_params) cfg.n_params = *o.n_params;
  if (o.d_model) cfg.d_model = *o.d_model;
  if (o.n_layers) cfg.n_layers = *o.n_layers;
  cfg.validate();
  if (o.seq_len.empty() == o.stats_files.empty()) usage("flops needs --seq-len or --stats");
  if (!o.reduction_pct.empty() && o.reduction_pct.size() != o.seq_len.size()) {
    usage("--reduction-pct must be given once per --seq-len");
  }

  std::vector<LengthStats> rows;
  for (std::size_t i = 0; i < o.seq_len.size(); ++i) {
    LengthStats s;
    s.language = o.language;
    s.samples = 1;
    s.avg_tokens_per_sample = o.seq_len[i];
    s.reduction_pct = o.reduction_pct.empty() ? 0.0 : o.reduction_pct[i];
    s.unique_new_tokens = static_cast<std::size_t>(o.unique_new_tokens);
    s.avg_decomposition_len = o.avg_decomposition_len;
    rows.push_back(s);
  }
  for (const auto& path : o.stats_files) {
    json doc;
    try {
      doc = json::parse(read_file(path));
      LengthStats s;
      s.language = doc.at("language").get<std::string>();
      s.samples = doc.at("samples").get<std::size_t>();
      s.reduction_pct = doc.at("reduction_pct").get<double>();
      s.avg_tokens_per_sample = doc.at("avg_tokens_per_sample").get<double>();
      s.unique_new_tokens = doc.at("unique_new_tokens").get<std::size_t>();
      s.avg_decomposition_len = doc.at("avg_decomposition_len").get<double>();
      rows.push_back(s);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, path + ": " + e.what());
    }
  }

  HypernetCostConfig cost{o.hn_cost};
  if (o.calibrate_hn_flops) {
    cost = calibrate_hypernet_cost(*o.calibrate_hn_flops, o.unique_new_tokens, o.avg_decomposition_len);
  }
  const auto report = flops_report(rows, cfg, cost);
  std::cerr << report.to_text();
  emit({{"command", "flops"},
        {"model", {{"n_params", r6(cfg.n_params)}, {"d_model", r6(cfg.d_model)}, {"n_layers", r6(cfg.n_layers)}}},
        {"hn_flops_per_processed_token", r6(cost.flops_per_processed_token)},
        {"rows", json::parse(report.to_json())}},
       "flops: " + std::to_string(report.rows.size()) + " rows, first " + format_flops(report.rows.front().model_flops));
  return kExitOk;
}

// -------------------------------------------------------------------- plan

int cmd_plan(const std::string& vocab_path, const std::string& prefix, const std::string& suffix, std::size_t m) {
  const auto vocab = read_vocabulary(vocab_path);
  const auto plan = build_scoring_plan(base_tokenize(prefix, vocab), base_tokenize(suffix, vocab), m);
  emit({{"command", "plan"},
        {"prefix_tokens", tokens_json(plan.prefix_tokens)},
        {"suffix_tokens", tokens_json(plan.suffix_tokens)},
        {"boundary_index", plan.boundary_index}},
       "plan: prefix " + std::to_string(plan.prefix_tokens.size()) + " tokens, suffix " +
           std::to_string(plan.suffix_tokens.size()) + " tokens");
  return kExitOk;
}

void add_index_params(CLI::App* app, IndexOpts& o, bool build_params) {
  if (build_params) {
    app->add_option("--num-leaves", o.num_leaves, "Number of k-means partitions")->capture_default_str();
    app->add_option("--training-sample-size", o.training_sample_size, "Rows sampled for k-means")
        ->capture_default_str();
  }
  app->add_option("--leaves-to-search", o.leaves_to_search, "Leaves probed per query (default 250)");
  app->add_option("--reorder", o.reorder, "Candidate pool before final ranking (default 200)");
  app->add_option("--seed", o.seed, "Seed (falls back to DYNTOK_SEED)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyntok: batch-level dynamic tokenization pipelines"};
  app.require_subcommand(1);
  int status = kExitOk;

  CompressOpts co;
  auto* compress = app.add_subcommand("compress", "Apply batch-level merging to a token stream");
  compress->add_option("--input", co.input, "Token stream JSONL")->required();
  compress->add_option("--output", co.output, "Compressed token stream JSONL")->required();
  compress->add_option("--merges", co.merges, "Fixed number of merges per batch");
  compress->add_option("--target-reduction", co.target, "Target reduction percentage in [0, 100]");
  compress->add_flag("--sample", co.sample, "Draw merges per batch uniformly from [0, m_max]");
  compress->add_option("--seed", co.seed, "Seed for --sample (falls back to DYNTOK_SEED)");
  compress->add_option("--batch-size", co.batch_size, "Samples per batch")->capture_default_str();
  compress->add_option("--trace", co.trace, "Write per-batch merge traces (JSON)");
  compress->add_option("--stats", co.stats, "Write length statistics (JSON)");
  compress->add_option("--language", co.language, "Language label for statistics");
  compress->add_option("--threads", co.threads, "Worker threads");
  compress->callback([&] { status = cmd_compress(co); });

  std::string sm_input;
  double sm_target = 0;
  std::size_t sm_batch = 32;
  auto* solve = app.add_subcommand("solve-merges", "Minimal merges per batch for a target reduction");
  solve->add_option("--input", sm_input, "Token stream JSONL")->required();
  solve->add_option("--target-reduction", sm_target, "Target reduction percentage")->required();
  solve->add_option("--batch-size", sm_batch, "Samples per batch")->capture_default_str();
  solve->callback([&] { status = cmd_solve_merges(sm_input, sm_target, sm_batch); });

  std::string tb_input, tb_output, tb_vocab;
  BpeTrainOptions tb_opts;
  auto* train = app.add_subcommand("train-bpe", "Train a BPE merge table on a text corpus (one line per document)");
  train->add_option("--input", tb_input, "Corpus text file")->required();
  train->add_option("--output", tb_output, "BPE model JSON")->required();
  train->add_option("--vocab-output", tb_vocab, "Vocabulary JSON (tokens and merges)");
  train->add_option("--vocab-size", tb_opts.target_size, "Target vocabulary size")->required();
  train->add_option("--min-pair-freq", tb_opts.min_pair_freq, "Stop below this pair count")->capture_default_str();
  train->add_option("--shards", tb_opts.shards, "Counting shards")->capture_default_str();
  train->callback([&] { status = cmd_train_bpe(tb_input, tb_output, tb_vocab, tb_opts); });

  std::string mv_base, mv_new, mv_out, mv_vocab;
  auto* mergev = app.add_subcommand("merge-vocabs", "Concatenate merge tables and report unreachable tokens");
  mergev->add_option("--base", mv_base, "Original BPE model JSON")->required();
  mergev->add_option("--new", mv_new, "Added BPE model JSON")->required();
  mergev->add_option("--output", mv_out, "Concatenated BPE model JSON");
  mergev->add_option("--vocab-output", mv_vocab, "Union vocabulary JSON");
  mergev->callback([&] { status = cmd_merge_vocabs(mv_base, mv_new, mv_out, mv_vocab); });

  std::string lp_vocab, lp_bpe, lp_input, lp_output;
  std::vector<std::string> lp_texts;
  auto* lp = app.add_subcommand("lp-tokenize", "Longest-prefix tokenization (or merge-table tokenization with --bpe)");
  lp->add_option("--vocab", lp_vocab, "Vocabulary JSON for longest-prefix matching");
  lp->add_option("--bpe", lp_bpe, "BPE model JSON; tokenize by applying its merges instead");
  lp->add_option("--text", lp_texts, "Text to tokenize (repeatable)");
  lp->add_option("--input", lp_input, "Text file, one sample per line");
  lp->add_option("--output", lp_output, "Token stream JSONL");
  lp->callback([&] { status = cmd_lp_tokenize(lp_vocab, lp_bpe, lp_texts, lp_input, lp_output); });

  ComposeOpts ce;
  auto* compose = app.add_subcommand("compose-embeddings", "Embed a token list through a provider");
  compose->add_option("--provider", ce.provider, "fvt | table | external")->capture_default_str();
  compose->add_option("--base-table", ce.base_table, "Base embedding table (DTEMB1)");
  compose->add_option("--base-vocab", ce.base_vocab, "Base vocabulary JSON (merges for fvt)");
  compose->add_option("--base-rows", ce.base_rows, "Row order of --base-table (default: --base-vocab)");
  compose->add_option("--external-table", ce.external_table, "Externally produced embedding table (DTEMB1)");
  compose->add_option("--external-vocab", ce.external_vocab, "Row order for --external-table");
  compose->add_option("--tokens", ce.tokens_file, "Tokens, one per line");
  compose->add_option("--input", ce.input, "Token stream JSONL; its distinct tokens are embedded");
  compose->add_option("--cache-capacity", ce.cache_capacity, "Embedding cache capacity (entries)")->required();
  compose->add_option("--output", ce.output, "Output table (DTEMB1)")->required();
  compose->add_option("--output-vocab", ce.output_vocab, "Output row order JSON")->required();
  compose->callback([&] { status = cmd_compose(ce); });

  IndexOpts io;
  auto* index = app.add_subcommand("index", "Inverted-file nearest-neighbour index");
  index->require_subcommand(1);
  auto* ibuild = index->add_subcommand("build", "Build an index over an embedding table");
  ibuild->add_option("--table", io.table, "Embedding table (DTEMB1)")->required();
  ibuild->add_option("--vocab", io.vocab, "Row order JSON")->required();
  ibuild->add_option("--output", io.output, "Index file (DTIVF1)")->required();
  add_index_params(ibuild, io, true);
  ibuild->callback([&] { status = cmd_index_build(io); });

  auto* iquery = index->add_subcommand("query", "Top-k rows by dot product");
  iquery->add_option("--index", io.index, "Index file (DTIVF1)")->required();
  iquery->add_option("--table", io.table, "Embedding table, for --query-token");
  iquery->add_option("--vocab", io.vocab, "Row order JSON, for token labels");
  iquery->add_option("--query-token", io.query_tokens, "Use this token's row as the query (repeatable)");
  iquery->add_option("--query-vector", io.query_vector, "Comma-separated query vector");
  iquery->add_option("--k", io.k, "Neighbours to return")->capture_default_str();
  add_index_params(iquery, io, false);
  iquery->callback([&] { status = cmd_index_query(io); });

  auto* ieval = index->add_subcommand("eval", "Recall@k against exhaustive search on random unit queries");
  ieval->add_option("--table", io.table, "Embedding table (DTEMB1)")->required();
  ieval->add_option("--vocab", io.vocab, "Row order JSON")->required();
  ieval->add_option("--index", io.index, "Prebuilt index; built from the table when absent");
  ieval->add_option("--queries", io.queries, "Number of random queries")->capture_default_str();
  ieval->add_option("--k", io.k, "Neighbours per query")->capture_default_str();
  add_index_params(ieval, io, true);
  ieval->callback([&] { status = cmd_index_eval(io); });

  std::string st_before, st_after, st_lang, st_out;
  auto* stats = app.add_subcommand("stats", "Sequence-length statistics for a compressed token stream");
  stats->add_option("--before", st_before, "Base token stream JSONL")->required();
  stats->add_option("--after", st_after, "Compressed token stream JSONL")->required();
  stats->add_option("--language", st_lang, "Language label");
  stats->add_option("--output", st_out, "Write statistics JSON");
  stats->callback([&] { status = cmd_stats(st_before, st_after, st_lang, st_out); });

  FlopsOpts fo;
  auto* flops = app.add_subcommand("flops", "Per-sample FLOPs for the language model and the embedding hypernetwork");
  flops->add_option("--preset", fo.preset, "Model preset")->capture_default_str();
  flops->add_option("--n-params", fo.n_params, "Override parameter count");
  flops->add_option("--d-model", fo.d_model, "Override hidden size");
  flops->add_option("--n-layers", fo.n_layers, "Override layer count");
  flops->add_option("--seq-len", fo.seq_len, "Average sequence length (repeatable)");
  flops->add_option("--reduction-pct", fo.reduction_pct, "Reduction label per --seq-len");
  flops->add_option("--stats", fo.stats_files, "Statistics JSON from compress/stats (repeatable)");
  flops->add_option("--language", fo.language, "Language label for --seq-len rows");
  flops->add_option("--hn-cost", fo.hn_cost, "Hypernetwork FLOPs per processed subword");
  flops->add_option("--calibrate-hn-flops", fo.calibrate_hn_flops,
                    "Derive --hn-cost so the given totals produce this many FLOPs");
  flops->add_option("--unique-new-tokens", fo.unique_new_tokens, "New tokens per sample for --seq-len rows");
  flops->add_option("--avg-decomposition-len", fo.avg_decomposition_len, "Subwords per new token");
  flops->callback([&] { status = cmd_flops(fo); });

  std::string pl_vocab, pl_prefix, pl_suffix;
  std::size_t pl_m = 0;
  auto* plan = app.add_subcommand("plan", "Scoring plan: merge the prefix, keep the suffix at base tokenization");
  plan->add_option("--vocab", pl_vocab, "Base vocabulary JSON with merges")->required();
  plan->add_option("--prefix", pl_prefix, "Prefix text")->required();
  plan->add_option("--suffix", pl_suffix, "Suffix text")->required();
  plan->add_option("--merges", pl_m, "Merges applied to the prefix")->required();
  plan->callback([&] { status = cmd_plan(pl_vocab, pl_prefix, pl_suffix, pl_m); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "dyntok: error: " << e.what() << '\n';
    return e.is_data_error() ? kExitData : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "dyntok: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return status;
}
