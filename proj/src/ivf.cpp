#include "dyntok/ivf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "dyntok/byte_io.hpp"
#include "dyntok/error.hpp"
#include "dyntok/io.hpp"
#include "dyntok/simd/kernels.hpp"

namespace dyntok {

namespace {

constexpr std::string_view kMagic = "DTIVF1";
constexpr int kKmeansIterations = 20;

// Portable bounded draw; uniform_int_distribution differs across libraries.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t range) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % range + 1) % range;
  std::uint64_t v = gen();
  while (v > limit) v = gen();
  return v % range;
}

double unit_double(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

bool ranks_before(const SearchHit& a, const SearchHit& b) {
  return a.score > b.score || (a.score == b.score && a.row < b.row);
}

void keep_top(std::vector<SearchHit>& hits, std::size_t k) {
  if (hits.size() > k) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), ranks_before);
    hits.resize(k);
  } else {
    std::sort(hits.begin(), hits.end(), ranks_before);
  }
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1 || n < 4096) {
    fn(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  for (std::size_t b = 0; b < n; b += chunk) pool.emplace_back([&, b] { fn(b, std::min(n, b + chunk)); });
  for (auto& t : pool) t.join();
}

// Index of the nearest centroid by squared Euclidean distance, lowest id on ties.
std::uint32_t nearest(const float* x, const std::vector<float>& centroids, std::size_t k, std::size_t dim) {
  const auto& kern = simd::active();
  std::uint32_t best = 0;
  float best_d = std::numeric_limits<float>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const float d = kern.l2sq(x, centroids.data() + c * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

std::vector<float> kmeans_pp_seed(const std::vector<const float*>& sample, std::size_t k, std::size_t dim,
                                  std::mt19937_64& gen) {
  const auto& kern = simd::active();
  const std::size_t n = sample.size();
  std::vector<float> centroids;
  centroids.reserve(k * dim);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(bounded(gen, n));
  for (std::size_t c = 0; c < k; ++c) {
    centroids.insert(centroids.end(), sample[pick], sample[pick] + dim);
    const float* center = centroids.data() + c * dim;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], static_cast<double>(kern.l2sq(sample[i], center, dim)));
      total += dist[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = static_cast<std::size_t>(bounded(gen, n));
      continue;
    }
    const double target = unit_double(gen) * total;
    double run = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      run += dist[i];
      if (run > target && dist[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centroids;
}

}  // namespace

void IndexParams::validate() const {
  if (num_leaves == 0) throw Error(ErrorCode::DomainError, "num_leaves must be positive");
  if (leaves_to_search == 0 || leaves_to_search > num_leaves) {
    throw Error(ErrorCode::DomainError, "leaves_to_search must lie in [1, num_leaves]");
  }
  if (training_sample_size == 0) throw Error(ErrorCode::DomainError, "training_sample_size must be positive");
}

IvfIndex::IvfIndex(std::size_t dim, IndexParams params, std::vector<float> centroids, std::vector<Leaf> leaves)
    : dim_(dim), params_(params), centroids_(std::move(centroids)), leaves_(std::move(leaves)) {
  if (centroids_.size() != leaves_.size() * dim_) {
    throw Error(ErrorCode::DimensionMismatch, "centroid block does not match num_leaves * dim");
  }
  params_.num_leaves = leaves_.size();
  params_.leaves_to_search = std::min(params_.leaves_to_search, leaves_.size());
  for (const auto& leaf : leaves_) {
    if (leaf.vectors.size() != leaf.rows.size() * dim_) {
      throw Error(ErrorCode::DimensionMismatch, "posting vectors do not match row count * dim");
    }
    row_count_ += leaf.rows.size();
  }
}

void IvfIndex::set_search_params(std::size_t leaves_to_search, std::size_t reorder) {
  if (leaves_to_search == 0 || leaves_to_search > num_leaves()) {
    throw Error(ErrorCode::DomainError, "leaves_to_search must lie in [1, num_leaves]");
  }
  params_.leaves_to_search = leaves_to_search;
  params_.reorder = reorder;
}

std::vector<SearchHit> IvfIndex::query(std::span<const float> h, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::DomainError, "k must be at least 1");
  if (h.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "query dim does not match index dim");
  const auto& kern = simd::active();

  // Leaves ranked by centroid dot product with the query.
  std::vector<SearchHit> leaf_scores(leaves_.size());
  for (std::size_t l = 0; l < leaves_.size(); ++l) {
    leaf_scores[l] = {static_cast<std::uint32_t>(l), kern.dot(h.data(), centroids_.data() + l * dim_, dim_)};
  }
  keep_top(leaf_scores, params_.leaves_to_search);

  const std::size_t keep = std::max(k, params_.reorder);
  std::vector<SearchHit> candidates;
  for (const auto& leaf_hit : leaf_scores) {
    const Leaf& leaf = leaves_[leaf_hit.row];
    for (std::size_t i = 0; i < leaf.rows.size(); ++i) {
      candidates.push_back({leaf.rows[i], kern.dot(h.data(), leaf.vectors.data() + i * dim_, dim_)});
    }
    // Bound memory on large probes.
    if (candidates.size() > 4 * keep + 4096) keep_top(candidates, keep);
  }
  keep_top(candidates, keep);

  // With reorder > 0 the surviving max(k, reorder) candidates would be
  // rescored exactly here. Stored vectors are unquantized, so the first-pass
  // scores already are exact.
  if (candidates.size() > k) candidates.resize(k);
  return candidates;
}

bool IvfIndex::same_partitioning(const IvfIndex& other) const {
  return dim_ == other.dim_ && row_count_ == other.row_count_ && centroids_ == other.centroids_ &&
         leaves_ == other.leaves_;
}

IvfIndex build_index(const EmbeddingTable& table, const IndexParams& params) {
  params.validate();
  const std::size_t rows = table.rows();
  const std::size_t dim = table.dim();
  const std::size_t k = params.num_leaves;
  if (rows < k) {
    throw Error(ErrorCode::TooFewRows,
                "table has " + std::to_string(rows) + " rows but num_leaves is " + std::to_string(k));
  }
  std::mt19937_64 gen(params.seed);

  // Seeded partial Fisher-Yates for the training sample.
  const std::size_t n_sample = std::min(params.training_sample_size, rows);
  std::vector<std::uint32_t> order(rows);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = 0; i < n_sample; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(gen, rows - i));
    std::swap(order[i], order[j]);
  }
  order.resize(n_sample);
  std::sort(order.begin(), order.end());
  std::vector<const float*> sample(n_sample);
  for (std::size_t i = 0; i < n_sample; ++i) sample[i] = table.row(order[i]).data();

  std::vector<float> centroids = kmeans_pp_seed(sample, k, dim, gen);

  std::vector<std::uint32_t> assign(n_sample);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  for (int iter = 0; iter < kKmeansIterations; ++iter) {
    parallel_for(n_sample, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) assign[i] = nearest(sample[i], centroids, k, dim);
    });
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n_sample; ++i) {
      double* acc = sums.data() + assign[i] * dim;
      for (std::size_t d = 0; d < dim; ++d) acc[d] += sample[i][d];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t d = 0; d < dim; ++d) {
        centroids[c * dim + d] = static_cast<float>(sums[c * dim + d] / static_cast<double>(counts[c]));
      }
    }
  }

  std::vector<std::uint32_t> row_leaf(rows);
  parallel_for(rows, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) row_leaf[r] = nearest(table.row(r).data(), centroids, k, dim);
  });
  std::vector<IvfIndex::Leaf> leaves(k);
  for (std::size_t r = 0; r < rows; ++r) {
    auto& leaf = leaves[row_leaf[r]];
    leaf.rows.push_back(static_cast<std::uint32_t>(r));
    const auto v = table.row(r);
    leaf.vectors.insert(leaf.vectors.end(), v.begin(), v.end());
  }
  return IvfIndex(dim, params, std::move(centroids), std::move(leaves));
}

std::vector<SearchHit> query_top_k(const IvfIndex& index, std::span<const float> h, std::size_t k) {
  return index.query(h, k);
}

std::vector<SearchHit> exhaustive_top_k(const EmbeddingTable& table, std::span<const float> h, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::DomainError, "k must be at least 1");
  if (h.size() != table.dim()) throw Error(ErrorCode::DimensionMismatch, "query dim does not match table dim");
  const auto& kern = simd::active();
  std::vector<SearchHit> hits(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    hits[r] = {static_cast<std::uint32_t>(r), kern.dot(h.data(), table.row(r).data(), table.dim())};
  }
  keep_top(hits, k);
  return hits;
}

std::vector<double> softmax_over_candidates(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "softmax over an empty candidate list");
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw Error(ErrorCode::DomainError, "softmax input must be finite");
    out[i] = std::exp(scores[i] - peak);
    total += out[i];
  }
  for (auto& p : out) p /= total;
  return out;
}

double recall_at_k(const IvfIndex& index, const EmbeddingTable& table, std::span<const std::vector<float>> queries,
                   std::size_t k) {
  if (k == 0) throw Error(ErrorCode::DomainError, "k must be at least 1");
  if (queries.empty()) throw Error(ErrorCode::EmptyInput, "recall needs at least one query");
  double total = 0.0;
  for (const auto& q : queries) {
    auto approx = index.query(q, k);
    auto exact = exhaustive_top_k(table, q, k);
    std::vector<std::uint32_t> a, b;
    for (const auto& h : approx) a.push_back(h.row);
    for (const auto& h : exact) b.push_back(h.row);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::uint32_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    total += static_cast<double>(common.size()) / static_cast<double>(k);
  }
  return total / static_cast<double>(queries.size());
}

std::string serialize_index(const IvfIndex& index) {
  std::string out;
  out.append(kMagic);
  bytes::put_u32(out, static_cast<std::uint32_t>(index.dim()));
  bytes::put_u32(out, static_cast<std::uint32_t>(index.num_leaves()));
  bytes::put_u32(out, static_cast<std::uint32_t>(index.row_count()));
  for (float v : index.centroids()) bytes::put_f32(out, v);
  for (std::size_t l = 0; l < index.num_leaves(); ++l) {
    const auto& leaf = index.leaves()[l];
    bytes::put_u32(out, static_cast<std::uint32_t>(l));
    bytes::put_u32(out, static_cast<std::uint32_t>(leaf.rows.size()));
    for (auto r : leaf.rows) bytes::put_u32(out, r);
    for (float v : leaf.vectors) bytes::put_f32(out, v);
  }
  return out;
}

IvfIndex deserialize_index(std::string_view binary) {
  bytes::Reader in(binary);
  in.expect_magic(kMagic);
  const std::uint32_t dim = in.u32("dim");
  const std::uint32_t num_leaves = in.u32("num_leaves");
  const std::uint32_t row_count = in.u32("row count");
  if (dim == 0) throw format_error(6, "dim must be positive");
  if (num_leaves == 0) throw format_error(10, "num_leaves must be positive");
  in.require(static_cast<std::size_t>(num_leaves) * dim * 4, "centroid block");
  std::vector<float> centroids(static_cast<std::size_t>(num_leaves) * dim);
  for (auto& v : centroids) v = in.f32("centroid block");

  std::vector<IvfIndex::Leaf> leaves(num_leaves);
  std::vector<char> seen(row_count, 0);
  for (std::uint32_t l = 0; l < num_leaves; ++l) {
    const std::size_t at = in.offset();
    const std::uint32_t leaf_id = in.u32("leaf id");
    if (leaf_id != l) throw format_error(at, "posting block out of order");
    const std::uint32_t count = in.u32("posting count");
    in.require(static_cast<std::size_t>(count) * (4 + 4 * static_cast<std::size_t>(dim)), "posting block");
    auto& leaf = leaves[l];
    leaf.rows.resize(count);
    for (auto& r : leaf.rows) {
      const std::size_t r_at = in.offset();
      r = in.u32("row id");
      if (r >= row_count || seen[r]) throw format_error(r_at, "row id out of range or duplicated");
      seen[r] = 1;
    }
    leaf.vectors.resize(static_cast<std::size_t>(count) * dim);
    for (auto& v : leaf.vectors) v = in.f32("posting vectors");
  }
  if (in.remaining() != 0) throw format_error(in.offset(), "trailing bytes after posting blocks");
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw format_error(in.offset(), "posting lists do not cover every row");
  }
  IndexParams params;
  params.num_leaves = num_leaves;
  params.leaves_to_search = std::min<std::size_t>(params.leaves_to_search, num_leaves);
  return IvfIndex(dim, params, std::move(centroids), std::move(leaves));
}

void save_index(const IvfIndex& index, const std::string& path) { write_file_atomic(path, serialize_index(index)); }

IvfIndex load_index(const std::string& path) { return deserialize_index(read_file(path)); }

}  // namespace dyntok
