#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dyntok/embedding_table.hpp"

namespace dyntok {

// Field names follow ScaNN's configuration vocabulary.
struct IndexParams {
  std::size_t num_leaves = 2000;
  std::size_t leaves_to_search = 250;
  std::size_t reorder = 200;
  std::size_t training_sample_size = 1'000'000;
  std::uint64_t seed = 0;
  // Parsed for config compatibility only; vectors are stored unquantized.
  std::optional<double> anisotropic_quantization_threshold;
  std::optional<std::size_t> num_neighbours;
  std::optional<std::size_t> dims_per_block;

  void validate() const;
};

struct SearchHit {
  std::uint32_t row = 0;
  float score = 0.0f;

  bool operator==(const SearchHit&) const = default;
};

// Inverted-file index: rows partitioned by nearest k-means centroid, queries
// probe the best-scoring partitions and rank by dot product.
class IvfIndex {
 public:
  struct Leaf {
    std::vector<std::uint32_t> rows;
    std::vector<float> vectors;  // rows.size() * dim, row-major

    bool operator==(const Leaf&) const = default;
  };

  IvfIndex() = default;
  IvfIndex(std::size_t dim, IndexParams params, std::vector<float> centroids, std::vector<Leaf> leaves);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_leaves() const noexcept { return leaves_.size(); }
  std::size_t row_count() const noexcept { return row_count_; }
  const IndexParams& params() const noexcept { return params_; }
  const std::vector<float>& centroids() const noexcept { return centroids_; }
  const std::vector<Leaf>& leaves() const noexcept { return leaves_; }
  std::span<const float> centroid(std::size_t leaf) const noexcept {
    return {centroids_.data() + leaf * dim_, dim_};
  }

  // Query-time knobs; do not touch the partitioning.
  void set_search_params(std::size_t leaves_to_search, std::size_t reorder);

  // Top-k by dot product; descending score, ties by ascending row id. May
  // return fewer than k hits when the probed leaves hold fewer rows.
  std::vector<SearchHit> query(std::span<const float> h, std::size_t k) const;

  // Same data and partitioning; query-time params are not compared.
  bool same_partitioning(const IvfIndex& other) const;

 private:
  std::size_t dim_ = 0;
  std::size_t row_count_ = 0;
  IndexParams params_;
  std::vector<float> centroids_;
  std::vector<Leaf> leaves_;
};

// Seeded k-means++ on a sample, 20 Lloyd iterations, then every row is
// assigned to its nearest centroid (Euclidean). Throws TooFewRows.
IvfIndex build_index(const EmbeddingTable& table, const IndexParams& params);

std::vector<SearchHit> query_top_k(const IvfIndex& index, std::span<const float> h, std::size_t k);

// Full dot-product scan with the same ordering rules.
std::vector<SearchHit> exhaustive_top_k(const EmbeddingTable& table, std::span<const float> h, std::size_t k);

// Max-shifted softmax. Throws EmptyInput.
std::vector<double> softmax_over_candidates(std::span<const double> scores);

// Mean over queries of |approx top-k ∩ exact top-k| / k.
double recall_at_k(const IvfIndex& index, const EmbeddingTable& table,
                   std::span<const std::vector<float>> queries, std::size_t k);

// "DTIVF1", u32 dim, u32 num_leaves, u32 row_count, centroid floats, then per
// leaf: u32 leaf id, u32 count, count u32 row ids, count*dim floats. All
// little-endian.
std::string serialize_index(const IvfIndex& index);
IvfIndex deserialize_index(std::string_view binary);

void save_index(const IvfIndex& index, const std::string& path);
IvfIndex load_index(const std::string& path);

}  // namespace dyntok
