#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dyntok/token.hpp"

namespace dyntok {

// Dense float32 rows keyed by token string; row order follows the vocabulary.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim);
  EmbeddingTable(Vocabulary vocab, std::size_t dim, std::vector<float> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return vocab_.size(); }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const std::vector<float>& values() const noexcept { return values_; }

  std::span<const float> row(std::size_t index) const noexcept {
    return {values_.data() + index * dim_, dim_};
  }
  std::optional<std::span<const float>> find(std::string_view token) const;

  // Appends a row; throws on duplicate token, wrong width, or non-finite values.
  void add_row(std::string token, std::span<const float> values);

  bool operator==(const EmbeddingTable&) const = default;

 private:
  Vocabulary vocab_;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

// Binary layout: "DTEMB1", u32 vocab_size, u32 dim, vocab_size*dim float32,
// all little-endian. Row order comes from a companion vocabulary JSON.
std::string serialize_table(const EmbeddingTable& table);
EmbeddingTable deserialize_table(std::string_view binary, const Vocabulary& row_order);

void save_table(const EmbeddingTable& table, const std::string& binary_path, const std::string& vocab_path);
EmbeddingTable load_table(const std::string& binary_path, const std::string& vocab_path);

}  // namespace dyntok
