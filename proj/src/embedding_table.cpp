#include "dyntok/embedding_table.hpp"

#include <cmath>
#include <limits>

#include "dyntok/byte_io.hpp"
#include "dyntok/corpus.hpp"
#include "dyntok/error.hpp"
#include "dyntok/io.hpp"

namespace dyntok {

namespace {
constexpr std::string_view kMagic = "DTEMB1";

void check_finite(std::span<const float> values, std::string_view token) {
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvariantViolation, "non-finite embedding value for '" + std::string(token) + "'");
    }
  }
}
}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::DomainError, "embedding dim must be positive");
}

EmbeddingTable::EmbeddingTable(Vocabulary vocab, std::size_t dim, std::vector<float> values)
    : vocab_(std::move(vocab)), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) throw Error(ErrorCode::DomainError, "embedding dim must be positive");
  if (values_.size() != vocab_.size() * dim_) {
    throw Error(ErrorCode::DimensionMismatch, "table holds " + std::to_string(values_.size()) +
                                                  " values, expected " + std::to_string(vocab_.size() * dim_));
  }
  for (std::size_t r = 0; r < vocab_.size(); ++r) check_finite(row(r), vocab_.tokens()[r]);
}

std::optional<std::span<const float>> EmbeddingTable::find(std::string_view token) const {
  const auto idx = vocab_.index_of(token);
  if (!idx) return std::nullopt;
  return row(*idx);
}

void EmbeddingTable::add_row(std::string token, std::span<const float> values) {
  if (values.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "row for '" + token + "' has " + std::to_string(values.size()) +
                                                  " entries, table dim is " + std::to_string(dim_));
  }
  if (vocab_.contains(token)) throw Error(ErrorCode::InvariantViolation, "duplicate embedding row '" + token + "'");
  check_finite(values, token);
  vocab_.add(std::move(token));
  values_.insert(values_.end(), values.begin(), values.end());
}

std::string serialize_table(const EmbeddingTable& table) {
  if (table.rows() > std::numeric_limits<std::uint32_t>::max() ||
      table.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::DomainError, "table too large for the DTEMB1 format");
  }
  std::string out;
  out.reserve(kMagic.size() + 8 + table.values().size() * 4);
  out.append(kMagic);
  bytes::put_u32(out, static_cast<std::uint32_t>(table.rows()));
  bytes::put_u32(out, static_cast<std::uint32_t>(table.dim()));
  for (float v : table.values()) bytes::put_f32(out, v);
  return out;
}

EmbeddingTable deserialize_table(std::string_view binary, const Vocabulary& row_order) {
  bytes::Reader in(binary);
  in.expect_magic(kMagic);
  const std::uint32_t vocab_size = in.u32("vocab_size");
  const std::uint32_t dim = in.u32("dim");
  if (dim == 0) throw format_error(in.offset() - 4, "dim must be positive");
  if (vocab_size != row_order.size()) {
    throw Error(ErrorCode::DimensionMismatch, "binary declares " + std::to_string(vocab_size) +
                                                  " rows but the vocabulary lists " +
                                                  std::to_string(row_order.size()) + " tokens");
  }
  const std::size_t count = static_cast<std::size_t>(vocab_size) * dim;
  in.require(count * 4, "float block");
  std::vector<float> values(count);
  for (auto& v : values) v = in.f32("float block");
  if (in.remaining() != 0) throw format_error(in.offset(), "trailing bytes after float block");
  return EmbeddingTable(row_order, dim, std::move(values));
}

void save_table(const EmbeddingTable& table, const std::string& binary_path, const std::string& vocab_path) {
  write_file_atomic(binary_path, serialize_table(table));
  write_file_atomic(vocab_path, format_vocabulary(Vocabulary(table.vocabulary().tokens())));
}

EmbeddingTable load_table(const std::string& binary_path, const std::string& vocab_path) {
  return deserialize_table(read_file(binary_path), read_vocabulary(vocab_path));
}

}  // namespace dyntok
