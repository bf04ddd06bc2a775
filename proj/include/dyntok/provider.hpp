#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dyntok/corpus.hpp"
#include "dyntok/embedding_table.hpp"
#include "dyntok/lru_cache.hpp"

namespace dyntok {

enum class ProviderKind { TableLookup, Fvt, ExternalTable };

// Source of embeddings for arbitrary token strings.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual ProviderKind kind() const noexcept = 0;
  // Stable identity; part of every cache key.
  virtual const std::string& id() const noexcept = 0;
  virtual std::size_t dim() const noexcept = 0;
  virtual bool covers(std::string_view token) const = 0;
  virtual std::vector<float> embed(std::string_view token) const = 0;
};

class TableLookupProvider final : public EmbeddingProvider {
 public:
  explicit TableLookupProvider(std::shared_ptr<const EmbeddingTable> table, std::string id = "table");

  ProviderKind kind() const noexcept override { return ProviderKind::TableLookup; }
  const std::string& id() const noexcept override { return id_; }
  std::size_t dim() const noexcept override { return table_->dim(); }
  bool covers(std::string_view token) const override;
  std::vector<float> embed(std::string_view token) const override;

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  std::string id_;
};

// Vectors produced offline by an external embedding network. Coverage is
// exactly the ingested token set.
class ExternalTableProvider final : public EmbeddingProvider {
 public:
  ExternalTableProvider(std::shared_ptr<const EmbeddingTable> table, std::string source);

  ProviderKind kind() const noexcept override { return ProviderKind::ExternalTable; }
  const std::string& id() const noexcept override { return id_; }
  std::size_t dim() const noexcept override { return table_->dim(); }
  bool covers(std::string_view token) const override;
  std::vector<float> embed(std::string_view token) const override;

  const std::vector<std::string>& covered_tokens() const noexcept { return table_->vocabulary().tokens(); }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  std::string id_;
};

// Fast Vocabulary Transfer: mean of the base embeddings of the token's base
// tokenization.
class FvtProvider final : public EmbeddingProvider {
 public:
  FvtProvider(const Vocabulary& base_model, std::shared_ptr<const EmbeddingTable> base_table,
              std::string id = "fvt");

  ProviderKind kind() const noexcept override { return ProviderKind::Fvt; }
  const std::string& id() const noexcept override { return id_; }
  std::size_t dim() const noexcept override { return base_table_->dim(); }
  bool covers(std::string_view token) const override;
  std::vector<float> embed(std::string_view token) const override;

  std::vector<std::string> decompose(std::string_view token) const;

 private:
  BpeTokenizer tokenizer_;
  std::shared_ptr<const EmbeddingTable> base_table_;
  std::string id_;
};

std::vector<float> fvt_compose(std::string_view token, const Vocabulary& base_model, const EmbeddingTable& base_table);

struct ProviderKeyHash {
  std::size_t operator()(const std::pair<std::string, std::string>& k) const noexcept;
};

using EmbeddingCache =
    LruCache<std::pair<std::string, std::string>, std::vector<float>, ProviderKeyHash>;

// Cached provider call; the key pairs provider identity with the token.
std::vector<float> cached_embed(EmbeddingCache& cache, const EmbeddingProvider& provider, std::string_view token);

// Embeds every token of `vocab` (in order), consulting the cache first.
// Failures for individual tokens are collected and reported together.
EmbeddingTable embed_batch_vocab(std::span<const std::string> vocab, const EmbeddingProvider& provider,
                                 EmbeddingCache& cache);

}  // namespace dyntok
