#include "dyntok/provider.hpp"

#include "dyntok/error.hpp"
#include "dyntok/simd/kernels.hpp"

namespace dyntok {

namespace {
std::vector<float> lookup(const EmbeddingTable& table, std::string_view token) {
  auto row = table.find(token);
  if (!row) throw Error(ErrorCode::MissingEmbedding, "no embedding for '" + std::string(token) + "'");
  return {row->begin(), row->end()};
}
}  // namespace

TableLookupProvider::TableLookupProvider(std::shared_ptr<const EmbeddingTable> table, std::string id)
    : table_(std::move(table)), id_(std::move(id)) {}

bool TableLookupProvider::covers(std::string_view token) const { return table_->vocabulary().contains(token); }

std::vector<float> TableLookupProvider::embed(std::string_view token) const { return lookup(*table_, token); }

ExternalTableProvider::ExternalTableProvider(std::shared_ptr<const EmbeddingTable> table, std::string source)
    : table_(std::move(table)), id_("external:" + std::move(source)) {}

bool ExternalTableProvider::covers(std::string_view token) const { return table_->vocabulary().contains(token); }

std::vector<float> ExternalTableProvider::embed(std::string_view token) const { return lookup(*table_, token); }

FvtProvider::FvtProvider(const Vocabulary& base_model, std::shared_ptr<const EmbeddingTable> base_table,
                         std::string id)
    : tokenizer_(base_model), base_table_(std::move(base_table)), id_(std::move(id)) {}

std::vector<std::string> FvtProvider::decompose(std::string_view token) const {
  return tokenizer_.tokenize_word(token);
}

bool FvtProvider::covers(std::string_view token) const {
  try {
    for (const auto& piece : decompose(token)) {
      if (!base_table_->vocabulary().contains(piece)) return false;
    }
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<float> FvtProvider::embed(std::string_view token) const {
  if (token.empty()) throw Error(ErrorCode::DomainError, "cannot embed an empty token");
  const auto pieces = decompose(token);
  std::vector<float> mean(base_table_->dim(), 0.0f);
  for (const auto& piece : pieces) {
    auto row = base_table_->find(piece);
    if (!row) throw Error(ErrorCode::MissingEmbedding, "no base embedding for subword '" + piece + "'");
    simd::accumulate(mean, *row);
  }
  if (pieces.size() > 1) simd::scale(mean, 1.0f / static_cast<float>(pieces.size()));
  return mean;
}

std::vector<float> fvt_compose(std::string_view token, const Vocabulary& base_model, const EmbeddingTable& base_table) {
  // Non-owning alias; the provider does not outlive this call.
  std::shared_ptr<const EmbeddingTable> alias(std::shared_ptr<const EmbeddingTable>{}, &base_table);
  return FvtProvider(base_model, alias).embed(token);
}

std::size_t ProviderKeyHash::operator()(const std::pair<std::string, std::string>& k) const noexcept {
  const std::size_t h1 = std::hash<std::string>{}(k.first);
  const std::size_t h2 = std::hash<std::string>{}(k.second);
  return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
}

std::vector<float> cached_embed(EmbeddingCache& cache, const EmbeddingProvider& provider, std::string_view token) {
  return cache.get_or_compute({provider.id(), std::string(token)},
                              [&](const auto& key) { return provider.embed(key.second); });
}

EmbeddingTable embed_batch_vocab(std::span<const std::string> vocab, const EmbeddingProvider& provider,
                                 EmbeddingCache& cache) {
  EmbeddingTable table(provider.dim());
  std::string failures;
  std::optional<ErrorCode> first_code;
  std::size_t failed = 0;
  for (const auto& token : vocab) {
    if (table.vocabulary().contains(token)) continue;
    try {
      table.add_row(token, cached_embed(cache, provider, token));
    } catch (const Error& e) {
      if (!first_code) first_code = e.code();
      ++failed;
      if (!failures.empty()) failures += "; ";
      failures += "'" + token + "': " + e.what();
    }
  }
  if (first_code) {
    throw Error(*first_code, std::to_string(failed) + " token(s) could not be embedded: " + failures);
  }
  return table;
}

}  // namespace dyntok
