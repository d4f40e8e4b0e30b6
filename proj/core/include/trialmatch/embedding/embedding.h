#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trialmatch/common/http.h"

namespace trialmatch::embedding {

struct EmbeddingVector {
  std::vector<float> values;  // unit L2 norm
  std::string source_hash;    // sha256 hex of the embedded text

  bool operator==(const EmbeddingVector&) const = default;
};

// Raw batch embedder. Output need not be normalized; embed() normalizes.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  // Stable identity; vectors cached under one id are never served to another.
  virtual std::string id() const = 0;
  virtual std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) = 0;
};

// Token-hash bag embedder. Each content token seeds SplitMix64 with its
// FNV-1a hash; `dimension` draws mapped to [-1, 1) form a vector that is
// normalized. Token vectors are summed in double and the sum normalized.
// A text without content tokens is embedded as one token: the whole text.
class MockEmbedder final : public EmbeddingProvider {
 public:
  explicit MockEmbedder(std::size_t dimension = 256) : dimension_(dimension) {}
  std::size_t dimension() const override { return dimension_; }
  std::string id() const override { return "mock-hashbag-v1/" + std::to_string(dimension_); }
  std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
};

// Embedding service client. POST {base_url}/v1/embed {"texts": [...]} ->
// {"dimension": d, "vectors": [[...], ...]}.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  RemoteEmbedder(std::string base_url, std::size_t dimension, std::shared_ptr<http::Transport> transport,
                 std::optional<std::string> bearer_token = std::nullopt);
  std::size_t dimension() const override { return dimension_; }
  std::string id() const override { return "remote:" + base_url_ + "/" + std::to_string(dimension_); }
  std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override;

 private:
  std::string base_url_;
  std::size_t dimension_;
  std::shared_ptr<http::Transport> transport_;
  std::optional<std::string> token_;
};

// Content-addressed vector store for one provider. Safe for concurrent use.
// File layout in FORMATS.md ("TMVC").
class VectorCache {
 public:
  VectorCache(std::size_t dimension, std::string provider_id);

  std::optional<std::vector<float>> get(const std::string& source_hash) const;
  void put(const std::string& source_hash, std::vector<float> values);
  std::size_t size() const;

  // Written in ascending hash order; write-temp-then-rename.
  void save(const std::filesystem::path& path) const;
  // Throws ContractViolation when the file's dimension or provider id
  // differs from this cache's, ParseError on a corrupt file.
  void load(const std::filesystem::path& path);

  std::size_t dimension() const { return dimension_; }
  const std::string& provider_id() const { return provider_id_; }

 private:
  std::size_t dimension_;
  std::string provider_id_;
  mutable std::mutex mu_;
  std::map<std::string, std::vector<float>> entries_;
};

// Order-aligned unit vectors. Cache hits skip the provider. Throws
// InvalidArgument for an empty text, ContractViolation when the provider
// returns the wrong count, wrong dimension, or a zero vector.
std::vector<EmbeddingVector> embed(std::span<const std::string> texts, EmbeddingProvider& provider,
                                   VectorCache* cache = nullptr, std::size_t batch_size = 64);

EmbeddingVector embed_one(const std::string& text, EmbeddingProvider& provider, VectorCache* cache = nullptr);

// Dot product accumulated in double. Throws InvalidArgument on dimension
// mismatch.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Scales to unit norm in place; throws ContractViolation for a zero vector.
void normalize(std::vector<float>& v);

}  // namespace trialmatch::embedding
