#include "trialmatch/embedding/embedding.h"

#include <cmath>
#include <json.hpp>
#include <sstream>

#include "internal/binio.h"
#include "trialmatch/common/error.h"
#include "trialmatch/common/hash.h"
#include "trialmatch/common/text.h"
#include "trialmatch/datamodel/corpus.h"

namespace trialmatch::embedding {

namespace {

constexpr char kCacheMagic[5] = "TMVC";
constexpr std::uint8_t kCacheVersion = 1;

std::string hex_to_bytes(const std::string& hex) {
  if (hex.size() != 64) throw InvalidArgument("source hash must be 64 hex characters");
  std::string out(32, '\0');
  for (std::size_t i = 0; i < 32; ++i) out[i] = static_cast<char>(std::stoi(hex.substr(2 * i, 2), nullptr, 16));
  return out;
}

std::string bytes_to_hex(const std::string& bytes) {
  static const char* kDigits = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

}  // namespace

void normalize(std::vector<float>& v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw ContractViolation("cannot normalize a zero or non-finite vector");
  for (auto& x : v) x = static_cast<float>(x / norm);
}

std::vector<std::vector<float>> MockEmbedder::embed_batch(std::span<const std::string> texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  std::vector<double> acc(dimension_), tok(dimension_);
  for (const auto& t : texts) {
    auto tokens = text::content_tokens(t);
    if (tokens.empty()) tokens.push_back(t);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& token : tokens) {
      std::uint64_t state = fnv1a64(token);
      double sq = 0.0;
      for (std::size_t i = 0; i < dimension_; ++i) {
        const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
        tok[i] = 2.0 * u - 1.0;
        sq += tok[i] * tok[i];
      }
      const double norm = std::sqrt(sq);
      for (std::size_t i = 0; i < dimension_; ++i) acc[i] += tok[i] / norm;
    }
    double sq = 0.0;
    for (double x : acc) sq += x * x;
    const double norm = std::sqrt(sq);
    std::vector<float> v(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) v[i] = static_cast<float>(acc[i] / norm);
    out.push_back(std::move(v));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(std::string base_url, std::size_t dimension,
                               std::shared_ptr<http::Transport> transport, std::optional<std::string> bearer_token)
    : base_url_(std::move(base_url)), dimension_(dimension), transport_(std::move(transport)),
      token_(std::move(bearer_token)) {}

std::vector<std::vector<float>> RemoteEmbedder::embed_batch(std::span<const std::string> texts) {
  nlohmann::json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  http::Headers headers;
  if (token_) headers.emplace_back("Authorization", "Bearer " + *token_);
  auto res = transport_->post(base_url_ + "/v1/embed", body.dump(), "application/json", headers);
  if (res.status != 200) throw TransportError("embedding service returned HTTP " + std::to_string(res.status));
  auto j = nlohmann::json::parse(res.body, nullptr, false);
  if (j.is_discarded() || !j.contains("vectors") || !j["vectors"].is_array()) {
    throw ContractViolation("embedding service response lacks a vectors array");
  }
  if (j.contains("dimension") && j["dimension"].get<std::size_t>() != dimension_) {
    throw ContractViolation("embedding service declared dimension " + j["dimension"].dump() + ", expected " +
                            std::to_string(dimension_));
  }
  std::vector<std::vector<float>> out;
  for (const auto& row : j["vectors"]) out.push_back(row.get<std::vector<float>>());
  return out;
}

VectorCache::VectorCache(std::size_t dimension, std::string provider_id)
    : dimension_(dimension), provider_id_(std::move(provider_id)) {}

std::optional<std::vector<float>> VectorCache::get(const std::string& source_hash) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(source_hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void VectorCache::put(const std::string& source_hash, std::vector<float> values) {
  if (values.size() != dimension_) throw ContractViolation("vector cache: dimension mismatch");
  std::lock_guard lock(mu_);
  entries_[source_hash] = std::move(values);
}

std::size_t VectorCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void VectorCache::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  out.write(kCacheMagic, 4);
  binio::put_le<std::uint8_t>(out, kCacheVersion);
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dimension_));
  binio::put_string(out, provider_id_);
  std::lock_guard lock(mu_);
  binio::put_le<std::uint64_t>(out, entries_.size());
  for (const auto& [hash, values] : entries_) {
    out << hex_to_bytes(hash);
    for (float f : values) binio::put_f32(out, f);
  }
  write_file_atomic(path, out.str());
}

void VectorCache::load(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  binio::expect_magic(in, kCacheMagic);
  if (binio::get_le<std::uint8_t>(in) != kCacheVersion) throw ParseError("unsupported vector cache version");
  const auto dim = binio::get_le<std::uint32_t>(in);
  const auto provider = binio::get_string(in);
  if (dim != dimension_ || provider != provider_id_) {
    throw ContractViolation("vector cache " + path.string() + " belongs to " + provider + "/" + std::to_string(dim));
  }
  const auto count = binio::get_le<std::uint64_t>(in);
  std::map<std::string, std::vector<float>> loaded;
  for (std::uint64_t r = 0; r < count; ++r) {
    std::string raw(32, '\0');
    if (!in.read(raw.data(), 32)) throw ParseError("truncated vector cache");
    std::vector<float> v(dim);
    for (auto& f : v) f = binio::get_f32(in);
    loaded.emplace(bytes_to_hex(raw), std::move(v));
  }
  std::lock_guard lock(mu_);
  for (auto& [k, v] : loaded) entries_[k] = std::move(v);
}

std::vector<EmbeddingVector> embed(std::span<const std::string> texts, EmbeddingProvider& provider,
                                   VectorCache* cache, std::size_t batch_size) {
  if (batch_size == 0) throw InvalidArgument("embed: batch_size must be positive");
  if (cache && (cache->dimension() != provider.dimension() || cache->provider_id() != provider.id())) {
    throw ContractViolation("embed: cache belongs to a different provider");
  }
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) throw InvalidArgument("embed: empty text at position " + std::to_string(i));
    out[i].source_hash = sha256_hex(texts[i]);
    if (cache) {
      if (auto hit = cache->get(out[i].source_hash)) {
        out[i].values = std::move(*hit);
        continue;
      }
    }
    pending.push_back(i);
  }
  for (std::size_t lo = 0; lo < pending.size(); lo += batch_size) {
    const std::size_t hi = std::min(pending.size(), lo + batch_size);
    std::vector<std::string> batch;
    for (std::size_t j = lo; j < hi; ++j) batch.push_back(texts[pending[j]]);
    auto vectors = provider.embed_batch(batch);
    if (vectors.size() != batch.size()) throw ContractViolation("embedding provider returned wrong vector count");
    for (std::size_t j = lo; j < hi; ++j) {
      auto& v = vectors[j - lo];
      if (v.size() != provider.dimension()) {
        throw ContractViolation("embedding provider returned dimension " + std::to_string(v.size()) + ", declared " +
                                std::to_string(provider.dimension()));
      }
      normalize(v);
      auto& slot = out[pending[j]];
      if (cache) cache->put(slot.source_hash, v);
      slot.values = std::move(v);
    }
  }
  return out;
}

EmbeddingVector embed_one(const std::string& text_in, EmbeddingProvider& provider, VectorCache* cache) {
  return std::move(embed(std::span<const std::string>(&text_in, 1), provider, cache).front());
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return dot;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) { return cosine(a.values, b.values); }

}  // namespace trialmatch::embedding
