#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "trialmatch/common/http.h"
#include "trialmatch/llm/prompt.h"

namespace trialmatch::llm {

struct DecodingParams {
  double temperature = 0.0;
  int max_output_tokens = 2048;
  std::optional<std::uint64_t> seed;

  bool operator==(const DecodingParams&) const = default;
};

struct LlmRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  DecodingParams decoding;

  // Routing metadata for offline providers. Not part of the wire request and
  // not part of the cache key.
  std::optional<TemplateId> template_id;
  Bindings bindings;
};

struct LlmResponse {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  std::chrono::milliseconds latency{0};
};

// sha256 over the canonical JSON of (model, messages, decoding).
std::string cache_key(const LlmRequest& request);

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual LlmResponse complete(const LlmRequest& request) = 0;
  virtual std::string name() const = 0;
};

// OpenAI-style chat completion client:
// POST {base_url}/v1/chat/completions, bearer token read from `token_env`.
struct HttpProviderConfig {
  std::string base_url;
  std::string token_env = "TRIALMATCH_LLM_TOKEN";
  std::chrono::milliseconds timeout = std::chrono::minutes(5);
};

class HttpChatProvider final : public ChatProvider {
 public:
  HttpChatProvider(HttpProviderConfig config, std::shared_ptr<http::Transport> transport);
  LlmResponse complete(const LlmRequest& request) override;
  std::string name() const override { return "http:" + config_.base_url; }

 private:
  HttpProviderConfig config_;
  std::shared_ptr<http::Transport> transport_;
};

// Memoizes responses by cache_key(). With a directory, each response is
// persisted as <dir>/<key>.json (write-temp-then-rename) and reloaded on
// demand, so a warm cache needs no provider calls across runs.
class CachingChatProvider final : public ChatProvider {
 public:
  explicit CachingChatProvider(std::shared_ptr<ChatProvider> inner,
                               std::optional<std::filesystem::path> dir = std::nullopt);
  LlmResponse complete(const LlmRequest& request) override;
  std::string name() const override { return inner_->name(); }

  std::size_t hits() const;
  std::size_t misses() const;

 private:
  std::shared_ptr<ChatProvider> inner_;
  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  std::map<std::string, LlmResponse> memory_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// Caps concurrent calls into the wrapped provider.
class BoundedChatProvider final : public ChatProvider {
 public:
  BoundedChatProvider(std::shared_ptr<ChatProvider> inner, std::size_t max_in_flight);
  LlmResponse complete(const LlmRequest& request) override;
  std::string name() const override { return inner_->name(); }

 private:
  std::shared_ptr<ChatProvider> inner_;
  std::size_t max_in_flight_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
};

// Provider backed by a callable; handy for scripted responses.
class FunctionChatProvider final : public ChatProvider {
 public:
  using Fn = std::function<std::string(const LlmRequest&)>;
  explicit FunctionChatProvider(Fn fn, std::string name = "function") : fn_(std::move(fn)), name_(std::move(name)) {}
  LlmResponse complete(const LlmRequest& request) override;
  std::string name() const override { return name_; }
  std::size_t calls() const { return calls_; }

 private:
  Fn fn_;
  std::string name_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace trialmatch::llm
