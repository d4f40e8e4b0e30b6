#include "trialmatch/llm/provider.h"

#include <json.hpp>

#include <cstdlib>

#include "trialmatch/common/error.h"
#include "trialmatch/common/hash.h"
#include "trialmatch/datamodel/corpus.h"

namespace trialmatch::llm {

using nlohmann::json;

namespace {

json messages_json(const std::vector<ChatMessage>& messages) {
  json arr = json::array();
  for (const auto& m : messages) {
    arr.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  return arr;
}

json response_json(const LlmResponse& r) {
  return {{"text", r.text},
          {"prompt_tokens", r.prompt_tokens},
          {"completion_tokens", r.completion_tokens},
          {"latency_ms", r.latency.count()}};
}

LlmResponse response_from_json(const json& j) {
  LlmResponse r;
  r.text = j.at("text").get<std::string>();
  r.prompt_tokens = j.value("prompt_tokens", 0);
  r.completion_tokens = j.value("completion_tokens", 0);
  r.latency = std::chrono::milliseconds(j.value("latency_ms", 0));
  return r;
}

}  // namespace

std::string cache_key(const LlmRequest& request) {
  json j = {{"model", request.model},
            {"messages", messages_json(request.messages)},
            {"temperature", request.decoding.temperature},
            {"max_output_tokens", request.decoding.max_output_tokens}};
  if (request.decoding.seed) j["seed"] = *request.decoding.seed;
  return sha256_hex(j.dump());
}

HttpChatProvider::HttpChatProvider(HttpProviderConfig config,
                                   std::shared_ptr<http::Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.base_url.empty()) throw InvalidArgument("HttpChatProvider: empty base_url");
}

LlmResponse HttpChatProvider::complete(const LlmRequest& request) {
  json body = {{"model", request.model},
               {"messages", messages_json(request.messages)},
               {"temperature", request.decoding.temperature},
               {"max_tokens", request.decoding.max_output_tokens}};
  if (request.decoding.seed) body["seed"] = *request.decoding.seed;
  http::Headers headers;
  if (const char* token = std::getenv(config_.token_env.c_str()); token && *token) {
    headers.emplace_back("Authorization", std::string("Bearer ") + token);
  }
  const auto started = std::chrono::steady_clock::now();
  auto res = transport_->post(config_.base_url + "/v1/chat/completions", body.dump(),
                              "application/json", headers);
  if (res.status != 200) {
    throw TransportError("chat provider returned HTTP " + std::to_string(res.status) + ": " +
                         res.body.substr(0, 200));
  }
  auto j = json::parse(res.body, nullptr, false);
  if (j.is_discarded()) throw ContractViolation("chat provider returned non-JSON body");
  LlmResponse out;
  try {
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw ContractViolation("chat provider response lacks choices[0].message.content");
  }
  if (j.contains("usage")) {
    out.prompt_tokens = j["usage"].value("prompt_tokens", 0);
    out.completion_tokens = j["usage"].value("completion_tokens", 0);
  }
  out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  return out;
}

CachingChatProvider::CachingChatProvider(std::shared_ptr<ChatProvider> inner,
                                         std::optional<std::filesystem::path> dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

LlmResponse CachingChatProvider::complete(const LlmRequest& request) {
  const std::string key = cache_key(request);
  {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) {
      ++hits_;
      return it->second;
    }
    if (dir_) {
      auto file = *dir_ / (key + ".json");
      if (std::filesystem::exists(file)) {
        auto r = response_from_json(json::parse(read_file(file)));
        memory_.emplace(key, r);
        ++hits_;
        return r;
      }
    }
    ++misses_;
  }
  // Provider call happens outside the lock; two racing misses for the same
  // key both call through and store identical content.
  LlmResponse r = inner_->complete(request);
  std::lock_guard lock(mu_);
  memory_.emplace(key, r);
  if (dir_) write_file_atomic(*dir_ / (key + ".json"), response_json(r).dump());
  return r;
}

std::size_t CachingChatProvider::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::size_t CachingChatProvider::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

BoundedChatProvider::BoundedChatProvider(std::shared_ptr<ChatProvider> inner,
                                         std::size_t max_in_flight)
    : inner_(std::move(inner)), max_in_flight_(max_in_flight == 0 ? 1 : max_in_flight) {}

LlmResponse BoundedChatProvider::complete(const LlmRequest& request) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
  }
  struct Release {
    BoundedChatProvider* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  return inner_->complete(request);
}

LlmResponse FunctionChatProvider::complete(const LlmRequest& request) {
  ++calls_;
  return LlmResponse{fn_(request), 0, 0, std::chrono::milliseconds(0)};
}

}  // namespace trialmatch::llm
