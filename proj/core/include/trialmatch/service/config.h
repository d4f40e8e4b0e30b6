#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "trialmatch/cascade/checker.h"
#include "trialmatch/condenser/condenser.h"
#include "trialmatch/embedding/embedding.h"
#include "trialmatch/llm/provider.h"

namespace trialmatch::service {

struct ProviderEndpoints {
  std::optional<std::string> llm;        // OpenAI-style chat completions base URL
  std::optional<std::string> embedding;  // POST /v1/embed
  std::optional<std::string> tagger;     // POST /v1/tag
  std::optional<std::string> checker;    // POST /v1/check
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> corpus_dir;
  std::optional<std::filesystem::path> index_path;
  std::optional<std::filesystem::path> vector_cache;
  std::optional<std::filesystem::path> llm_cache_dir;
  std::optional<std::filesystem::path> mock_fixtures;
  ProviderEndpoints endpoints;
  std::string llm_model = "mock";
  std::size_t embedding_dimension = 256;
  std::size_t k_patient = 10;
  std::size_t k_space = 20;
  double threshold = 0.5;
  bool require_auth = false;
  std::string auth_token_env = "TRIALMATCH_API_TOKEN";
  std::string cors_origin = "*";
  std::size_t worker_threads = 4;
  std::size_t llm_max_in_flight = 4;
  bool mock_providers = false;  // ignore every endpoint
  std::uint64_t seed = 0;
  std::string registry_base_url = "https://clinicaltrials.gov";
  std::optional<std::filesystem::path> registry_cache_dir;
  double registry_rate_limit = 2.0;
};

// Throws InvalidArgument when k_patient or k_space is 0, threshold lies
// outside [0, 1], the port is outside [0, 65535] or worker_threads is 0.
void validate(const ServiceConfig& config);

// JSON object whose members mirror ServiceConfig (FORMATS.md). Unknown
// members are rejected. Relative paths resolve against `base_dir`.
ServiceConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ServiceConfig load_config(const std::filesystem::path& file);

// TRIALMATCH_LLM_URL, TRIALMATCH_EMBEDDING_URL, TRIALMATCH_TAGGER_URL and
// TRIALMATCH_CHECKER_URL override the configured endpoints when set.
void apply_environment(ServiceConfig& config);

struct Providers {
  std::shared_ptr<llm::ChatProvider> llm;
  std::shared_ptr<embedding::EmbeddingProvider> embedder;
  std::shared_ptr<condenser::SentenceTagger> tagger;
  std::shared_ptr<cascade::PairChecker> checker;
};

// Remote clients for configured endpoints; offline mocks (rule-based chat,
// hash-bag embedder, lexicon tagger, lexical checker) otherwise.
Providers make_providers(const ServiceConfig& config);

}  // namespace trialmatch::service
