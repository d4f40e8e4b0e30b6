#include "trialmatch/service/config.h"

#include <cstdlib>
#include <json.hpp>
#include <set>

#include "trialmatch/common/error.h"
#include "trialmatch/common/http.h"
#include "trialmatch/datamodel/corpus.h"
#include "trialmatch/llm/mock_provider.h"

namespace trialmatch::service {

namespace {

using nlohmann::json;

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

std::optional<std::string> token_from(const char* name) { return env(name); }

}  // namespace

void validate(const ServiceConfig& c) {
  if (c.k_patient == 0 || c.k_space == 0) throw InvalidArgument("config: k_patient and k_space must be at least 1");
  if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) throw InvalidArgument("config: threshold must lie in [0, 1]");
  if (c.port < 0 || c.port > 65535) throw InvalidArgument("config: port out of range");
  if (c.worker_threads == 0) throw InvalidArgument("config: worker_threads must be at least 1");
  if (c.embedding_dimension == 0) throw InvalidArgument("config: embedding_dimension must be at least 1");
  if (c.llm_max_in_flight == 0) throw InvalidArgument("config: llm_max_in_flight must be at least 1");
}

ServiceConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  const auto j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("config is not a JSON object");
  static const std::set<std::string> kKnown = {
      "host", "port", "corpus_dir", "index_path", "vector_cache", "llm_cache_dir", "mock_fixtures", "endpoints",
      "llm_model", "embedding_dimension", "k_patient", "k_space", "threshold", "require_auth", "auth_token_env",
      "cors_origin", "worker_threads", "llm_max_in_flight", "mock_providers", "seed", "registry_base_url",
      "registry_cache_dir", "registry_rate_limit"};
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.count(key)) throw ParseError("config: unknown member \"" + key + "\"");
  }
  ServiceConfig c;
  auto path = [&](const char* key, std::optional<std::filesystem::path>& out) {
    if (!j.contains(key) || j[key].is_null()) return;
    std::filesystem::path p = j[key].get<std::string>();
    out = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    path("corpus_dir", c.corpus_dir);
    path("index_path", c.index_path);
    path("vector_cache", c.vector_cache);
    path("llm_cache_dir", c.llm_cache_dir);
    path("mock_fixtures", c.mock_fixtures);
    path("registry_cache_dir", c.registry_cache_dir);
    if (j.contains("endpoints")) {
      const auto& e = j["endpoints"];
      for (auto [key, slot] : {std::pair{"llm", &c.endpoints.llm}, std::pair{"embedding", &c.endpoints.embedding},
                               std::pair{"tagger", &c.endpoints.tagger}, std::pair{"checker", &c.endpoints.checker}}) {
        if (e.contains(key) && !e[key].is_null()) *slot = e[key].get<std::string>();
      }
    }
    c.llm_model = j.value("llm_model", c.llm_model);
    c.embedding_dimension = j.value("embedding_dimension", c.embedding_dimension);
    c.k_patient = j.value("k_patient", c.k_patient);
    c.k_space = j.value("k_space", c.k_space);
    c.threshold = j.value("threshold", c.threshold);
    c.require_auth = j.value("require_auth", c.require_auth);
    c.auth_token_env = j.value("auth_token_env", c.auth_token_env);
    c.cors_origin = j.value("cors_origin", c.cors_origin);
    c.worker_threads = j.value("worker_threads", c.worker_threads);
    c.llm_max_in_flight = j.value("llm_max_in_flight", c.llm_max_in_flight);
    c.mock_providers = j.value("mock_providers", c.mock_providers);
    c.seed = j.value("seed", c.seed);
    c.registry_base_url = j.value("registry_base_url", c.registry_base_url);
    c.registry_rate_limit = j.value("registry_rate_limit", c.registry_rate_limit);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

ServiceConfig load_config(const std::filesystem::path& file) {
  return parse_config(read_file(file), file.parent_path());
}

void apply_environment(ServiceConfig& c) {
  if (auto v = env("TRIALMATCH_LLM_URL")) c.endpoints.llm = v;
  if (auto v = env("TRIALMATCH_EMBEDDING_URL")) c.endpoints.embedding = v;
  if (auto v = env("TRIALMATCH_TAGGER_URL")) c.endpoints.tagger = v;
  if (auto v = env("TRIALMATCH_CHECKER_URL")) c.endpoints.checker = v;
}

Providers make_providers(const ServiceConfig& c) {
  Providers p;
  std::shared_ptr<http::Transport> transport;
  auto shared_transport = [&] {
    if (!transport) transport = http::make_transport();
    return transport;
  };
  const bool remote = !c.mock_providers;

  std::shared_ptr<llm::ChatProvider> chat;
  if (remote && c.endpoints.llm) {
    chat = std::make_shared<llm::HttpChatProvider>(llm::HttpProviderConfig{*c.endpoints.llm}, shared_transport());
  } else {
    auto mock = std::make_shared<llm::MockChatProvider>();
    if (c.mock_fixtures) mock->load_fixtures(*c.mock_fixtures);
    chat = mock;
  }
  if (c.llm_cache_dir) chat = std::make_shared<llm::CachingChatProvider>(chat, c.llm_cache_dir);
  p.llm = std::make_shared<llm::BoundedChatProvider>(chat, c.llm_max_in_flight);

  if (remote && c.endpoints.embedding) {
    p.embedder = std::make_shared<embedding::RemoteEmbedder>(*c.endpoints.embedding, c.embedding_dimension,
                                                             shared_transport(), token_from("TRIALMATCH_EMBEDDING_TOKEN"));
  } else {
    p.embedder = std::make_shared<embedding::MockEmbedder>(c.embedding_dimension);
  }
  if (remote && c.endpoints.tagger) {
    p.tagger = std::make_shared<condenser::RemoteTagger>(*c.endpoints.tagger, shared_transport(),
                                                         token_from("TRIALMATCH_TAGGER_TOKEN"));
  } else {
    p.tagger = std::make_shared<condenser::LexiconTagger>();
  }
  if (remote && c.endpoints.checker) {
    p.checker = std::make_shared<cascade::RemoteChecker>(*c.endpoints.checker, shared_transport(),
                                                         token_from("TRIALMATCH_CHECKER_TOKEN"));
  } else {
    p.checker = std::make_shared<cascade::LexicalChecker>();
  }
  return p;
}

}  // namespace trialmatch::service
