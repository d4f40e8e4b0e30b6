#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "trialmatch/llm/provider.h"

namespace trialmatch::llm {

// Deterministic offline chat provider. Requests must carry template routing
// (template_id + bindings). A response is looked up by fixture_key() first;
// on a miss the rule-based responder for the template answers. Rules work
// off the oncology lexicon and are described in FORMATS.md.
class MockChatProvider final : public ChatProvider {
 public:
  MockChatProvider() = default;

  // Fixture file: JSONL lines {"key": "<fixture_key>", "response": "..."}.
  void load_fixtures(const std::filesystem::path& path);
  void add_fixture(std::string key, std::string response);

  LlmResponse complete(const LlmRequest& request) override;
  std::string name() const override { return "mock"; }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> fixtures_;
};

// Hex FNV-1a over template id, bindings (sorted, key=value, 0x1f-separated)
// and the decoding seed.
std::string fixture_key(TemplateId id, const Bindings& bindings, std::optional<std::uint64_t> seed);

// The rule-based response the mock gives on a fixture miss.
std::string mock_response(TemplateId id, const Bindings& bindings, std::optional<std::uint64_t> seed);

}  // namespace trialmatch::llm
