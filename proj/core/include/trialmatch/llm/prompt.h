#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace trialmatch::llm {

enum class TemplateId {
  kSpaceExtraction,
  kPatientSummarization,
  kReasonableConsideration,
  kOncotreeOrgan,
  kSynthNote,
  kSynthImaging,
  kSynthPathology,
  kSynthHistory,
  // Sentence-level concept tagging for tagger training data.
  kSentenceTagging,
};

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(TemplateId id);
std::string_view to_string(Role role);
TemplateId parse_template_id(std::string_view name);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

using Bindings = std::map<std::string, std::string>;

struct TemplateMessage {
  Role role;
  std::string_view text;  // raw resource bytes with {{placeholder}} markers
};

struct PromptTemplate {
  TemplateId id;
  std::vector<TemplateMessage> messages;
  std::vector<std::string> placeholders;  // sorted, unique
};

const PromptTemplate& prompt_template(TemplateId id);
const std::vector<TemplateId>& all_templates();

// Substitutes every {{name}} marker with bindings[name] in one left-to-right
// pass; bound text is never rescanned. Throws InvalidArgument naming the
// placeholder when a binding is missing, or naming the key when a binding
// does not correspond to any placeholder.
std::vector<ChatMessage> render_prompt(TemplateId id, const Bindings& bindings);

// Raw resource bytes by file stem ("space_extraction.system").
std::string_view prompt_resource(std::string_view name);
std::vector<std::string_view> prompt_resource_names();

}  // namespace trialmatch::llm
