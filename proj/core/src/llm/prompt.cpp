#include "trialmatch/llm/prompt.h"

#include <algorithm>
#include <array>
#include <set>

#include "internal/prompt_resources.h"
#include "trialmatch/common/error.h"

namespace trialmatch::llm {

namespace {

constexpr std::array<std::pair<TemplateId, std::string_view>, 9> kTemplateNames{{
    {TemplateId::kSpaceExtraction, "space_extraction"},
    {TemplateId::kPatientSummarization, "patient_summarization"},
    {TemplateId::kReasonableConsideration, "reasonable_consideration"},
    {TemplateId::kOncotreeOrgan, "oncotree_organ"},
    {TemplateId::kSynthNote, "synth_note"},
    {TemplateId::kSynthImaging, "synth_imaging"},
    {TemplateId::kSynthPathology, "synth_pathology"},
    {TemplateId::kSynthHistory, "synth_history"},
    {TemplateId::kSentenceTagging, "sentence_tagging"},
}};

std::vector<std::string> scan_placeholders(std::string_view text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    auto end = text.find("}}", pos + 2);
    if (end == std::string_view::npos) break;
    names.emplace_back(text.substr(pos + 2, end - pos - 2));
    pos = end + 2;
  }
  return names;
}

PromptTemplate load_template(TemplateId id) {
  PromptTemplate t{id, {}, {}};
  const std::string stem(to_string(id));
  std::set<std::string> names;
  for (auto [suffix, role] : {std::pair{".system", Role::kSystem}, std::pair{".user", Role::kUser}}) {
    auto text = prompt_resource(stem + suffix);
    if (text.data() == nullptr) continue;
    t.messages.push_back({role, text});
    for (auto& n : scan_placeholders(text)) names.insert(n);
  }
  if (t.messages.empty()) throw Error("no prompt resources for template " + stem);
  t.placeholders.assign(names.begin(), names.end());
  return t;
}

}  // namespace

std::string_view to_string(TemplateId id) {
  for (const auto& [value, name] : kTemplateNames) {
    if (value == id) return name;
  }
  return "?";
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

TemplateId parse_template_id(std::string_view name) {
  for (const auto& [value, n] : kTemplateNames) {
    if (n == name) return value;
  }
  throw InvalidArgument("unknown template '" + std::string(name) + "'");
}

const std::vector<TemplateId>& all_templates() {
  static const std::vector<TemplateId> kAll = [] {
    std::vector<TemplateId> v;
    for (const auto& [value, name] : kTemplateNames) v.push_back(value);
    return v;
  }();
  return kAll;
}

const PromptTemplate& prompt_template(TemplateId id) {
  static const std::vector<PromptTemplate> kTemplates = [] {
    std::vector<PromptTemplate> v;
    for (auto t : all_templates()) v.push_back(load_template(t));
    return v;
  }();
  for (const auto& t : kTemplates) {
    if (t.id == id) return t;
  }
  throw InvalidArgument("unknown template id");
}

std::vector<ChatMessage> render_prompt(TemplateId id, const Bindings& bindings) {
  const auto& tmpl = prompt_template(id);
  for (const auto& [key, value] : bindings) {
    if (!std::binary_search(tmpl.placeholders.begin(), tmpl.placeholders.end(), key)) {
      throw InvalidArgument("render_prompt(" + std::string(to_string(id)) +
                            "): unexpected binding '" + key + "'");
    }
  }
  std::vector<ChatMessage> out;
  for (const auto& m : tmpl.messages) {
    std::string rendered;
    std::string_view text = m.text;
    std::size_t pos = 0;
    while (true) {
      auto open = text.find("{{", pos);
      if (open == std::string_view::npos) break;
      auto close = text.find("}}", open + 2);
      if (close == std::string_view::npos) break;
      std::string name(text.substr(open + 2, close - open - 2));
      auto it = bindings.find(name);
      if (it == bindings.end()) {
        throw InvalidArgument("render_prompt(" + std::string(to_string(id)) +
                              "): missing binding for placeholder '" + name + "'");
      }
      rendered.append(text.substr(pos, open - pos));
      rendered.append(it->second);
      pos = close + 2;
    }
    rendered.append(text.substr(pos));
    out.push_back({m.role, std::move(rendered)});
  }
  return out;
}

std::string_view prompt_resource(std::string_view name) {
  for (const auto& r : resources::all()) {
    if (r.name == name) return r.bytes;
  }
  return {};
}

std::vector<std::string_view> prompt_resource_names() {
  std::vector<std::string_view> names;
  for (const auto& r : resources::all()) names.push_back(r.name);
  return names;
}

}  // namespace trialmatch::llm
