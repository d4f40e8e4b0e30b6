#include "trialmatch/llm/gateway.h"

#include <algorithm>

#include "trialmatch/common/error.h"
#include "trialmatch/common/text.h"

namespace trialmatch::llm {

namespace {

LlmRequest make_request(TemplateId id, Bindings bindings, const GatewayOptions& options) {
  LlmRequest r;
  r.model = options.model;
  r.messages = render_prompt(id, bindings);
  r.decoding = options.decoding;
  r.decoding.max_output_tokens = max_output_tokens(id);
  r.template_id = id;
  r.bindings = std::move(bindings);
  return r;
}

// Calls the provider, and once more with a format reminder if `parse`
// rejects the first answer. Returns the parsed value and the final raw text.
template <typename Parse>
auto call_with_retry(LlmRequest request, ChatProvider& provider, Parse parse)
    -> std::pair<decltype(parse(std::string())), std::string> {
  auto first = provider.complete(request);
  auto parsed = parse(first.text);
  if (parsed) return {std::move(parsed), first.text};
  request.messages.push_back({Role::kAssistant, first.text});
  request.messages.push_back({Role::kUser, std::string(format_reminder(*request.template_id))});
  auto second = provider.complete(request);
  return {parse(second.text), second.text};
}

}  // namespace

int max_output_tokens(TemplateId id) {
  switch (id) {
    case TemplateId::kOncotreeOrgan:
      return 16;
    case TemplateId::kReasonableConsideration:
    case TemplateId::kSentenceTagging:
      return 1024;
    case TemplateId::kSynthNote:
    case TemplateId::kSynthImaging:
    case TemplateId::kSynthPathology:
    case TemplateId::kSynthHistory:
      return 4096;
    default:
      return 2048;
  }
}

std::string_view format_reminder(TemplateId id) {
  switch (id) {
    case TemplateId::kSpaceExtraction:
      return "Format reminder: reply only with a numbered list of trial spaces, one per line, each "
             "starting with \"1. \", \"2. \" and so on.";
    case TemplateId::kReasonableConsideration:
      return "Format reminder: finish with the one-word answer \"Yes!\" or \"No!\", including the "
             "exclamation point.";
    case TemplateId::kOncotreeOrgan:
      return "Format reminder: reply with exactly one organ name from the list and nothing else.";
    case TemplateId::kSentenceTagging:
      return "Format reminder: one line per sentence, \"<number>: <concepts>\" or \"<number>: none\".";
    default:
      return "Format reminder: follow the requested output format exactly.";
  }
}

std::vector<TrialSpace> extract_trial_spaces(const TrialRecord& trial, ChatProvider& provider,
                                             const GatewayOptions& options) {
  if (text::trim(trial.eligibility_text).empty()) {
    throw InvalidArgument("extract_trial_spaces: empty eligibility text for " + trial.nct_id);
  }
  auto request = make_request(TemplateId::kSpaceExtraction, {{"trial", trial.eligibility_text}}, options);
  auto [spaces, raw] = call_with_retry(std::move(request), provider, [&](const std::string& t) {
    auto s = parse_space_list(t, trial.nct_id);
    return s.empty() ? std::optional<std::vector<TrialSpace>>() : std::optional(std::move(s));
  });
  if (!spaces) throw ExtractionError("no numbered trial spaces in response for " + trial.nct_id, raw);
  return std::move(*spaces);
}

PatientSummary summarize_patient(const condenser::CondensedRecord& condensed, ChatProvider& provider,
                                 SummarySource source, const GatewayOptions& options) {
  if (text::trim(condensed.text).empty()) {
    throw InvalidArgument("summarize_patient: empty condensed record for " + condensed.patient_id);
  }
  auto response =
      provider.complete(make_request(TemplateId::kPatientSummarization, {{"excerpt", condensed.text}}, options));
  if (text::trim(response.text).empty()) {
    throw SummarizationError("empty summary for " + condensed.patient_id);
  }
  PatientSummary s;
  s.patient_id = condensed.patient_id;
  s.anchor_date = condensed.as_of_date;
  s.source = source;
  s.text = std::move(response.text);
  return s;
}

Decision check_reasonable(std::string_view summary_text, std::string_view space_text, ChatProvider& provider,
                          const GatewayOptions& options) {
  if (text::trim(summary_text).empty() || text::trim(space_text).empty()) {
    throw InvalidArgument("check_reasonable: summary and space text must be non-empty");
  }
  auto request = make_request(
      TemplateId::kReasonableConsideration,
      {{"trial_summary", std::string(space_text)}, {"patient_summary", std::string(summary_text)}}, options);
  auto [value, raw] = call_with_retry(std::move(request), provider, [](const std::string& t) { return parse_decision(t); });
  if (!value) throw DecisionParseError("no Yes!/No! answer in response", raw);
  return {*value, raw};
}

Decision check_reasonable(const PatientSummary& summary, const TrialSpace& space, ChatProvider& provider,
                          const GatewayOptions& options) {
  return check_reasonable(summary.text, space.raw_text, provider, options);
}

std::optional<Organ> classify_organ(std::string_view text_in, ChatProvider& provider, const GatewayOptions& options) {
  if (text::trim(text_in).empty()) throw InvalidArgument("classify_organ: empty text");
  auto response =
      provider.complete(make_request(TemplateId::kOncotreeOrgan, {{"text", std::string(text_in)}}, options));
  return parse_organ(response.text);
}

std::vector<std::optional<std::vector<std::string>>> tag_sentences(std::span<const std::string> sentences,
                                                                   ChatProvider& provider,
                                                                   const GatewayOptions& options) {
  if (sentences.empty()) return {};
  std::string listing;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    listing += std::to_string(i + 1) + ". " + sentences[i] + "\n";
  }
  auto request = make_request(TemplateId::kSentenceTagging, {{"sentences", listing}}, options);
  const auto n = sentences.size();
  auto [tags, raw] = call_with_retry(std::move(request), provider, [n](const std::string& t) {
    auto parsed = parse_sentence_tags(t, n);
    const bool any = std::any_of(parsed.begin(), parsed.end(), [](const auto& x) { return x.has_value(); });
    return any ? std::optional(std::move(parsed)) : std::nullopt;
  });
  if (!tags) return std::vector<std::optional<std::vector<std::string>>>(n);
  return std::move(*tags);
}

std::string generate_synthetic(TemplateId id, const Bindings& bindings, ChatProvider& provider, std::uint64_t seed,
                               const GatewayOptions& options) {
  auto opts = options;
  opts.decoding.seed = seed;
  auto response = provider.complete(make_request(id, bindings, opts));
  if (text::trim(response.text).empty()) {
    throw LlmOutputError(std::string("empty response for ") + std::string(to_string(id)), response.text);
  }
  return std::move(response.text);
}

}  // namespace trialmatch::llm
