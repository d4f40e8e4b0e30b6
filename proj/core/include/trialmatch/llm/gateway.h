#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trialmatch/condenser/condenser.h"
#include "trialmatch/datamodel/types.h"
#include "trialmatch/llm/parsers.h"
#include "trialmatch/llm/provider.h"

namespace trialmatch::llm {

struct GatewayOptions {
  std::string model = "mock";
  DecodingParams decoding;  // max_output_tokens is overridden per template
};

// Output cap used for each template's requests.
int max_output_tokens(TemplateId id);

// Appended as a user message when the first response does not parse.
std::string_view format_reminder(TemplateId id);

struct Decision {
  bool value = false;
  std::string raw_text;
};

// Renders space_extraction with the trial's eligibility text, parses the
// numbered list, dedups. Throws ExtractionError after one failed retry.
std::vector<TrialSpace> extract_trial_spaces(const TrialRecord& trial, ChatProvider& provider,
                                             const GatewayOptions& options = {});

// Summary text is the provider response verbatim. Throws InvalidArgument on
// an empty condensed record, SummarizationError on an empty response.
PatientSummary summarize_patient(const condenser::CondensedRecord& condensed, ChatProvider& provider,
                                 SummarySource source = SummarySource::kTrialEnrollment,
                                 const GatewayOptions& options = {});

// Throws DecisionParseError when neither answer token appears after one retry.
Decision check_reasonable(std::string_view summary_text, std::string_view space_text,
                          ChatProvider& provider, const GatewayOptions& options = {});
Decision check_reasonable(const PatientSummary& summary, const TrialSpace& space,
                          ChatProvider& provider, const GatewayOptions& options = {});

// nullopt is a vocabulary miss; callers drop the record.
std::optional<Organ> classify_organ(std::string_view text, ChatProvider& provider,
                                    const GatewayOptions& options = {});

// Numbered sentence list in, per-sentence concept labels out (nullopt for a
// sentence whose line is missing or malformed). One retry if every line fails.
std::vector<std::optional<std::vector<std::string>>> tag_sentences(std::span<const std::string> sentences,
                                                                   ChatProvider& provider,
                                                                   const GatewayOptions& options = {});

// Raw text of one synthetic document prompt. `seed` overrides the decoding
// seed so each hypothetical patient gets its own draw.
std::string generate_synthetic(TemplateId id, const Bindings& bindings, ChatProvider& provider,
                               std::uint64_t seed, const GatewayOptions& options = {});

}  // namespace trialmatch::llm
