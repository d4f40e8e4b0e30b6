#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trialmatch/common/date.h"

// Small fixed oncology vocabulary behind the offline mocks: the lexicon
// sentence tagger, the rule-based mock LLM, and the synthetic corpus
// generator. Not a clinical knowledge base.
namespace trialmatch::lexicon {

inline constexpr std::array<std::string_view, 6> kConcepts = {
    "cancer_type", "histology", "stage_at_diagnosis", "current_extent", "treatment_history",
    "biomarkers"};

// Keywords per concept, lowercase; matched on word boundaries.
const std::vector<std::string>& concept_keywords(std::size_t concept_index);

struct CancerProfile {
  std::string name;                       // "non-small cell lung cancer"
  std::string organ;                      // OncoTree top-level organ name
  std::vector<std::string> aliases;       // extra phrases that identify it
  std::vector<std::string> histologies;
  std::vector<std::string> biomarkers;    // "EGFR exon 19 deletion"
  std::vector<std::string> therapies;     // systemic regimens, first entry = first line
  std::string local_therapy;              // "lobectomy"
  std::string primary_site;               // "right upper lobe of the lung"
};

const std::vector<CancerProfile>& cancer_profiles();

// First profile whose name or alias occurs in `text` (case-insensitive,
// word-bounded), scanning profiles in catalog order.
const CancerProfile* find_profile(std::string_view text);

// All profiles mentioned in `text`.
std::vector<const CancerProfile*> find_profiles(std::string_view text);

// Gene symbol of a biomarker phrase ("EGFR exon 19 deletion" -> "EGFR").
std::string biomarker_gene(std::string_view biomarker);

// Whole-word, case-insensitive phrase search.
bool mentions(std::string_view text, std::string_view phrase);

// Position of the first whole-word occurrence or npos.
std::size_t find_phrase(std::string_view text, std::string_view phrase);

inline const std::vector<std::string>& scan_types() {
  static const std::vector<std::string> kScans = {"CT chest, abdomen and pelvis with contrast",
                                                  "PET/CT", "MRI brain with and without contrast",
                                                  "bone scan"};
  return kScans;
}

inline constexpr std::array<std::string_view, 3> kExtents = {"metastatic", "locally advanced",
                                                           "localized"};

// Extent named in `text`, checked in kExtents order; empty when none.
std::string detect_extent(std::string_view text);

// Biomarker phrase reduced to what must match in a patient text: gene plus
// variant when the second word carries a digit ("KRAS G12C"), else the gene.
std::string biomarker_key(std::string_view biomarker);

// Attributes of one hypothetical patient, drawn from (cancer_type, seed).
// Every synthetic document about the patient is rendered from the same draw.
struct PatientProfile {
  CancerProfile cancer;
  std::string histology;
  std::optional<std::string> biomarker;
  std::string extent;  // one of kExtents
  std::string stage;   // "II", "III", "IV"
  bool local_therapy = false;
  std::vector<std::string> therapies;  // systemic regimens in given order
  Date diagnosis_date;
};

// Unknown cancer types get a generic profile named after the input.
PatientProfile draw_patient_profile(std::string_view cancer_type, std::uint64_t seed);

struct TimelineEvent {
  Date date;
  std::string text;  // one past-tense sentence, dates written mm/dd/yyyy
};

std::vector<TimelineEvent> profile_timeline(const PatientProfile& profile);

std::string us_date(Date d);  // "mm/dd/yyyy"

}  // namespace trialmatch::lexicon
