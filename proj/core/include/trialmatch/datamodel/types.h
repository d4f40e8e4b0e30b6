#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "trialmatch/common/date.h"

namespace trialmatch {

enum class DocType { kOncologistNote, kImagingReport, kPathologyReport };
enum class SummarySource { kTrialEnrollment, kStandardOfCare, kUserEntered };
enum class Split { kTrain, kValidation, kTest };
enum class LabelProvenance { kStage1Enrolled, kStage1RandomNegative, kMinedRound1, kMinedRound2 };

std::string_view to_string(DocType t);
std::string_view to_string(SummarySource s);
std::string_view to_string(Split s);
std::string_view to_string(LabelProvenance p);

DocType parse_doc_type(std::string_view s);
SummarySource parse_summary_source(std::string_view s);
Split parse_split(std::string_view s);
LabelProvenance parse_label_provenance(std::string_view s);

// Unknown JSON members of a record, kept as serialized JSON text so that a
// non-strict load/save round trip is lossless.
using ExtraFields = std::map<std::string, std::string>;

struct ClinicalDocument {
  std::string patient_id;
  DocType doc_type = DocType::kOncologistNote;
  Date date;
  std::string text;
  ExtraFields extra;

  bool operator==(const ClinicalDocument&) const = default;
};

// Identifies one summary: a patient at an anchor date from one source.
struct SummaryRef {
  std::string patient_id;
  Date anchor_date;
  SummarySource source = SummarySource::kTrialEnrollment;

  auto operator<=>(const SummaryRef&) const = default;
  std::string key() const;  // "<patient_id>@<date>/<source>"
};

struct PatientSummary {
  std::string patient_id;
  Date anchor_date;
  SummarySource source = SummarySource::kTrialEnrollment;
  std::string text;
  ExtraFields extra;

  SummaryRef ref() const { return {patient_id, anchor_date, source}; }
  bool operator==(const PatientSummary&) const = default;
};

struct TrialRecord {
  std::string nct_id;
  std::optional<std::string> title;
  std::string eligibility_text;
  Date open_date;
  std::optional<Date> close_date;
  ExtraFields extra;

  bool operator==(const TrialRecord&) const = default;
};

struct TrialSpace {
  std::string space_id;  // "<nct_id>#<ordinal>"
  std::string nct_id;
  int ordinal = 1;
  std::optional<std::string> cancer_type_allowed;
  std::optional<std::string> histology_allowed;
  std::optional<std::string> cancer_burden_allowed;
  std::optional<std::string> prior_treatment_required;
  std::optional<std::string> prior_treatment_excluded;
  std::optional<std::string> biomarkers_required;
  std::optional<std::string> biomarkers_excluded;
  std::string raw_text;
  ExtraFields extra;

  bool operator==(const TrialSpace&) const = default;
};

std::string make_space_id(std::string_view nct_id, int ordinal);

struct Enrollment {
  std::string patient_id;
  std::string nct_id;
  Date enroll_date;
  ExtraFields extra;

  bool operator==(const Enrollment&) const = default;
};

struct PairLabel {
  SummaryRef summary_ref;
  std::string space_id;
  bool label = false;
  LabelProvenance provenance = LabelProvenance::kStage1Enrolled;
  std::optional<std::string> rationale_text;
  ExtraFields extra;

  bool operator==(const PairLabel&) const = default;
};

// NCT followed by exactly 8 digits.
bool is_valid_nct_id(std::string_view id);

}  // namespace trialmatch
