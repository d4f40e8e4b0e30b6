#include "trialmatch/datamodel/types.h"

#include <array>

#include "trialmatch/common/error.h"

namespace trialmatch {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
             std::string_view what) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw ParseError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E v, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<DocType, std::string_view>, 3> kDocTypes{{
    {DocType::kOncologistNote, "oncologist_note"},
    {DocType::kImagingReport, "imaging_report"},
    {DocType::kPathologyReport, "pathology_report"},
}};

constexpr std::array<std::pair<SummarySource, std::string_view>, 3> kSources{{
    {SummarySource::kTrialEnrollment, "trial_enrollment"},
    {SummarySource::kStandardOfCare, "standard_of_care"},
    {SummarySource::kUserEntered, "user_entered"},
}};

constexpr std::array<std::pair<Split, std::string_view>, 3> kSplits{{
    {Split::kTrain, "train"},
    {Split::kValidation, "validation"},
    {Split::kTest, "test"},
}};

constexpr std::array<std::pair<LabelProvenance, std::string_view>, 4> kProvenance{{
    {LabelProvenance::kStage1Enrolled, "stage1_enrolled"},
    {LabelProvenance::kStage1RandomNegative, "stage1_random_negative"},
    {LabelProvenance::kMinedRound1, "mined_round1"},
    {LabelProvenance::kMinedRound2, "mined_round2"},
}};

}  // namespace

std::string_view to_string(DocType t) { return enum_name(t, kDocTypes); }
std::string_view to_string(SummarySource s) { return enum_name(s, kSources); }
std::string_view to_string(Split s) { return enum_name(s, kSplits); }
std::string_view to_string(LabelProvenance p) { return enum_name(p, kProvenance); }

DocType parse_doc_type(std::string_view s) { return parse_enum(s, kDocTypes, "doc_type"); }
SummarySource parse_summary_source(std::string_view s) { return parse_enum(s, kSources, "source"); }
Split parse_split(std::string_view s) { return parse_enum(s, kSplits, "split"); }
LabelProvenance parse_label_provenance(std::string_view s) {
  return parse_enum(s, kProvenance, "provenance");
}

std::string SummaryRef::key() const {
  return patient_id + "@" + anchor_date.iso() + "/" + std::string(to_string(source));
}

std::string make_space_id(std::string_view nct_id, int ordinal) {
  return std::string(nct_id) + "#" + std::to_string(ordinal);
}

bool is_valid_nct_id(std::string_view id) {
  if (id.size() != 11 || id.substr(0, 3) != "NCT") return false;
  for (char c : id.substr(3)) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace trialmatch
