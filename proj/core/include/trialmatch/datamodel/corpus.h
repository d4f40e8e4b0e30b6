#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "trialmatch/datamodel/types.h"

namespace trialmatch {

// All entity collections of one corpus. Each collection maps to one
// line-delimited JSON file inside a corpus directory (see FORMATS.md).
struct Corpus {
  std::vector<ClinicalDocument> documents;
  std::vector<PatientSummary> summaries;
  std::vector<TrialRecord> trials;
  std::vector<TrialSpace> spaces;
  std::vector<Enrollment> enrollments;
  std::vector<PairLabel> labels;

  bool operator==(const Corpus&) const = default;
  bool empty() const;
};

struct LoadOptions {
  // Reject records with unknown members instead of preserving them.
  bool strict = false;
};

inline constexpr const char* kDocumentsFile = "documents.jsonl";
inline constexpr const char* kSummariesFile = "summaries.jsonl";
inline constexpr const char* kTrialsFile = "trials.jsonl";
inline constexpr const char* kSpacesFile = "spaces.jsonl";
inline constexpr const char* kEnrollmentsFile = "enrollments.jsonl";
inline constexpr const char* kLabelsFile = "labels.jsonl";

// Missing files load as empty collections. Throws ParseError (with line
// number) on malformed records and ConflictError on duplicate primary keys.
Corpus load_corpus(const std::filesystem::path& dir, LoadOptions options = {});

// Writes all six files in canonical order: primary key, then date.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Sorts every collection into canonical order in place.
void canonicalize(Corpus& corpus);

// Cross-record invariants (enrollment references, date windows, space ids).
// Returns one message per violation; empty when the corpus is consistent.
std::vector<std::string> validate_corpus(const Corpus& corpus);

// Single-collection readers/writers, used by CLI stages that pass one file
// between them.
std::vector<TrialRecord> read_trials(const std::filesystem::path& file, LoadOptions options = {});
std::vector<TrialSpace> read_spaces(const std::filesystem::path& file, LoadOptions options = {});
std::vector<PatientSummary> read_summaries(const std::filesystem::path& file,
                                           LoadOptions options = {});
std::vector<ClinicalDocument> read_documents(const std::filesystem::path& file,
                                             LoadOptions options = {});
std::vector<Enrollment> read_enrollments(const std::filesystem::path& file, LoadOptions options = {});
void write_trials(const std::vector<TrialRecord>& trials, const std::filesystem::path& file);
void write_spaces(const std::vector<TrialSpace>& spaces, const std::filesystem::path& file);
void write_summaries(const std::vector<PatientSummary>& summaries, const std::filesystem::path& file);
void write_documents(const std::vector<ClinicalDocument>& documents,
                     const std::filesystem::path& file);
void write_labels(const std::vector<PairLabel>& labels, const std::filesystem::path& file);

// Atomic file replace: write to a sibling temp file, then rename.
void write_file_atomic(const std::filesystem::path& file, const std::string& contents);
std::string read_file(const std::filesystem::path& file);

}  // namespace trialmatch
