#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "trialmatch/condenser/condenser.h"
#include "trialmatch/datamodel/corpus.h"
#include "trialmatch/llm/gateway.h"

namespace trialmatch::synthgen {

struct SynthSpec {
  std::size_t n_patients = 0;
  std::vector<std::pair<std::string, double>> cancer_type_distribution;
  std::vector<std::string> scan_type_pool;  // empty: lexicon scan types
  std::uint64_t seed = 0;
  std::string id_prefix = "synth_";
};

// Throws InvalidArgument on a non-positive weight, an empty distribution
// with n_patients > 0, or an empty id prefix.
void validate(const SynthSpec& spec);

// JSON object {"n_patients", "cancer_types": [{"type","weight"}],
// "scan_types", "seed", "id_prefix"}; see FORMATS.md.
SynthSpec parse_synth_spec(const std::string& json_text);
SynthSpec load_synth_spec(const std::filesystem::path& file);

struct SyntheticPatient {
  std::string patient_id;
  std::string cancer_type;
  std::string scan_type;
  std::vector<ClinicalDocument> documents;  // note, imaging, pathology
  std::string history;                      // chronological history text
  std::vector<Date> history_dates;          // mm/dd/yyyy dates found, in order
};

// Four generation prompts with the same seed. Document dates come from the
// history: pathology 7 days after its first date, imaging 7 and the note 14
// days after its last date. Without a parseable date the first date is
// 2018-01-01 plus a seeded offset. Each prompt is retried once; a second
// failure propagates.
SyntheticPatient generate_patient(const std::string& patient_id, const std::string& cancer_type,
                                  const std::string& scan_type, llm::ChatProvider& provider, std::uint64_t seed,
                                  const llm::GatewayOptions& options = {});

// Largest-remainder apportionment of n over the weights; remainder ties go
// to the earlier entry.
std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t n);

struct AssembleResult {
  Corpus corpus;  // documents + standard-of-care summaries
  std::vector<condenser::CondensedRecord> condensed;
  std::vector<std::pair<std::string, std::string>> histories;  // (patient_id, text)
  std::vector<std::string> cancer_types;                       // per patient, id order
  std::size_t failed_patients = 0;
  std::size_t failed_summaries = 0;
};

// Patient i (1-based) is "<prefix><i as 6 digits>". Cancer types follow the
// apportionment, shuffled with the spec seed. Summaries are anchored at the
// latest document date and built from lexicon-tagger condensed records.
AssembleResult assemble_corpus(const SynthSpec& spec, llm::ChatProvider& provider,
                               const llm::GatewayOptions& options = {});

// Corpus files plus condensed.jsonl and histories.jsonl.
void write_assembled(const AssembleResult& result, const std::filesystem::path& dir);

struct DeskFixtureConfig {
  std::size_t n_patients = 50;
  std::size_t n_trials = 20;  // two cohorts each
  std::uint64_t seed = 20241022;
};

// Small self-contained corpus: synthetic patients, two-cohort trials with
// accrual windows, extracted spaces, one enrollment per patient where an
// open trial of the patient's cancer type exists, and a checker label for
// every (summary, space) pair.
Corpus build_desk_fixture(const DeskFixtureConfig& config, llm::ChatProvider& provider,
                          const llm::GatewayOptions& options = {});

// Eligibility text of fixture trial `index`; exposed for tests.
TrialRecord desk_trial(std::size_t index, std::uint64_t seed);

}  // namespace trialmatch::synthgen
