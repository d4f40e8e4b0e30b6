#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trialmatch/cascade/matcher.h"
#include "trialmatch/datamodel/corpus.h"
#include "trialmatch/llm/gateway.h"

namespace trialmatch::trainprep {

// ---- tagger ----------------------------------------------------------------

struct TaggerExample {
  std::string patient_id;
  std::string sentence;
  std::array<bool, 6> concepts{};  // lexicon::kConcepts order
  bool any_tag = false;            // OR of concepts
  Split internal_split = Split::kTrain;  // kTrain or kValidation (89/11)
};

struct TaggerDataset {
  std::vector<TaggerExample> examples;
  std::size_t skipped_sentences = 0;  // LLM output unparseable for the sentence
};

// Internal 89/11 split of the tagger data: (fnv1a64(id) / 100) % 100 < 89
// is train. Independent of the global bucket, which uses the low digits.
Split tagger_internal_split(std::string_view patient_id);

// Samples `sample_size` patients (seeded, without replacement) from those in
// the global train or validation split and labels every sentence of their
// documents through the sentence_tagging prompt.
TaggerDataset build_tagger_dataset(std::span<const ClinicalDocument> documents, llm::ChatProvider& provider,
                                   std::size_t sample_size, std::uint64_t seed,
                                   const llm::GatewayOptions& options = {});

// ---- embedding pairs --------------------------------------------------------

enum class PairRelation { kPositiveChecked, kRandomNegative, kMinedLabeled };
enum class PairStage { kStage1, kRefine };

std::string_view to_string(PairRelation r);
std::string_view to_string(PairStage s);

struct EmbedPairExample {
  SummaryRef summary_ref;
  std::string space_id;
  std::string anchor_text;     // summary text
  std::string candidate_text;  // space raw_text
  PairRelation relation = PairRelation::kPositiveChecked;
  bool label = false;
  PairStage stage = PairStage::kStage1;
  std::string round_tag;  // empty for stage 1
  std::optional<std::string> rationale;
};

struct Stage1Result {
  std::vector<EmbedPairExample> pairs;            // positives, then random negatives
  std::vector<EmbedPairExample> enrolled_checked; // every LLM-checked enrolled pair, both labels
  std::size_t skipped_enrollments = 0;            // no summary or no spaces
  std::size_t skipped_checks = 0;                 // decision-parse failures
};

// Links each train-split enrollment's summary (source trial_enrollment,
// anchored at the enrollment date) to every space of the enrolled trial and
// keeps the pairs that pass the check. Negatives: neg_ratio x #positives
// seeded uniform (summary, space) draws where the space's trial is not one
// the patient enrolled on, without repeats.
Stage1Result build_stage1_pairs(const Corpus& corpus, llm::ChatProvider& provider, std::size_t neg_ratio,
                                std::uint64_t seed, const llm::GatewayOptions& options = {});

struct MiningConfig {
  std::size_t k_patient = 10;
  std::size_t k_space = 20;
  std::string round_tag = "round1";
  bool train_only = true;  // anchors and candidates from the train split only
};

struct MiningResult {
  std::vector<EmbedPairExample> pairs;
  std::size_t skipped_checks = 0;
};

// Top-k spaces per summary (temporal filter on) and top-k summaries per
// space (anchored inside the trial window), each unique pair labeled by the
// check. Output order: patient-side pairs by summary key then rank, then
// space-side pairs not already emitted.
MiningResult mine_hard_negatives(const cascade::Matcher& matcher, llm::ChatProvider& provider,
                                 const MiningConfig& config, const llm::GatewayOptions& options = {});

// ---- checker ----------------------------------------------------------------

enum class CheckerProvenance { kAEnrolled, kBMinedPrelim, kCMinedFinal };
std::string_view to_string(CheckerProvenance p);

struct CheckerExample {
  SummaryRef summary_ref;
  std::string space_id;
  std::string summary_text;
  std::string space_text;
  bool label = false;
  CheckerProvenance provenance = CheckerProvenance::kAEnrolled;
};

struct CheckerDataset {
  std::vector<CheckerExample> examples;
  std::size_t duplicates_dropped = 0;
  std::size_t label_conflicts = 0;
};

// Union of (a) enrolled checks, (b) preliminary-model mining, (c) final-model
// mining. Same texts and label: the earliest provenance is kept. Same texts,
// different label: the latest provenance's label wins (counted). Throws
// LeakageError if any example belongs to a non-train patient.
CheckerDataset build_checker_dataset(std::span<const EmbedPairExample> a, std::span<const EmbedPairExample> b,
                                     std::span<const EmbedPairExample> c);

// ---- leakage ------------------------------------------------------------------

// Patient ids (deduplicated, sorted) of examples outside the train split.
std::vector<std::string> scan_leakage(std::span<const EmbedPairExample> examples);
std::vector<std::string> scan_leakage(std::span<const CheckerExample> examples);
std::vector<std::string> scan_leakage(std::span<const TaggerExample> examples);  // train+validation allowed

// Throws LeakageError naming the first offending patient.
void assert_no_leakage(std::span<const EmbedPairExample> examples);
void assert_no_leakage(std::span<const CheckerExample> examples);

// ---- files ----------------------------------------------------------------------

// Formats in FORMATS.md. Every writer checks leakage first.
void write_ranking_pairs(std::span<const EmbedPairExample> pairs, const std::filesystem::path& file);
void write_contrastive_pairs(std::span<const EmbedPairExample> pairs, const std::filesystem::path& file);
void write_checker_examples(std::span<const CheckerExample> examples, const std::filesystem::path& file);
void write_tagger_examples(std::span<const TaggerExample> examples, const std::filesystem::path& file);

}  // namespace trialmatch::trainprep
