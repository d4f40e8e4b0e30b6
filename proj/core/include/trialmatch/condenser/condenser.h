#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trialmatch/common/date.h"
#include "trialmatch/common/http.h"
#include "trialmatch/datamodel/types.h"

namespace trialmatch::condenser {

struct DocRef {
  std::size_t index = 0;  // position in the caller's document list
  Date date;

  auto operator<=>(const DocRef&) const = default;
};

struct Sentence {
  std::string patient_id;
  DocRef doc_ref;
  std::size_t seq = 0;  // position within its document
  std::size_t char_start = 0;
  std::size_t char_end = 0;  // exclusive
  std::string text;

  bool operator==(const Sentence&) const = default;
};

inline constexpr std::size_t kConceptCount = 6;

struct TagScores {
  // cancer_type, histology, stage_at_diagnosis, current_extent,
  // treatment_history, biomarkers
  std::array<double, kConceptCount> concepts{};
  double any_tag = 0.0;

  bool operator==(const TagScores&) const = default;
};

struct CondensedRecord {
  std::string patient_id;
  Date as_of_date;
  std::string text;
  std::vector<Sentence> retained;
};

// Splits a document into sentences. Boundaries: '.', '!' or '?' followed by
// whitespace or end of text, and every newline. A period does not end a
// sentence after a listed abbreviation (Dr., pt., vs., ...), after a single
// letter initial, or after a TNM stage token such as "T2a." or "N1.".
// Spans are trimmed of surrounding whitespace, non-empty, and ordered.
std::vector<Sentence> segment(const ClinicalDocument& document, std::size_t doc_index = 0);

// Batch sentence scorer. Implementations must return one TagScores per
// input, order-aligned, with every score in [0, 1].
class SentenceTagger {
 public:
  virtual ~SentenceTagger() = default;
  virtual std::vector<TagScores> score(std::span<const std::string> sentences) = 0;
};

// Transparent keyword tagger: a concept scores 1.0 when any of its lexicon
// keywords occurs as a whole word in the sentence, else 0.0; any_tag is the
// maximum concept score.
class LexiconTagger final : public SentenceTagger {
 public:
  std::vector<TagScores> score(std::span<const std::string> sentences) override;
};

// Tagger scoring service client. POST {base_url}/v1/tag with
// {"sentences": [...]} -> {"scores": [[c1..c6, any_tag], ...]}.
class RemoteTagger final : public SentenceTagger {
 public:
  RemoteTagger(std::string base_url, std::shared_ptr<http::Transport> transport,
               std::optional<std::string> bearer_token = std::nullopt);
  std::vector<TagScores> score(std::span<const std::string> sentences) override;

 private:
  std::string base_url_;
  std::shared_ptr<http::Transport> transport_;
  std::optional<std::string> token_;
};

// Scores sentences through `tagger` in batches. A tagger failure is rethrown
// as an Error carrying the failing batch index. Result is order-aligned.
std::vector<TagScores> tag(std::span<const Sentence> sentences, SentenceTagger& tagger,
                           std::size_t batch_size = 64);

// Threshold among the distinct observed scores maximizing F1 of
// (score >= threshold); ties resolve to the lowest threshold. Throws
// InvalidArgument when labels are all one class or lengths differ.
double select_threshold(std::span<const double> scores, const std::vector<bool>& labels);

// Keeps sentences with any_tag >= threshold from documents dated on or before
// `as_of`, in (date, input order, seq) order. Each document with retained
// sentences contributes a "[YYYY-MM-DD doc_type]" header line followed by its
// sentences, one per line. Throws EmptyRecordError when nothing qualifies.
CondensedRecord condense(std::span<const ClinicalDocument> documents, SentenceTagger& tagger,
                         double threshold, Date as_of);

// condensed.jsonl: {"v": 1, "patient_id", "as_of_date", "text"} per line.
// Retained-sentence provenance is not serialized.
void write_condensed(std::span<const CondensedRecord> records, const std::filesystem::path& file);
std::vector<CondensedRecord> read_condensed(const std::filesystem::path& file);

}  // namespace trialmatch::condenser
