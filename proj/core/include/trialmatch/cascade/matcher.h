#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trialmatch/cascade/checker.h"
#include "trialmatch/common/error.h"
#include "trialmatch/datamodel/corpus.h"
#include "trialmatch/embedding/embedding.h"
#include "trialmatch/index/vector_index.h"

namespace trialmatch::cascade {

struct MatchCandidate {
  std::string query_ref;
  std::string item_ref;
  int rank = 0;  // 1-based, pre-filter
  double cosine = 0.0;
  std::optional<double> checker_prob;
  bool passed = true;

  bool operator==(const MatchCandidate&) const = default;
};

struct MatchOptions {
  std::size_t k = 10;
  PairChecker* checker = nullptr;  // absent: every candidate passes
  double threshold = 0.5;
  bool temporal = true;        // apply the open-window filter when a date is known
  index::QueryFilter filter;   // extra predicates, combined with the temporal one
};

// Raised when the checker fails; carries the retrieval results with
// passed = false and no probability.
class CheckerFailure : public Error {
 public:
  CheckerFailure(const std::string& what, std::vector<MatchCandidate> partial)
      : Error(what), partial_(std::move(partial)) {}
  const std::vector<MatchCandidate>& partial() const { return partial_; }

 private:
  std::vector<MatchCandidate> partial_;
};

// Index over every summary (id SummaryRef::key(), split from the patient id)
// and every space (window from its trial). Spaces whose trial is missing
// are rejected with InvalidArgument.
index::VectorIndex build_corpus_index(const Corpus& corpus, embedding::EmbeddingProvider& provider,
                                      embedding::VectorCache* cache = nullptr);

// Retrieval + optional check over one index snapshot and the corpus texts
// it was built from. Thread-safe for concurrent queries.
class Matcher {
 public:
  Matcher(std::shared_ptr<const index::VectorIndex> index, std::shared_ptr<const Corpus> corpus,
          std::shared_ptr<embedding::EmbeddingProvider> embedder,
          std::shared_ptr<embedding::VectorCache> cache = nullptr);

  // Spaces for a patient. The temporal filter uses `as_of` when given.
  std::vector<MatchCandidate> match_patient(const std::string& query_ref, const std::string& summary_text,
                                            std::optional<Date> as_of, const MatchOptions& options) const;
  std::vector<MatchCandidate> match_patient(const PatientSummary& summary, const MatchOptions& options) const;

  // Patients for a space. The temporal filter keeps patients anchored inside
  // `window` when given.
  std::vector<MatchCandidate> match_space(const std::string& query_ref, const std::string& space_text,
                                          std::optional<index::Window> window, const MatchOptions& options) const;
  std::vector<MatchCandidate> match_space(const TrialSpace& space, const MatchOptions& options) const;

  const PatientSummary* summary(const std::string& ref_key) const;
  const TrialSpace* space(const std::string& space_id) const;
  const TrialRecord* trial(const std::string& nct_id) const;
  std::optional<index::Window> trial_window(const std::string& nct_id) const;

  const index::VectorIndex& index() const { return *index_; }
  const Corpus& corpus() const { return *corpus_; }

 private:
  std::vector<MatchCandidate> finish(const std::string& query_ref, const std::vector<index::Hit>& hits,
                                     index::Side item_side, const std::string& query_text,
                                     const MatchOptions& options) const;

  std::shared_ptr<const index::VectorIndex> index_;
  std::shared_ptr<const Corpus> corpus_;
  std::shared_ptr<embedding::EmbeddingProvider> embedder_;
  std::shared_ptr<embedding::VectorCache> cache_;
  std::map<std::string, const PatientSummary*> summaries_;
  std::map<std::string, const TrialSpace*> spaces_;
  std::map<std::string, const TrialRecord*> trials_;
};

std::size_t surviving(std::span<const MatchCandidate> candidates);

struct CountStats {
  double median = 0.0;  // lower median
  double mean = 0.0;
};

// Throws InvalidArgument for an empty list.
CountStats result_count_stats(std::span<const std::size_t> counts);

}  // namespace trialmatch::cascade
