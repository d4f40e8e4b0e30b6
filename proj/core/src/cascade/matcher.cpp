#include "trialmatch/cascade/matcher.h"

#include <algorithm>
#include <numeric>

#include "trialmatch/datamodel/split.h"

namespace trialmatch::cascade {

index::VectorIndex build_corpus_index(const Corpus& corpus, embedding::EmbeddingProvider& provider,
                                      embedding::VectorCache* cache) {
  std::map<std::string, const TrialRecord*> trials;
  for (const auto& t : corpus.trials) trials[t.nct_id] = &t;

  std::vector<std::string> texts;
  for (const auto& s : corpus.summaries) texts.push_back(s.text);
  for (const auto& s : corpus.spaces) texts.push_back(s.raw_text);
  const auto vectors = embedding::embed(texts, provider, cache);

  index::VectorIndex idx(provider.dimension());
  std::size_t v = 0;
  for (const auto& s : corpus.summaries) {
    index::IndexedItem item;
    item.item_id = s.ref().key();
    item.side = index::Side::kPatient;
    item.vector = vectors[v++].values;
    item.meta.anchor_date = s.anchor_date;
    item.meta.split = assign_split(s.patient_id);
    idx.add(std::move(item));
  }
  for (const auto& s : corpus.spaces) {
    auto it = trials.find(s.nct_id);
    if (it == trials.end()) throw InvalidArgument("space " + s.space_id + " references unknown trial " + s.nct_id);
    index::IndexedItem item;
    item.item_id = s.space_id;
    item.side = index::Side::kSpace;
    item.vector = vectors[v++].values;
    item.meta.nct_id = s.nct_id;
    item.meta.open_date = it->second->open_date;
    item.meta.close_date = it->second->close_date;
    idx.add(std::move(item));
  }
  return idx;
}

Matcher::Matcher(std::shared_ptr<const index::VectorIndex> index, std::shared_ptr<const Corpus> corpus,
                 std::shared_ptr<embedding::EmbeddingProvider> embedder, std::shared_ptr<embedding::VectorCache> cache)
    : index_(std::move(index)), corpus_(std::move(corpus)), embedder_(std::move(embedder)), cache_(std::move(cache)) {
  if (!index_ || !corpus_ || !embedder_) throw InvalidArgument("Matcher needs an index, a corpus and an embedder");
  if (embedder_->dimension() != index_->dimension()) {
    throw ContractViolation("Matcher: embedder dimension differs from index dimension");
  }
  for (const auto& s : corpus_->summaries) summaries_[s.ref().key()] = &s;
  for (const auto& s : corpus_->spaces) spaces_[s.space_id] = &s;
  for (const auto& t : corpus_->trials) trials_[t.nct_id] = &t;
}

const PatientSummary* Matcher::summary(const std::string& ref_key) const {
  auto it = summaries_.find(ref_key);
  return it == summaries_.end() ? nullptr : it->second;
}

const TrialSpace* Matcher::space(const std::string& space_id) const {
  auto it = spaces_.find(space_id);
  return it == spaces_.end() ? nullptr : it->second;
}

const TrialRecord* Matcher::trial(const std::string& nct_id) const {
  auto it = trials_.find(nct_id);
  return it == trials_.end() ? nullptr : it->second;
}

std::optional<index::Window> Matcher::trial_window(const std::string& nct_id) const {
  const auto* t = trial(nct_id);
  if (!t) return std::nullopt;
  return index::Window{t->open_date, t->close_date};
}

std::vector<MatchCandidate> Matcher::finish(const std::string& query_ref, const std::vector<index::Hit>& hits,
                                            index::Side item_side, const std::string& query_text,
                                            const MatchOptions& options) const {
  std::vector<MatchCandidate> out;
  out.reserve(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    out.push_back({query_ref, hits[i].item_id, static_cast<int>(i + 1), hits[i].score, std::nullopt, true});
  }
  if (!options.checker || out.empty()) return out;

  std::vector<CheckPair> pairs;
  pairs.reserve(out.size());
  for (const auto& c : out) {
    if (item_side == index::Side::kSpace) {
      const auto* s = space(c.item_ref);
      if (!s) throw NotFound("space " + c.item_ref + " is indexed but missing from the corpus");
      pairs.push_back({query_text, s->raw_text});
    } else {
      const auto* s = summary(c.item_ref);
      if (!s) throw NotFound("summary " + c.item_ref + " is indexed but missing from the corpus");
      pairs.push_back({s->text, query_text});
    }
  }
  std::vector<double> probs;
  try {
    probs = options.checker->score(pairs);
    if (probs.size() != pairs.size()) throw ContractViolation("checker returned a misaligned probability array");
  } catch (const std::exception& e) {
    for (auto& c : out) c.passed = false;
    throw CheckerFailure(std::string("checker failed: ") + e.what(), std::move(out));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].checker_prob = probs[i];
    out[i].passed = probs[i] >= options.threshold;
  }
  return out;
}

std::vector<MatchCandidate> Matcher::match_patient(const std::string& query_ref, const std::string& summary_text,
                                                   std::optional<Date> as_of, const MatchOptions& options) const {
  if (options.k == 0) throw InvalidArgument("match_patient: k must be at least 1");
  if (index_->size(index::Side::kSpace) == 0) return {};
  auto filter = options.filter;
  if (options.temporal && as_of && !filter.temporal_as_of) filter.temporal_as_of = as_of;
  const auto q = embedding::embed_one(summary_text, *embedder_, cache_.get());
  const auto hits = index_->top_k(q.values, index::Side::kSpace, options.k, filter);
  return finish(query_ref, hits, index::Side::kSpace, summary_text, options);
}

std::vector<MatchCandidate> Matcher::match_patient(const PatientSummary& s, const MatchOptions& options) const {
  return match_patient(s.ref().key(), s.text, s.anchor_date, options);
}

std::vector<MatchCandidate> Matcher::match_space(const std::string& query_ref, const std::string& space_text,
                                                 std::optional<index::Window> window,
                                                 const MatchOptions& options) const {
  if (options.k == 0) throw InvalidArgument("match_space: k must be at least 1");
  if (index_->size(index::Side::kPatient) == 0) return {};
  auto filter = options.filter;
  if (options.temporal && window && !filter.anchor_within) filter.anchor_within = window;
  const auto q = embedding::embed_one(space_text, *embedder_, cache_.get());
  const auto hits = index_->top_k(q.values, index::Side::kPatient, options.k, filter);
  return finish(query_ref, hits, index::Side::kPatient, space_text, options);
}

std::vector<MatchCandidate> Matcher::match_space(const TrialSpace& s, const MatchOptions& options) const {
  return match_space(s.space_id, s.raw_text, trial_window(s.nct_id), options);
}

std::size_t surviving(std::span<const MatchCandidate> candidates) {
  return static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), [](const MatchCandidate& c) { return c.passed; }));
}

CountStats result_count_stats(std::span<const std::size_t> counts) {
  if (counts.empty()) throw InvalidArgument("result_count_stats: no queries");
  std::vector<std::size_t> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  CountStats s;
  s.median = static_cast<double>(sorted[(sorted.size() - 1) / 2]);
  s.mean = static_cast<double>(std::accumulate(sorted.begin(), sorted.end(), std::uint64_t{0})) /
           static_cast<double>(sorted.size());
  return s;
}

}  // namespace trialmatch::cascade
