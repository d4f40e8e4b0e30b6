#include "trialmatch/trainprep/trainprep.h"

#include <algorithm>
#include <json.hpp>
#include <map>
#include <set>

#include "trialmatch/common/error.h"
#include "trialmatch/common/hash.h"
#include "trialmatch/common/log.h"
#include "trialmatch/common/oncology_lexicon.h"
#include "trialmatch/common/rng.h"
#include "trialmatch/condenser/condenser.h"
#include "trialmatch/datamodel/split.h"

namespace trialmatch::trainprep {

namespace {

using nlohmann::ordered_json;

bool is_train(const std::string& patient_id) { return assign_split(patient_id) == Split::kTrain; }

std::string jsonl(const std::vector<ordered_json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

ordered_json ref_json(const SummaryRef& r) {
  return {{"patient_id", r.patient_id}, {"anchor_date", r.anchor_date.iso()}, {"source", to_string(r.source)}};
}

}  // namespace

std::string_view to_string(PairRelation r) {
  switch (r) {
    case PairRelation::kPositiveChecked:
      return "positive_checked";
    case PairRelation::kRandomNegative:
      return "random_negative";
    case PairRelation::kMinedLabeled:
      return "mined_labeled";
  }
  return "?";
}

std::string_view to_string(PairStage s) { return s == PairStage::kStage1 ? "stage1" : "refine"; }

std::string_view to_string(CheckerProvenance p) {
  switch (p) {
    case CheckerProvenance::kAEnrolled:
      return "a_enrolled";
    case CheckerProvenance::kBMinedPrelim:
      return "b_mined_prelim";
    case CheckerProvenance::kCMinedFinal:
      return "c_mined_final";
  }
  return "?";
}

Split tagger_internal_split(std::string_view patient_id) {
  return (fnv1a64(patient_id) / 100) % 100 < 89 ? Split::kTrain : Split::kValidation;
}

TaggerDataset build_tagger_dataset(std::span<const ClinicalDocument> documents, llm::ChatProvider& provider,
                                   std::size_t sample_size, std::uint64_t seed, const llm::GatewayOptions& options) {
  TaggerDataset out;
  if (sample_size == 0) return out;
  std::map<std::string, std::vector<std::size_t>> by_patient;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (assign_split(documents[i].patient_id) != Split::kTest) by_patient[documents[i].patient_id].push_back(i);
  }
  std::vector<std::string> patients;
  for (const auto& [id, docs] : by_patient) patients.push_back(id);
  Rng rng(seed);
  const std::size_t n = std::min(sample_size, patients.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(patients[i], patients[i + rng.uniform_index(patients.size() - i)]);
  }
  patients.resize(n);
  std::sort(patients.begin(), patients.end());

  for (const auto& pid : patients) {
    for (auto doc_index : by_patient[pid]) {
      const auto sentences = condenser::segment(documents[doc_index], doc_index);
      std::vector<std::string> texts;
      for (const auto& s : sentences) texts.push_back(s.text);
      const auto tags = llm::tag_sentences(texts, provider, options);
      for (std::size_t s = 0; s < texts.size(); ++s) {
        if (!tags[s]) {
          ++out.skipped_sentences;
          log().warn("tagger dataset: unparseable tags for {} document {} sentence {}", pid, doc_index, s);
          continue;
        }
        TaggerExample ex;
        ex.patient_id = pid;
        ex.sentence = texts[s];
        for (const auto& c : *tags[s]) {
          const auto it = std::find(lexicon::kConcepts.begin(), lexicon::kConcepts.end(), c);
          ex.concepts[static_cast<std::size_t>(it - lexicon::kConcepts.begin())] = true;
        }
        ex.any_tag = std::any_of(ex.concepts.begin(), ex.concepts.end(), [](bool b) { return b; });
        ex.internal_split = tagger_internal_split(pid);
        out.examples.push_back(std::move(ex));
      }
    }
  }
  return out;
}

Stage1Result build_stage1_pairs(const Corpus& corpus, llm::ChatProvider& provider, std::size_t neg_ratio,
                                std::uint64_t seed, const llm::GatewayOptions& options) {
  Stage1Result out;
  std::map<std::string, std::vector<const TrialSpace*>> spaces_by_trial;
  for (const auto& s : corpus.spaces) spaces_by_trial[s.nct_id].push_back(&s);
  std::map<SummaryRef, const PatientSummary*> summaries;
  for (const auto& s : corpus.summaries) summaries[s.ref()] = &s;
  std::map<std::string, std::set<std::string>> enrolled_trials;
  for (const auto& e : corpus.enrollments) enrolled_trials[e.patient_id].insert(e.nct_id);

  auto enrollments = corpus.enrollments;
  std::sort(enrollments.begin(), enrollments.end(), [](const Enrollment& a, const Enrollment& b) {
    return std::tie(a.patient_id, a.enroll_date, a.nct_id) < std::tie(b.patient_id, b.enroll_date, b.nct_id);
  });

  std::vector<const PatientSummary*> anchors;
  std::set<SummaryRef> anchor_seen;
  for (const auto& e : enrollments) {
    if (!is_train(e.patient_id)) continue;
    auto s = summaries.find({e.patient_id, e.enroll_date, SummarySource::kTrialEnrollment});
    auto sp = spaces_by_trial.find(e.nct_id);
    if (s == summaries.end() || sp == spaces_by_trial.end()) {
      ++out.skipped_enrollments;
      log().warn("stage1: skipping enrollment {} on {} (no summary or no spaces)", e.patient_id, e.nct_id);
      continue;
    }
    if (anchor_seen.insert(s->first).second) anchors.push_back(s->second);
    for (const auto* space : sp->second) {
      llm::Decision d;
      try {
        d = llm::check_reasonable(*s->second, *space, provider, options);
      } catch (const DecisionParseError& err) {
        ++out.skipped_checks;
        log().warn("stage1: unparseable check for {} / {}: {}", e.patient_id, space->space_id, err.what());
        continue;
      }
      EmbedPairExample ex{s->first, space->space_id, s->second->text, space->raw_text,
                          PairRelation::kPositiveChecked, d.value, PairStage::kStage1, "", d.raw_text};
      out.enrolled_checked.push_back(ex);
      if (d.value) out.pairs.push_back(std::move(ex));
    }
  }

  const std::size_t positives = out.pairs.size();
  const std::size_t want = neg_ratio * positives;
  if (want == 0 || anchors.empty() || corpus.spaces.empty()) return out;
  Rng rng(seed);
  std::set<std::pair<SummaryRef, std::string>> used;
  for (const auto& p : out.pairs) used.insert({p.summary_ref, p.space_id});
  const std::size_t max_draws = want * 50 + 100;
  std::size_t made = 0;
  for (std::size_t draw = 0; draw < max_draws && made < want; ++draw) {
    const auto* anchor = anchors[rng.uniform_index(anchors.size())];
    const auto& space = corpus.spaces[rng.uniform_index(corpus.spaces.size())];
    if (enrolled_trials[anchor->patient_id].count(space.nct_id)) continue;
    if (!used.insert({anchor->ref(), space.space_id}).second) continue;
    out.pairs.push_back({anchor->ref(), space.space_id, anchor->text, space.raw_text, PairRelation::kRandomNegative,
                         false, PairStage::kStage1, "", std::nullopt});
    ++made;
  }
  if (made < want) log().warn("stage1: only {} of {} random negatives available", made, want);
  return out;
}

MiningResult mine_hard_negatives(const cascade::Matcher& matcher, llm::ChatProvider& provider,
                                 const MiningConfig& config, const llm::GatewayOptions& options) {
  MiningResult out;
  cascade::MatchOptions patient_opts;
  patient_opts.k = config.k_patient;
  cascade::MatchOptions space_opts;
  space_opts.k = config.k_space;
  if (config.train_only) space_opts.filter.split_in = std::set<Split>{Split::kTrain};

  std::vector<std::pair<std::string, std::string>> order;  // (summary key, space id)
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<const PatientSummary*> summaries;
  for (const auto& s : matcher.corpus().summaries) {
    if (!config.train_only || is_train(s.patient_id)) summaries.push_back(&s);
  }
  std::sort(summaries.begin(), summaries.end(),
            [](const auto* a, const auto* b) { return a->ref().key() < b->ref().key(); });
  for (const auto* s : summaries) {
    for (const auto& c : matcher.match_patient(*s, patient_opts)) {
      if (seen.insert({c.query_ref, c.item_ref}).second) order.emplace_back(c.query_ref, c.item_ref);
    }
  }
  std::vector<const TrialSpace*> spaces;
  for (const auto& s : matcher.corpus().spaces) spaces.push_back(&s);
  std::sort(spaces.begin(), spaces.end(), [](const auto* a, const auto* b) { return a->space_id < b->space_id; });
  for (const auto* sp : spaces) {
    for (const auto& c : matcher.match_space(*sp, space_opts)) {
      if (seen.insert({c.item_ref, c.query_ref}).second) order.emplace_back(c.item_ref, c.query_ref);
    }
  }

  for (const auto& [summary_key, space_id] : order) {
    const auto* s = matcher.summary(summary_key);
    const auto* sp = matcher.space(space_id);
    if (!s || !sp) throw NotFound("mining: indexed item missing from corpus: " + summary_key + " / " + space_id);
    llm::Decision d;
    try {
      d = llm::check_reasonable(*s, *sp, provider, options);
    } catch (const DecisionParseError& err) {
      ++out.skipped_checks;
      log().warn("mining: unparseable check for {} / {}: {}", summary_key, space_id, err.what());
      continue;
    }
    out.pairs.push_back({s->ref(), sp->space_id, s->text, sp->raw_text, PairRelation::kMinedLabeled, d.value,
                         PairStage::kRefine, config.round_tag, d.raw_text});
  }
  return out;
}

CheckerDataset build_checker_dataset(std::span<const EmbedPairExample> a, std::span<const EmbedPairExample> b,
                                     std::span<const EmbedPairExample> c) {
  CheckerDataset out;
  std::map<std::pair<std::string, std::string>, std::size_t> position;
  const std::array<std::pair<std::span<const EmbedPairExample>, CheckerProvenance>, 3> parts = {
      {{a, CheckerProvenance::kAEnrolled}, {b, CheckerProvenance::kBMinedPrelim}, {c, CheckerProvenance::kCMinedFinal}}};
  for (const auto& [part, provenance] : parts) {
    for (const auto& ex : part) {
      if (!is_train(ex.summary_ref.patient_id)) {
        throw LeakageError("checker dataset: patient " + ex.summary_ref.patient_id + " is in the " +
                           std::string(to_string(assign_split(ex.summary_ref.patient_id))) + " split");
      }
      const auto key = std::make_pair(ex.anchor_text, ex.candidate_text);
      auto it = position.find(key);
      if (it == position.end()) {
        position.emplace(key, out.examples.size());
        out.examples.push_back({ex.summary_ref, ex.space_id, ex.anchor_text, ex.candidate_text, ex.label, provenance});
        continue;
      }
      auto& kept = out.examples[it->second];
      if (kept.label == ex.label) {
        ++out.duplicates_dropped;
      } else {
        ++out.label_conflicts;
        log().warn("checker dataset: label conflict for {} / {}: {} replaces {}", ex.summary_ref.key(), ex.space_id,
                   to_string(provenance), to_string(kept.provenance));
        kept.label = ex.label;
        kept.provenance = provenance;
        kept.summary_ref = ex.summary_ref;
        kept.space_id = ex.space_id;
      }
    }
  }
  return out;
}

namespace {

template <typename T, typename IdOf, typename Allowed>
std::vector<std::string> scan(std::span<const T> xs, IdOf id_of, Allowed allowed) {
  std::set<std::string> bad;
  for (const auto& x : xs) {
    const auto& id = id_of(x);
    if (!allowed(assign_split(id))) bad.insert(id);
  }
  return {bad.begin(), bad.end()};
}

}  // namespace

std::vector<std::string> scan_leakage(std::span<const EmbedPairExample> examples) {
  return scan(examples, [](const auto& x) -> const std::string& { return x.summary_ref.patient_id; },
              [](Split s) { return s == Split::kTrain; });
}

std::vector<std::string> scan_leakage(std::span<const CheckerExample> examples) {
  return scan(examples, [](const auto& x) -> const std::string& { return x.summary_ref.patient_id; },
              [](Split s) { return s == Split::kTrain; });
}

std::vector<std::string> scan_leakage(std::span<const TaggerExample> examples) {
  return scan(examples, [](const auto& x) -> const std::string& { return x.patient_id; },
              [](Split s) { return s != Split::kTest; });
}

void assert_no_leakage(std::span<const EmbedPairExample> examples) {
  const auto bad = scan_leakage(examples);
  if (!bad.empty()) throw LeakageError("training pairs include non-train patient " + bad.front());
}

void assert_no_leakage(std::span<const CheckerExample> examples) {
  const auto bad = scan_leakage(examples);
  if (!bad.empty()) throw LeakageError("checker examples include non-train patient " + bad.front());
}

void write_ranking_pairs(std::span<const EmbedPairExample> pairs, const std::filesystem::path& file) {
  assert_no_leakage(pairs);
  std::vector<ordered_json> rows;
  for (const auto& p : pairs) {
    if (!p.label) continue;
    rows.push_back({{"v", 1}, {"summary_ref", ref_json(p.summary_ref)}, {"space_id", p.space_id},
                    {"anchor", p.anchor_text}, {"positive", p.candidate_text}});
  }
  write_file_atomic(file, jsonl(rows));
}

void write_contrastive_pairs(std::span<const EmbedPairExample> pairs, const std::filesystem::path& file) {
  assert_no_leakage(pairs);
  std::vector<ordered_json> rows;
  for (const auto& p : pairs) {
    rows.push_back({{"v", 1},
                    {"summary_ref", ref_json(p.summary_ref)},
                    {"space_id", p.space_id},
                    {"anchor", p.anchor_text},
                    {"candidate", p.candidate_text},
                    {"label", p.label ? 1 : 0},
                    {"relation", to_string(p.relation)},
                    {"stage", to_string(p.stage)},
                    {"round_tag", p.round_tag}});
  }
  write_file_atomic(file, jsonl(rows));
}

void write_checker_examples(std::span<const CheckerExample> examples, const std::filesystem::path& file) {
  assert_no_leakage(examples);
  std::vector<ordered_json> rows;
  for (const auto& e : examples) {
    rows.push_back({{"v", 1},
                    {"summary_ref", ref_json(e.summary_ref)},
                    {"space_id", e.space_id},
                    {"summary", e.summary_text},
                    {"space", e.space_text},
                    {"label", e.label ? 1 : 0},
                    {"provenance", to_string(e.provenance)}});
  }
  write_file_atomic(file, jsonl(rows));
}

void write_tagger_examples(std::span<const TaggerExample> examples, const std::filesystem::path& file) {
  const auto bad = scan_leakage(examples);
  if (!bad.empty()) throw LeakageError("tagger examples include test-split patient " + bad.front());
  std::vector<ordered_json> rows;
  for (const auto& e : examples) {
    ordered_json labels = ordered_json::object();
    for (std::size_t c = 0; c < lexicon::kConcepts.size(); ++c) {
      labels[std::string(lexicon::kConcepts[c])] = e.concepts[c] ? 1 : 0;
    }
    rows.push_back({{"v", 1},
                    {"patient_id", e.patient_id},
                    {"sentence", e.sentence},
                    {"labels", labels},
                    {"any_tag", e.any_tag ? 1 : 0},
                    {"split", to_string(e.internal_split)}});
  }
  write_file_atomic(file, jsonl(rows));
}

}  // namespace trialmatch::trainprep
