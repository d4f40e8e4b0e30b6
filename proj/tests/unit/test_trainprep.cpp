#include <gtest/gtest.h>

#include <json.hpp>

#include <set>

#include "test_support.h"
#include "trialmatch/cascade/matcher.h"
#include "trialmatch/common/error.h"
#include "trialmatch/datamodel/split.h"
#include "trialmatch/embedding/embedding.h"
#include "trialmatch/llm/mock_provider.h"
#include "trialmatch/trainprep/trainprep.h"

namespace trialmatch::trainprep {
namespace {

using nlohmann::json;
using testing::TempDir;

std::string first_id_in(Split split) {
  for (int i = 0;; ++i) {
    std::string id = "patient_" + std::to_string(i);
    if (assign_split(id) == split) return id;
  }
}

EmbedPairExample pair(const std::string& patient, const std::string& space, bool label,
                      const std::string& summary_text = "s", const std::string& space_text = "t") {
  return {{patient, Date::from_ymd(2020, 1, 1), SummarySource::kTrialEnrollment}, space, summary_text, space_text,
          PairRelation::kMinedLabeled, label, PairStage::kRefine, "round1", std::nullopt};
}

TEST(TaggerSplit, UsesHighDigits) {
  // (fnv1a64("patient_00042") / 100) % 100 == 75, from an independent implementation.
  EXPECT_EQ(tagger_internal_split("patient_00042"), Split::kTrain);
  int train = 0;
  for (int i = 0; i < 10000; ++i) train += tagger_internal_split("p" + std::to_string(i)) == Split::kTrain;
  EXPECT_NEAR(train / 10000.0, 0.89, 0.015);
}

TEST(Tagger, SamplesTrainAndValidationPatientsOnly) {
  const auto& c = testing::desk_corpus();
  llm::MockChatProvider mock;
  const auto ds = build_tagger_dataset(c.documents, mock, 8, 11);
  ASSERT_FALSE(ds.examples.empty());
  std::set<std::string> patients;
  for (const auto& e : ds.examples) {
    patients.insert(e.patient_id);
    EXPECT_NE(assign_split(e.patient_id), Split::kTest);
    EXPECT_EQ(e.internal_split, tagger_internal_split(e.patient_id));
    EXPECT_EQ(e.any_tag, std::find(e.concepts.begin(), e.concepts.end(), true) != e.concepts.end());
  }
  EXPECT_LE(patients.size(), 8u);
  EXPECT_TRUE(scan_leakage(std::span<const TaggerExample>(ds.examples)).empty());
  const auto again = build_tagger_dataset(c.documents, mock, 8, 11);
  ASSERT_EQ(again.examples.size(), ds.examples.size());
  for (std::size_t i = 0; i < ds.examples.size(); ++i) EXPECT_EQ(again.examples[i].sentence, ds.examples[i].sentence);
}

TEST(Stage1, PositivesFromTrainEnrollmentsAndDisjointNegatives) {
  const auto& c = testing::desk_corpus();
  llm::MockChatProvider mock;
  const auto r = build_stage1_pairs(c, mock, 1, 5);
  std::map<std::string, std::set<std::string>> enrolled;
  for (const auto& e : c.enrollments) enrolled[e.patient_id].insert(e.nct_id);
  std::map<std::string, std::string> space_trial;
  for (const auto& s : c.spaces) space_trial[s.space_id] = s.nct_id;

  std::size_t positives = 0, negatives = 0;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : r.pairs) {
    EXPECT_EQ(assign_split(p.summary_ref.patient_id), Split::kTrain);
    EXPECT_TRUE(seen.insert({p.summary_ref.key(), p.space_id}).second);
    EXPECT_EQ(p.stage, PairStage::kStage1);
    if (p.relation == PairRelation::kPositiveChecked) {
      ++positives;
      EXPECT_TRUE(p.label);
      EXPECT_EQ(p.summary_ref.source, SummarySource::kTrialEnrollment);
      EXPECT_TRUE(enrolled[p.summary_ref.patient_id].count(space_trial.at(p.space_id)));
    } else {
      ++negatives;
      EXPECT_FALSE(p.label);
      EXPECT_FALSE(enrolled[p.summary_ref.patient_id].count(space_trial.at(p.space_id)));
    }
  }
  EXPECT_GT(positives, 0u);
  EXPECT_EQ(negatives, positives);
  EXPECT_GE(r.enrolled_checked.size(), positives);
  const auto again = build_stage1_pairs(c, mock, 1, 5);
  ASSERT_EQ(again.pairs.size(), r.pairs.size());
  for (std::size_t i = 0; i < r.pairs.size(); ++i) EXPECT_EQ(again.pairs[i].space_id, r.pairs[i].space_id);
}

TEST(Mining, TrainOnlyUniquePairs) {
  auto corpus = std::make_shared<Corpus>(testing::desk_corpus());
  auto embedder = std::make_shared<embedding::MockEmbedder>(256);
  auto idx = std::make_shared<index::VectorIndex>(cascade::build_corpus_index(*corpus, *embedder));
  cascade::Matcher matcher(idx, corpus, embedder);
  llm::MockChatProvider mock;
  MiningConfig cfg;
  cfg.k_patient = 5;
  cfg.k_space = 5;
  const auto r = mine_hard_negatives(matcher, mock, cfg);
  ASSERT_FALSE(r.pairs.empty());
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : r.pairs) {
    EXPECT_EQ(assign_split(p.summary_ref.patient_id), Split::kTrain);
    EXPECT_TRUE(seen.insert({p.summary_ref.key(), p.space_id}).second);
    EXPECT_EQ(p.relation, PairRelation::kMinedLabeled);
    EXPECT_EQ(p.round_tag, "round1");
  }
  EXPECT_NO_THROW(assert_no_leakage(std::span<const EmbedPairExample>(r.pairs)));
}

TEST(CheckerDataset, DedupAndConflicts) {
  const auto train = first_id_in(Split::kTrain);
  const std::vector<EmbedPairExample> a = {pair(train, "NCT00000001#1", true, "x", "y")};
  const std::vector<EmbedPairExample> b = {pair(train, "NCT00000001#1", true, "x", "y"),
                                           pair(train, "NCT00000002#1", true, "x", "z")};
  const std::vector<EmbedPairExample> c = {pair(train, "NCT00000002#1", false, "x", "z")};
  const auto ds = build_checker_dataset(a, b, c);
  ASSERT_EQ(ds.examples.size(), 2u);
  EXPECT_EQ(ds.duplicates_dropped, 1u);
  EXPECT_EQ(ds.label_conflicts, 1u);
  for (const auto& e : ds.examples) {
    if (e.space_id == "NCT00000001#1") EXPECT_EQ(e.provenance, CheckerProvenance::kAEnrolled);
    if (e.space_id == "NCT00000002#1") EXPECT_FALSE(e.label);
  }
}

TEST(Leakage, NonTrainPatientsRejected) {
  const auto test_id = first_id_in(Split::kTest);
  const auto val_id = first_id_in(Split::kValidation);
  const std::vector<EmbedPairExample> leaky = {pair(first_id_in(Split::kTrain), "NCT00000001#1", true),
                                               pair(test_id, "NCT00000001#1", true),
                                               pair(val_id, "NCT00000001#1", true)};
  auto bad = scan_leakage(std::span<const EmbedPairExample>(leaky));
  std::vector<std::string> want = {test_id, val_id};
  std::sort(want.begin(), want.end());
  EXPECT_EQ(bad, want);
  EXPECT_THROW(assert_no_leakage(std::span<const EmbedPairExample>(leaky)), LeakageError);
  EXPECT_THROW(build_checker_dataset(leaky, {}, {}), LeakageError);
  TempDir dir;
  EXPECT_THROW(write_ranking_pairs(leaky, dir / "r.jsonl"), LeakageError);
  EXPECT_FALSE(std::filesystem::exists(dir / "r.jsonl"));

  TaggerExample t{test_id, "s", {}, false, Split::kTrain};
  EXPECT_THROW(write_tagger_examples(std::vector<TaggerExample>{t}, dir / "t.jsonl"), LeakageError);
}

TEST(Files, RankingAndContrastiveFormats) {
  const auto train = first_id_in(Split::kTrain);
  const std::vector<EmbedPairExample> pairs = {pair(train, "NCT00000001#1", true, "sum", "spc"),
                                               pair(train, "NCT00000002#1", false, "sum", "other")};
  TempDir dir;
  write_ranking_pairs(pairs, dir / "ranking.jsonl");
  write_contrastive_pairs(pairs, dir / "contrastive.jsonl");
  const auto ranking = read_file(dir / "ranking.jsonl");
  EXPECT_EQ(std::count(ranking.begin(), ranking.end(), '\n'), 1);
  const auto r = json::parse(ranking);
  EXPECT_EQ(r["anchor"], "sum");
  EXPECT_EQ(r["positive"], "spc");
  EXPECT_EQ(r["summary_ref"]["patient_id"], train);
  const auto contrastive = read_file(dir / "contrastive.jsonl");
  EXPECT_EQ(std::count(contrastive.begin(), contrastive.end(), '\n'), 2);
  const auto second = json::parse(contrastive.substr(contrastive.find('\n') + 1));
  EXPECT_EQ(second["label"], 0);
  EXPECT_EQ(second["relation"], std::string(to_string(PairRelation::kMinedLabeled)));
  EXPECT_EQ(second["round_tag"], "round1");
}

}  // namespace
}  // namespace trialmatch::trainprep
