#include <gtest/gtest.h>

#include "test_support.h"
#include "trialmatch/common/error.h"
#include "trialmatch/condenser/condenser.h"

namespace trialmatch::condenser {
namespace {

using testing::FakeTransport;
using testing::TempDir;

ClinicalDocument doc(std::string text, Date date = Date::from_ymd(2024, 1, 5),
                     DocType type = DocType::kPathologyReport, std::string patient = "p1") {
  return {std::move(patient), type, date, std::move(text), {}};
}

std::vector<std::string> texts(const std::vector<Sentence>& s) {
  std::vector<std::string> out;
  for (const auto& x : s) out.push_back(x.text);
  return out;
}

// Scores every sentence with a fixed value.
class ConstantTagger final : public SentenceTagger {
 public:
  explicit ConstantTagger(double v) : v_(v) {}
  std::vector<TagScores> score(std::span<const std::string> sentences) override {
    TagScores t;
    t.concepts.fill(v_);
    t.any_tag = v_;
    return std::vector<TagScores>(sentences.size(), t);
  }

 private:
  double v_;
};

TEST(Segment, BoundariesAndAbbreviations) {
  const auto s = segment(doc("Seen by Dr. Smith today. Stage pT2a. N1. disease noted!  Is it metastatic? Yes.\nNew line here"));
  EXPECT_EQ(texts(s), (std::vector<std::string>{"Seen by Dr. Smith today.", "Stage pT2a. N1. disease noted!",
                                                "Is it metastatic?", "Yes.", "New line here"}));
}

TEST(Segment, SpansPointIntoSource) {
  const auto d = doc("  First sentence.   Second one (with parens.)  \n\n Third");
  const auto s = segment(d, 4);
  ASSERT_EQ(s.size(), 3u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].seq, i);
    EXPECT_EQ(s[i].doc_ref.index, 4u);
    EXPECT_EQ(d.text.substr(s[i].char_start, s[i].char_end - s[i].char_start), s[i].text);
    if (i > 0) EXPECT_GE(s[i].char_start, s[i - 1].char_end);
  }
  EXPECT_EQ(s[1].text, "Second one (with parens.)");
}

TEST(Segment, InitialsDoNotSplit) {
  EXPECT_EQ(segment(doc("Reviewed with J. Doe at clinic. Done.")).size(), 2u);
  EXPECT_TRUE(segment(doc("   \n  ")).empty());
}

TEST(Tagger, LexiconScoresWholeWords) {
  LexiconTagger tagger;
  const std::vector<std::string> in = {"Biopsy showed adenocarcinoma with EGFR mutation.",
                                       "Patient enjoys gardening.", "Cancerous-looking? no, tumors."};
  const auto scores = tagger.score(in);
  ASSERT_EQ(scores.size(), 3u);
  EXPECT_EQ(scores[0].concepts[1], 1.0);  // histology
  EXPECT_EQ(scores[0].concepts[5], 1.0);  // biomarkers
  EXPECT_EQ(scores[0].any_tag, 1.0);
  EXPECT_EQ(scores[1].any_tag, 0.0);
}

TEST(Tagger, RemoteContract) {
  auto transport = std::make_shared<FakeTransport>();
  transport->set("http://tag.test/v1/tag", 200, R"({"scores":[[0,0,0,0,0,0.5,0.9]]})");
  RemoteTagger tagger("http://tag.test", transport, "tok");
  const std::vector<std::string> one = {"EGFR positive."};
  const auto s = tagger.score(one);
  EXPECT_DOUBLE_EQ(s.at(0).concepts[5], 0.5);
  EXPECT_DOUBLE_EQ(s.at(0).any_tag, 0.9);
  const std::vector<std::string> two = {"a", "b"};
  EXPECT_THROW(tagger.score(two), ContractViolation);
}

TEST(Tag, BatchesAndRangeCheck) {
  const auto sentences = segment(doc("One. Two. Three. Four. Five."));
  ConstantTagger ok(0.25);
  EXPECT_EQ(tag(sentences, ok, 2).size(), 5u);
  ConstantTagger bad(1.5);
  EXPECT_THROW(tag(sentences, bad, 2), ContractViolation);
  EXPECT_THROW(tag(sentences, ok, 0), InvalidArgument);
}

TEST(Threshold, MaximizesF1) {
  // Hand-computed F1 per threshold: .1 -> 2/3, .35 -> 0.8, .4 -> 0.5, .8 -> 2/3.
  const std::vector<double> scores = {0.1, 0.4, 0.35, 0.8};
  EXPECT_DOUBLE_EQ(select_threshold(scores, {false, false, true, true}), 0.35);
}

TEST(Threshold, TiesPickLowest) {
  // F1 is 2/3 at both 0.2 and 0.8.
  const std::vector<double> scores = {0.2, 0.4, 0.6, 0.8};
  EXPECT_DOUBLE_EQ(select_threshold(scores, {true, false, false, true}), 0.2);
}

TEST(Threshold, Errors) {
  const std::vector<double> scores = {0.2, 0.4};
  EXPECT_THROW(select_threshold(scores, {true, true}), InvalidArgument);
  EXPECT_THROW(select_threshold(scores, {true}), InvalidArgument);
}

TEST(Condense, TemporalCutoffOrderAndHeaders) {
  const std::vector<ClinicalDocument> docs = {
      doc("Imaging shows metastatic lesions. Weather is nice.", Date::from_ymd(2024, 3, 1), DocType::kImagingReport),
      doc("Biopsy: lung adenocarcinoma.", Date::from_ymd(2024, 1, 5)),
      doc("Started osimertinib.", Date::from_ymd(2024, 6, 1), DocType::kOncologistNote),
  };
  LexiconTagger tagger;
  const auto rec = condense(docs, tagger, 0.5, Date::from_ymd(2024, 3, 1));
  EXPECT_EQ(rec.patient_id, "p1");
  EXPECT_EQ(rec.text,
            "[2024-01-05 pathology_report]\nBiopsy: lung adenocarcinoma.\n"
            "[2024-03-01 imaging_report]\nImaging shows metastatic lesions.");
  ASSERT_EQ(rec.retained.size(), 2u);
  EXPECT_EQ(rec.retained[0].doc_ref.index, 1u);
  EXPECT_EQ(rec.retained[1].doc_ref.index, 0u);
}

TEST(Condense, EmptyAndMixedInputs) {
  LexiconTagger tagger;
  const std::vector<ClinicalDocument> late = {doc("Lung cancer.", Date::from_ymd(2025, 1, 1))};
  EXPECT_THROW(condense(late, tagger, 0.5, Date::from_ymd(2024, 1, 1)), EmptyRecordError);
  const std::vector<ClinicalDocument> bland = {doc("Patient enjoys gardening.")};
  EXPECT_THROW(condense(bland, tagger, 0.5, Date::from_ymd(2024, 12, 1)), EmptyRecordError);
  const std::vector<ClinicalDocument> mixed = {doc("Lung cancer."), doc("Lung cancer.", Date::from_ymd(2024, 1, 5),
                                                                       DocType::kPathologyReport, "p2")};
  EXPECT_THROW(condense(mixed, tagger, 0.5, Date::from_ymd(2024, 12, 1)), InvalidArgument);
  EXPECT_THROW(condense(bland, tagger, 1.5, Date::from_ymd(2024, 12, 1)), InvalidArgument);
}

TEST(Condense, ThresholdZeroKeepsEverything) {
  const std::vector<ClinicalDocument> docs = {doc("Patient enjoys gardening. Lung cancer.")};
  ConstantTagger zero(0.0);
  EXPECT_EQ(condense(docs, zero, 0.0, Date::from_ymd(2024, 12, 1)).retained.size(), 2u);
}

TEST(Condense, FileRoundTrip) {
  TempDir dir;
  std::vector<CondensedRecord> recs = {{"p1", Date::from_ymd(2024, 1, 1), "[2024-01-01 x]\nline \"quoted\"", {}},
                                       {"p2", Date::from_ymd(2023, 5, 6), "text", {}}};
  write_condensed(recs, dir / "condensed.jsonl");
  const auto back = read_condensed(dir / "condensed.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].patient_id, "p1");
  EXPECT_EQ(back[0].text, recs[0].text);
  EXPECT_EQ(back[1].as_of_date, recs[1].as_of_date);
}

TEST(Condense, DeskDocumentsCondenseDeterministically) {
  const Corpus& c = testing::desk_corpus();
  std::vector<ClinicalDocument> mine;
  for (const auto& d : c.documents) {
    if (d.patient_id == c.summaries.front().patient_id) mine.push_back(d);
  }
  ASSERT_FALSE(mine.empty());
  LexiconTagger tagger;
  const auto as_of = c.summaries.front().anchor_date;
  const auto a = condense(mine, tagger, 0.5, as_of);
  const auto b = condense(mine, tagger, 0.5, as_of);
  EXPECT_EQ(a.text, b.text);
  for (const auto& s : a.retained) EXPECT_LE(s.doc_ref.date, as_of);
}

}  // namespace
}  // namespace trialmatch::condenser
