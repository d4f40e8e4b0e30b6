#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "test_support.h"
#include "trialmatch/common/error.h"
#include "trialmatch/datamodel/corpus.h"
#include "trialmatch/datamodel/split.h"

namespace trialmatch {
namespace {

using testing::TempDir;

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  out << text;
}

TEST(Split, KnownIdLandsInBucket43) {
  // fnv1a64("patient_00042") % 100 == 43, from an independent implementation.
  EXPECT_EQ(split_bucket("patient_00042"), 43u);
  EXPECT_EQ(assign_split("patient_00042"), Split::kTrain);
}

TEST(Split, ProportionsOverTenThousandIds) {
  std::map<Split, int> counts;
  for (int i = 0; i < 10000; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "patient_%05d", i);
    ++counts[assign_split(id)];
  }
  // Reference counts: 8020 / 980 / 1000.
  EXPECT_EQ(counts[Split::kTrain], 8020);
  EXPECT_EQ(counts[Split::kValidation], 980);
  EXPECT_EQ(counts[Split::kTest], 1000);
  EXPECT_NEAR(counts[Split::kTrain] / 100.0, 80.0, 1.5);
  EXPECT_NEAR(counts[Split::kValidation] / 100.0, 10.0, 1.5);
  EXPECT_NEAR(counts[Split::kTest] / 100.0, 10.0, 1.5);
}

TEST(Split, BucketBoundaries) {
  for (int i = 0; i < 2000; ++i) {
    const std::string id = "p" + std::to_string(i);
    const auto b = split_bucket(id);
    const Split s = assign_split(id);
    if (b < 80) EXPECT_EQ(s, Split::kTrain);
    else if (b < 90) EXPECT_EQ(s, Split::kValidation);
    else EXPECT_EQ(s, Split::kTest);
  }
}

TEST(Types, EnumStringsRoundTrip) {
  for (auto t : {DocType::kOncologistNote, DocType::kImagingReport, DocType::kPathologyReport}) {
    EXPECT_EQ(parse_doc_type(to_string(t)), t);
  }
  for (auto s : {SummarySource::kTrialEnrollment, SummarySource::kStandardOfCare, SummarySource::kUserEntered}) {
    EXPECT_EQ(parse_summary_source(to_string(s)), s);
  }
  for (auto s : {Split::kTrain, Split::kValidation, Split::kTest}) EXPECT_EQ(parse_split(to_string(s)), s);
  for (auto p : {LabelProvenance::kStage1Enrolled, LabelProvenance::kStage1RandomNegative,
                 LabelProvenance::kMinedRound1, LabelProvenance::kMinedRound2}) {
    EXPECT_EQ(parse_label_provenance(to_string(p)), p);
  }
  EXPECT_THROW(parse_doc_type("radiology"), ParseError);
}

TEST(Types, NctIdsAndSpaceIds) {
  EXPECT_TRUE(is_valid_nct_id("NCT01234567"));
  EXPECT_FALSE(is_valid_nct_id("NCT0000000"));
  EXPECT_FALSE(is_valid_nct_id("NCT0123456X"));
  EXPECT_FALSE(is_valid_nct_id("nct01234567"));
  EXPECT_EQ(make_space_id("NCT01234567", 2), "NCT01234567#2");
}

TEST(Corpus, DeskFixtureLoadsStrictAndValidates) {
  const Corpus& c = testing::desk_corpus();
  EXPECT_EQ(c.documents.size(), 150u);
  EXPECT_EQ(c.summaries.size(), 50u);
  EXPECT_EQ(c.trials.size(), 20u);
  EXPECT_EQ(c.spaces.size(), 40u);
  EXPECT_EQ(c.labels.size(), 2000u);
  EXPECT_TRUE(validate_corpus(c).empty());
}

TEST(Corpus, SaveLoadRoundTripIsByteStable) {
  const Corpus& c = testing::desk_corpus();
  TempDir a, b;
  save_corpus(c, a.path());
  const Corpus back = load_corpus(a.path(), {.strict = true});
  EXPECT_EQ(back, c);
  save_corpus(back, b.path());
  for (const char* f : {kDocumentsFile, kSummariesFile, kTrialsFile, kSpacesFile, kEnrollmentsFile, kLabelsFile}) {
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
}

TEST(Corpus, MissingFilesLoadEmpty) {
  TempDir d;
  const Corpus c = load_corpus(d.path());
  EXPECT_TRUE(c.empty());
}

TEST(Corpus, UnknownFieldsKeptUnlessStrict) {
  TempDir d;
  write_text(d / kTrialsFile,
             R"({"nct_id":"NCT01234567","eligibility_text":"x","open_date":"2020-01-01","site":"Boston"})"
             "\n");
  const Corpus lax = load_corpus(d.path());
  ASSERT_EQ(lax.trials.size(), 1u);
  EXPECT_EQ(lax.trials[0].extra.count("site"), 1u);
  EXPECT_THROW(load_corpus(d.path(), {.strict = true}), ParseError);

  TempDir out;
  save_corpus(lax, out.path());
  EXPECT_NE(read_file(out / kTrialsFile).find("\"site\":\"Boston\""), std::string::npos);
}

TEST(Corpus, MalformedRecordsReportLineNumbers) {
  TempDir d;
  write_text(d / kTrialsFile,
             R"({"nct_id":"NCT01234567","eligibility_text":"x","open_date":"2020-01-01"})"
             "\n"
             R"({"nct_id":"NCT1","eligibility_text":"x","open_date":"2020-01-01"})"
             "\n");
  try {
    load_corpus(d.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Corpus, CloseBeforeOpenRejected) {
  TempDir d;
  write_text(d / kTrialsFile,
             R"({"nct_id":"NCT01234567","eligibility_text":"x","open_date":"2020-01-01","close_date":"2019-01-01"})"
             "\n");
  EXPECT_THROW(load_corpus(d.path()), ParseError);
}

TEST(Corpus, DuplicateKeysConflict) {
  TempDir d;
  const std::string line = R"({"nct_id":"NCT01234567","eligibility_text":"x","open_date":"2020-01-01"})";
  write_text(d / kTrialsFile, line + "\n" + line + "\n");
  EXPECT_THROW(load_corpus(d.path()), ConflictError);
}

TEST(Corpus, SpaceIdMustMatchOrdinal) {
  TempDir d;
  write_text(d / kSpacesFile,
             R"({"space_id":"NCT01234567#2","nct_id":"NCT01234567","ordinal":1,"raw_text":"Cohort A"})"
             "\n");
  EXPECT_THROW(load_corpus(d.path()), ParseError);
}

TEST(Corpus, ValidateFindsDanglingReferences) {
  Corpus c = testing::desk_corpus();
  c.spaces[0].nct_id = "NCT00000001";
  c.spaces[0].space_id = make_space_id("NCT00000001", c.spaces[0].ordinal);
  c.enrollments.push_back({"nobody", c.trials[0].nct_id, c.trials[0].open_date, {}});
  c.labels[0].summary_ref.patient_id = "nobody";
  const auto issues = validate_corpus(c);
  auto has = [&](const std::string& needle) {
    for (const auto& m : issues) {
      if (m.find(needle) != std::string::npos) return true;
    }
    return false;
  };
  EXPECT_TRUE(has("references unknown trial"));
  EXPECT_TRUE(has("enrollment references unknown patient nobody"));
  EXPECT_TRUE(has("label references unknown summary"));
}

TEST(Corpus, CanonicalizeSortsByKey) {
  Corpus c = testing::desk_corpus();
  std::reverse(c.trials.begin(), c.trials.end());
  std::reverse(c.labels.begin(), c.labels.end());
  canonicalize(c);
  EXPECT_EQ(c, testing::desk_corpus());
}

TEST(Corpus, AtomicWriteReplacesContents) {
  TempDir d;
  write_file_atomic(d / "f.txt", "one");
  write_file_atomic(d / "f.txt", "two");
  EXPECT_EQ(read_file(d / "f.txt"), "two");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(d.path())) ++n;
  EXPECT_EQ(n, 1u);
}

TEST(Summary, RefKeyFormat) {
  PatientSummary s;
  s.patient_id = "p1";
  s.anchor_date = Date::from_ymd(2024, 10, 22);
  s.source = SummarySource::kStandardOfCare;
  EXPECT_EQ(s.ref().key(), "p1@2024-10-22/" + std::string(to_string(SummarySource::kStandardOfCare)));
}

}  // namespace
}  // namespace trialmatch
