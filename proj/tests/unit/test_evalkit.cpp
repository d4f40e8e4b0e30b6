#include <gtest/gtest.h>

#include <json.hpp>

#include <random>

#include "test_support.h"
#include "trialmatch/cascade/checker.h"
#include "trialmatch/cascade/matcher.h"
#include "trialmatch/common/error.h"
#include "trialmatch/datamodel/split.h"
#include "trialmatch/embedding/embedding.h"
#include "trialmatch/evalkit/diagnostics.h"
#include "trialmatch/evalkit/metrics.h"
#include "trialmatch/evalkit/protocol.h"

namespace trialmatch::evalkit {
namespace {

using nlohmann::json;
using testing::TempDir;

TEST(Metrics, HandComputedRankingExample) {
  // q1: relevant at 1 and 3 -> P = 2/3, AP = (1 + 2/3) / 2.
  // q2: nothing relevant -> P = 0, AP = 0. q3 empty: skipped.
  const std::vector<Judgments> q = {{true, false, true}, {false, false}, {}};
  EXPECT_NEAR(precision_at_k(q), (2.0 / 3.0) / 2.0, 1e-12);
  EXPECT_NEAR(map_at_k(q), ((1.0 + 2.0 / 3.0) / 2.0) / 2.0, 1e-12);
  EXPECT_EQ(count_empty(q), 1u);
  const std::vector<Judgments> all_empty = {{}, {}};
  EXPECT_THROW(precision_at_k(all_empty), UndefinedMetric);
  EXPECT_THROW(map_at_k(all_empty), UndefinedMetric);
}

TEST(Metrics, FrozenOracleInstances) {
  const auto instances = json::parse(read_file(testing::fixture_dir() / "oracles" / "metrics.json"));
  ASSERT_EQ(instances.size(), 200u);
  for (std::size_t n = 0; n < instances.size(); ++n) {
    SCOPED_TRACE(n);
    const auto& in = instances[n];
    std::vector<Judgments> q;
    for (const auto& l : in["queries"]) q.push_back(l.get<std::vector<bool>>());
    EXPECT_NEAR(precision_at_k(q), in["precision_at_k"].get<double>(), 1e-9);
    EXPECT_NEAR(map_at_k(q), in["map_at_k"].get<double>(), 1e-9);
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_NEAR(average_precision(q[i]), in["average_precision"][i].get<double>(), 1e-9);
    }
    const auto scores = in["scores"].get<std::vector<double>>();
    const auto labels = in["labels"].get<std::vector<bool>>();
    EXPECT_NEAR(auroc(scores, labels), in["auroc"].get<double>(), 1e-9);
    EXPECT_NEAR(auprc(scores, labels), in["auprc"].get<double>(), 1e-9);
  }
}

TEST(Metrics, AurocInvariantUnderMonotoneTransform) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(100), t(100);
  std::vector<bool> y(100);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = std::round(u(gen) * 20) / 20;
    t[i] = std::exp(3 * s[i]) - 7;
    y[i] = u(gen) < s[i];
  }
  y[0] = true;
  y[1] = false;
  EXPECT_NEAR(auroc(s, y), auroc(t, y), 1e-12);
  EXPECT_NEAR(auprc(s, y), auprc(t, y), 1e-12);
}

TEST(Metrics, ClassificationEdgeCases) {
  const std::vector<double> s = {0.1, 0.9};
  EXPECT_THROW(auroc(s, {true, true}), UndefinedMetric);
  EXPECT_THROW(auroc(s, {true}), InvalidArgument);
  EXPECT_DOUBLE_EQ(auroc(s, {false, true}), 1.0);
  const std::vector<double> tie = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(auroc(tie, {false, true}), 0.5);
}

TEST(Metrics, CalibrationBins) {
  const std::vector<double> s = {0.05, 0.15, 0.12, 1.0};
  const auto bins = calibration_curve(s, {false, true, false, true}, 10);
  ASSERT_EQ(bins.size(), 3u);
  EXPECT_DOUBLE_EQ(bins[0].bin_mid, 0.05);
  EXPECT_EQ(bins[1].count, 2u);
  EXPECT_DOUBLE_EQ(bins[1].frac_positive, 0.5);
  EXPECT_NEAR(bins[1].mean_score, 0.135, 1e-12);
  EXPECT_DOUBLE_EQ(bins[2].bin_mid, 0.95);
  EXPECT_THROW(calibration_curve(s, {true, true, true, true}, 0), InvalidArgument);
}

std::vector<Point> cluster(std::mt19937_64& gen, double cx, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({cx + d(gen), d(gen)});
  return out;
}

TEST(Mmd, StatisticMatchesReference) {
  // numpy reference with bandwidth 1: 0.8069024599699118.
  const std::vector<Point> x = {{0, 0}, {1, 0}}, y = {{0, 1}, {2, 2}};
  EXPECT_NEAR(mmd_statistic(x, y, 1.0), 0.8069024599699118, 1e-12);
  // Median pairwise distance over the pooled sample: 1.8251407699364424.
  EXPECT_NEAR(mmd_test(x, y, 10, 1).bandwidth, 1.8251407699364424, 1e-12);
}

TEST(Mmd, IdenticalAndSeparatedSamples) {
  std::mt19937_64 gen(1);
  const auto a = cluster(gen, 0, 30);
  const auto same = mmd_test(a, a, 500, 3);
  EXPECT_LT(same.mmd, 1e-12);
  EXPECT_GT(same.p_value, 0.5);
  const auto b = cluster(gen, 4, 30);
  const auto apart = mmd_test(a, b, 500, 3);
  EXPECT_LT(apart.p_value, 0.01);
  EXPECT_EQ(apart.p_value, mmd_test(a, b, 500, 3).p_value);
}

TEST(Mmd, InputValidation) {
  const std::vector<Point> one = {{0, 0}}, two = {{0, 0}, {1, 1}}, ragged = {{0, 0}, {1}};
  EXPECT_THROW(mmd_test(one, two), InvalidArgument);
  EXPECT_THROW(mmd_test(two, ragged), InvalidArgument);
  const std::vector<Point> zeros = {{0, 0}, {0, 0}};
  const auto r = mmd_test(zeros, zeros, 10);
  EXPECT_EQ(r.mmd, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(KnnFilter, DropsFarPoint) {
  std::vector<std::array<double, 2>> pts;
  std::vector<std::string> groups;
  for (int i = 0; i < 10; ++i) {
    pts.push_back({static_cast<double>(i % 3) * 0.1, static_cast<double>(i / 3) * 0.1});
    groups.push_back("lung");
  }
  pts.push_back({50, 50});
  groups.push_back("lung");
  pts.push_back({9, 9});
  groups.push_back("tiny");
  const auto kept = knn_outlier_filter(pts, groups, 3, 2.0);
  EXPECT_EQ(std::count(kept.begin(), kept.end(), 10u), 0);
  EXPECT_EQ(std::count(kept.begin(), kept.end(), 11u), 1);
  EXPECT_EQ(kept.size(), 11u);
  EXPECT_TRUE(std::is_sorted(kept.begin(), kept.end()));
}

TEST(Cohesion, WithinExceedsBetween) {
  const std::vector<std::vector<float>> v = {{1, 0}, {0.9f, 0.1f}, {0, 1}, {0.1f, 0.9f}};
  const std::vector<std::string> l = {"a", "a", "b", "b"};
  const auto c = cosine_cohesion(v, l);
  EXPECT_GT(c.within, c.between);
  const std::vector<std::string> single = {"a", "a", "a", "b"};
  EXPECT_THROW(cosine_cohesion(v, single), UndefinedMetric);
}

TEST(Projection, ExportAndImport) {
  TempDir dir;
  std::vector<ProjectionRecord> recs = {{"p1", "Lung", "patient", {0.5f, 0.25f}, {}}};
  write_projection_export(recs, dir / "export.jsonl");
  const auto line = json::parse(read_file(dir / "export.jsonl"));
  EXPECT_EQ(line["organ"], "Lung");
  EXPECT_EQ(line["vector"].size(), 2u);
  write_file_atomic(dir / "coords.jsonl", R"({"id":"p1","organ":"Lung","source":"patient","x":1.5,"y":-2})" "\n");
  const auto back = read_projection_coordinates(dir / "coords.jsonl");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].xy[0], 1.5);
  EXPECT_EQ(back[0].xy[1], -2.0);
}

TEST(Protocol, GoldLabelsLatestProvenanceWins) {
  PairLabel a{{"p", Date::from_ymd(2020, 1, 1), SummarySource::kTrialEnrollment}, "NCT00000001#1", true,
              LabelProvenance::kMinedRound2, std::nullopt, {}};
  PairLabel b = a;
  b.label = false;
  b.provenance = LabelProvenance::kStage1Enrolled;
  const auto g = gold_labels({a, b});
  EXPECT_TRUE(g.at({a.summary_ref.key(), "NCT00000001#1"}));
  EXPECT_EQ(parse_protocol("trial_centric"), Protocol::kTrialCentricK20);
  EXPECT_THROW(parse_protocol("both"), InvalidArgument);
}

struct DeskRun {
  DeskRun() {
    corpus = std::make_shared<Corpus>(testing::desk_corpus());
    embedder = std::make_shared<embedding::MockEmbedder>(256);
    auto idx = std::make_shared<index::VectorIndex>(cascade::build_corpus_index(*corpus, *embedder));
    matcher = std::make_unique<cascade::Matcher>(idx, corpus, embedder);
  }
  std::shared_ptr<Corpus> corpus;
  std::shared_ptr<embedding::MockEmbedder> embedder;
  std::unique_ptr<cascade::Matcher> matcher;
};

TEST(Protocol, OracleCheckerGivesPerfectPrecision) {
  DeskRun run;
  std::map<std::string, const PatientSummary*> by_ref;
  for (const auto& s : run.corpus->summaries) by_ref[s.ref().key()] = &s;
  cascade::OracleChecker oracle;
  for (const auto& [key, label] : gold_labels(run.corpus->labels)) {
    oracle.set_label(by_ref.at(key.first)->text, run.matcher->space(key.second)->raw_text, label);
  }
  for (auto p : {Protocol::kPatientCentricK10, Protocol::kTrialCentricK20}) {
    ProtocolConfig cfg;
    cfg.protocol = p;
    cfg.checker = &oracle;
    const auto [raw, checked] = run_protocol(*run.matcher, cfg);
    EXPECT_EQ(raw.k, p == Protocol::kPatientCentricK10 ? 10u : 20u);
    EXPECT_TRUE(raw.missing_gold.empty());
    ASSERT_TRUE(checked.precision_at_k.has_value());
    EXPECT_DOUBLE_EQ(*checked.precision_at_k, 1.0);
    EXPECT_DOUBLE_EQ(*checked.map_at_k, 1.0);
    EXPECT_LE(checked.mean_results, raw.mean_results);
    EXPECT_DOUBLE_EQ(checked.checker_auroc.value_or(1.0), 1.0);
  }
}

TEST(Protocol, NoCheckerVariantsAgreeAndQueriesComeFromTestSplit) {
  DeskRun run;
  ProtocolConfig cfg;
  const auto [raw, checked] = run_protocol(*run.matcher, cfg);
  EXPECT_EQ(raw.precision_at_k, checked.precision_at_k);
  EXPECT_EQ(raw.map_at_k, checked.map_at_k);
  EXPECT_FALSE(checked.checker_auroc.has_value());
  std::size_t test_summaries = 0;
  for (const auto& s : run.corpus->summaries) test_summaries += assign_split(s.patient_id) == Split::kTest;
  EXPECT_EQ(raw.n_queries + raw.missing_gold.size(), test_summaries);

  cfg.protocol = Protocol::kTrialCentricK20;
  const auto [traw, tchecked] = run_protocol(*run.matcher, cfg);
  EXPECT_EQ(traw.n_queries + traw.missing_gold.size(), run.corpus->spaces.size());
}

TEST(Protocol, RenderingIsStable) {
  DeskRun run;
  cascade::LexicalChecker lexical;
  ProtocolConfig cfg;
  cfg.checker = &lexical;
  const auto reports = run_protocol(*run.matcher, cfg);
  EXPECT_EQ(render_table(reports), render_table(run_protocol(*run.matcher, cfg)));
  const auto table = render_table(reports);
  EXPECT_EQ(table.rfind("Patient-centric use case (up to 10 trial spaces per patient summary query)\n", 0), 0u);
  EXPECT_NE(table.find("Metric\tRetrieval only\tRetrieval + checker\n"), std::string::npos);
  const auto jsonl = render_jsonl(reports);
  const auto nl = jsonl.find('\n');
  const auto first = json::parse(jsonl.substr(0, nl));
  EXPECT_EQ(first["variant"], "retrieval_only");
  EXPECT_EQ(json::parse(jsonl.substr(nl + 1))["variant"], "retrieval_plus_checker");
}

}  // namespace
}  // namespace trialmatch::evalkit
