// Acceptance suite: one [PASS]/[FAIL] line per primary criterion. Exits
// nonzero when any criterion fails.
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "test_support.h"
#include "trialmatch/cascade/checker.h"
#include "trialmatch/cascade/matcher.h"
#include "trialmatch/common/error.h"
#include "trialmatch/common/hash.h"
#include "trialmatch/common/rng.h"
#include "trialmatch/datamodel/split.h"
#include "trialmatch/embedding/embedding.h"
#include "trialmatch/evalkit/diagnostics.h"
#include "trialmatch/evalkit/metrics.h"
#include "trialmatch/evalkit/protocol.h"
#include "trialmatch/index/vector_index.h"
#include "trialmatch/llm/mock_provider.h"
#include "trialmatch/llm/parsers.h"
#include "trialmatch/llm/prompt.h"
#include "trialmatch/service/cli.h"
#include "trialmatch/trainprep/trainprep.h"

namespace trialmatch {
namespace {

using nlohmann::json;

// Pinned tolerances and budgets.
constexpr double kMetricTol = 1e-9;
constexpr double kSplitTolPoints = 1.5;
constexpr double kMmdIdenticalMax = 1e-12;
constexpr double kMmdAlpha = 0.01;
constexpr std::size_t kMmdPermutations = 10000;
constexpr std::size_t kTemporalTrials = 10000;
constexpr double kMetricBudget = 10.0;
constexpr double kSearchBudget = 5.0;
constexpr double kCascadeBudget = 5.0;
constexpr double kEndToEndBudget = 60.0;
constexpr double kMmdBudget = 30.0;

// Collects failure messages; a criterion passes with none.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
  }
};

struct Criterion {
  std::string name;
  double budget_seconds = 0.0;  // 0: no runtime bound
  std::function<void(Check&)> run;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<float> random_unit(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = static_cast<float>(rng.normal());
    norm += static_cast<double>(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
  return v;
}

// Metric oracles.

void metric_oracles(Check& c) {
  const auto instances = json::parse(read_file(testing::fixture_dir() / "oracles" / "metrics.json"));
  c.expect(instances.size() == 200, "expected 200 oracle instances");
  auto near = [&](double got, double want, const std::string& what) {
    c.expect(std::abs(got - want) <= kMetricTol, what + ": " + fmt(got) + " vs " + fmt(want));
  };
  for (std::size_t n = 0; n < instances.size(); ++n) {
    const auto& in = instances[n];
    const auto tag = "instance " + std::to_string(n);
    std::vector<evalkit::Judgments> q;
    for (const auto& l : in["queries"]) q.push_back(l.get<std::vector<bool>>());
    near(evalkit::precision_at_k(q), in["precision_at_k"].get<double>(), tag + " precision@k");
    near(evalkit::map_at_k(q), in["map_at_k"].get<double>(), tag + " MAP@k");
    for (std::size_t i = 0; i < q.size(); ++i) {
      near(evalkit::average_precision(q[i]), in["average_precision"][i].get<double>(), tag + " AP");
    }
    const auto scores = in["scores"].get<std::vector<double>>();
    const auto labels = in["labels"].get<std::vector<bool>>();
    const double a = evalkit::auroc(scores, labels);
    near(a, in["auroc"].get<double>(), tag + " AUROC");
    near(evalkit::auprc(scores, labels), in["auprc"].get<double>(), tag + " AUPRC");
    // Strictly increasing transforms preserve every pairwise order.
    std::vector<double> t1(scores.size()), t2(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      t1[i] = 2.0 * scores[i] + 5.0;
      t2[i] = std::exp(scores[i]);
    }
    c.expect(evalkit::auroc(t1, labels) == a && evalkit::auroc(t2, labels) == a, tag + " AUROC not invariant");
  }
}

// Exact search.

std::vector<index::Hit> brute_force(const std::vector<index::IndexedItem>& items, const std::vector<float>& q,
                                    std::size_t k) {
  std::vector<index::Hit> all;
  for (const auto& it : items) all.push_back({it.item_id, embedding::cosine(q, it.vector)});
  std::sort(all.begin(), all.end(), [](const index::Hit& a, const index::Hit& b) {
    return a.score != b.score ? a.score > b.score : a.item_id < b.item_id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

void exact_search(Check& c) {
  constexpr std::size_t kItems = 1000;
  constexpr std::size_t kDim = 256;
  Rng rng(20240101);
  std::vector<index::IndexedItem> items;
  for (std::size_t i = 0; i < kItems; ++i) {
    index::IndexedItem it{"p" + std::to_string(i), index::Side::kPatient, random_unit(rng, kDim), {}};
    it.meta.anchor_date = Date::from_ymd(2020, 1, 1);
    it.meta.split = Split::kTest;
    items.push_back(std::move(it));
  }
  // Planted exact duplicates exercise the id tie rule.
  for (std::size_t i = 0; i < 50; ++i) items[kItems - 1 - i].vector = items[i].vector;
  const auto idx = index::VectorIndex::build(kDim, items);

  std::vector<std::vector<float>> queries;
  for (std::size_t q = 0; q < 40; ++q) queries.push_back(random_unit(rng, kDim));
  for (std::size_t q = 0; q < 10; ++q) queries.push_back(items[q].vector);

  const std::vector<std::size_t> ks = {1, 10, 20};
  std::vector<std::vector<index::Hit>> serial;
  for (const auto& q : queries) {
    for (auto k : ks) {
      auto got = idx.top_k(q, index::Side::kPatient, k);
      c.expect(got == brute_force(items, q, k), "top_k differs from brute force at k=" + std::to_string(k));
      serial.push_back(std::move(got));
    }
  }
  // 8-way concurrent replay of the same query stream.
  constexpr std::size_t kThreads = 8;
  std::vector<std::vector<std::vector<index::Hit>>> replay(kThreads);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      for (const auto& q : queries) {
        for (auto k : ks) replay[t].push_back(idx.top_k(q, index::Side::kPatient, k));
      }
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& r : replay) c.expect(r == serial, "concurrent replay differs from serial run");
}

// Desk fixture cascade.

struct Desk {
  Desk() {
    corpus = std::make_shared<Corpus>(testing::desk_corpus());
    embedder = std::make_shared<embedding::MockEmbedder>(256);
    auto idx = std::make_shared<index::VectorIndex>(cascade::build_corpus_index(*corpus, *embedder));
    matcher = std::make_unique<cascade::Matcher>(idx, corpus, embedder);
  }
  std::shared_ptr<Corpus> corpus;
  std::shared_ptr<embedding::MockEmbedder> embedder;
  std::unique_ptr<cascade::Matcher> matcher;
};

std::size_t survivors(const std::vector<cascade::MatchCandidate>& cs) {
  return static_cast<std::size_t>(std::count_if(cs.begin(), cs.end(), [](const auto& m) { return m.passed; }));
}

void cascade_properties(Check& c) {
  const Desk desk;
  const auto& m = *desk.matcher;
  const auto& corpus = *desk.corpus;
  c.expect(corpus.summaries.size() == 50 && corpus.spaces.size() == 40, "fixture is not 50 patients / 40 spaces");

  cascade::LexicalChecker lexical;
  const std::vector<double> thresholds = {0.0, 0.1, 0.25, 0.5, 0.75, 1.0};
  for (const auto& s : corpus.summaries) {
    cascade::MatchOptions o;
    o.k = 20;
    const auto plain = m.match_patient(s, o);
    o.checker = &lexical;
    std::size_t previous = plain.size();
    for (double t : thresholds) {
      o.threshold = t;
      const auto checked = m.match_patient(s, o);
      c.expect(checked.size() == plain.size(), "checker changed the candidate list length");
      bool same = checked.size() == plain.size();
      for (std::size_t i = 0; same && i < checked.size(); ++i) {
        same = checked[i].item_ref == plain[i].item_ref && checked[i].cosine == plain[i].cosine;
      }
      c.expect(same, "checker reordered or altered retrieval results");
      const auto n = survivors(checked);
      c.expect(n <= previous, "raising the threshold admitted more candidates");
      previous = n;
    }
  }

  std::map<std::string, const PatientSummary*> by_ref;
  for (const auto& s : corpus.summaries) by_ref[s.ref().key()] = &s;
  cascade::OracleChecker oracle;
  for (const auto& [key, label] : evalkit::gold_labels(corpus.labels)) {
    oracle.set_label(by_ref.at(key.first)->text, m.space(key.second)->raw_text, label);
  }
  for (auto p : {evalkit::Protocol::kPatientCentricK10, evalkit::Protocol::kTrialCentricK20}) {
    evalkit::ProtocolConfig cfg;
    cfg.protocol = p;
    cfg.checker = &oracle;
    const auto reports = evalkit::run_protocol(*desk.matcher, cfg);
    const auto& checked = reports.second;
    c.expect(checked.precision_at_k && *checked.precision_at_k == 1.0,
             std::string(evalkit::to_string(p)) + ": oracle-checked precision is not exactly 1.0");
    c.expect(checked.mean_results <= reports.first.mean_results, "checker increased results returned");
  }
}

// Temporal filter.

void temporal_filter(Check& c) {
  Rng rng(77);
  const Date base = Date::from_ymd(2015, 1, 1);
  auto random_date = [&] { return base.plus_days(static_cast<std::int64_t>(rng.uniform_index(3650))); };

  constexpr std::size_t kSpaces = 200;
  std::vector<index::IndexedItem> items;
  for (std::size_t i = 0; i < kSpaces; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "NCT%08zu#1", i);
    index::IndexedItem it{id, index::Side::kSpace, random_unit(rng, 8), {}};
    it.meta.nct_id = std::string(id, 11);
    it.meta.open_date = random_date();
    if (rng.uniform_index(3) != 0) it.meta.close_date = it.meta.open_date->plus_days(rng.uniform_index(1500));
    items.push_back(std::move(it));
  }
  const auto idx = index::VectorIndex::build(8, items);
  const auto query = random_unit(rng, 8);

  std::size_t violations = 0;
  std::size_t omissions = 0;
  for (std::size_t t = 0; t < kTemporalTrials; ++t) {
    // Window containment against direct comparison.
    const Date open = random_date();
    const std::optional<Date> close =
        rng.uniform_index(4) == 0 ? std::nullopt : std::optional(open.plus_days(rng.uniform_index(800)));
    const Date d = random_date();
    const bool want = open.days() <= d.days() && (!close || d.days() <= close->days());
    if (index::window_contains({open, close}, d) != want) ++violations;

    // Index results under an as-of filter.
    index::QueryFilter f;
    f.temporal_as_of = d;
    std::set<std::string> eligible;
    for (const auto& it : items) {
      if (it.meta.open_date->days() <= d.days() && (!it.meta.close_date || d.days() <= it.meta.close_date->days())) {
        eligible.insert(it.item_id);
      }
    }
    std::set<std::string> got;
    for (const auto& h : idx.top_k(query, index::Side::kSpace, kSpaces, f)) {
      if (!eligible.count(h.item_id)) ++violations;
      got.insert(h.item_id);
    }
    if (got.size() != eligible.size()) ++omissions;
  }
  c.expect(violations == 0, std::to_string(violations) + " candidates violate interval containment");
  c.expect(omissions == 0, std::to_string(omissions) + " queries dropped an eligible space");
}

// End-to-end.

std::string run(std::vector<std::string> args, int& code) {
  args.insert(args.begin(), "trialmatch");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  code = service::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return out.str();
}

void end_to_end(Check& c) {
  const auto corpus = (testing::fixture_dir() / "desk").string();
  for (const std::string format : {"table", "jsonl"}) {
    const auto golden = read_file(testing::fixture_dir() / "golden" / ("eval." + format));
    for (int pass = 0; pass < 2; ++pass) {
      int code = 0;
      const auto out = run({"--mock-providers", "eval", "--corpus", corpus, "--format", format}, code);
      c.expect(code == 0, "eval exited with " + std::to_string(code));
      c.expect(out == golden, "eval --format " + format + " differs from the golden report");
    }
    if (format == "table") {
      c.expect(golden.find("Median results returned per query (N)") != std::string::npos,
               "table lacks the median results row");
      c.expect(golden.find("Mean results returned per query (N)") != std::string::npos,
               "table lacks the mean results row");
    }
  }
}

// Parsers and prompts.

void parser_fixtures(Check& c) {
  const auto spaces = json::parse(read_file(testing::fixture_dir() / "parsers" / "space_lists.json"));
  c.expect(spaces.size() >= 10, "fewer than 10 space-list fixtures");
  const std::map<std::string, std::optional<std::string> TrialSpace::*> fields = {
      {"cancer_type_allowed", &TrialSpace::cancer_type_allowed},
      {"histology_allowed", &TrialSpace::histology_allowed},
      {"cancer_burden_allowed", &TrialSpace::cancer_burden_allowed},
      {"prior_treatment_required", &TrialSpace::prior_treatment_required},
      {"prior_treatment_excluded", &TrialSpace::prior_treatment_excluded},
      {"biomarkers_required", &TrialSpace::biomarkers_required},
      {"biomarkers_excluded", &TrialSpace::biomarkers_excluded},
  };
  for (const auto& f : spaces) {
    const auto name = f["name"].get<std::string>();
    const auto got = llm::parse_space_list(f["response"].get<std::string>(), f["nct_id"].get<std::string>());
    bool ok = got.size() == f["expected"].size();
    for (std::size_t i = 0; ok && i < got.size(); ++i) {
      const auto& want = f["expected"][i];
      ok = got[i].ordinal == static_cast<int>(i + 1);
      if (want.contains("raw_text")) ok = ok && got[i].raw_text == want["raw_text"].get<std::string>();
      for (const auto& [field, member] : fields) {
        const auto expected = want.contains(field) ? std::optional(want[field].get<std::string>()) : std::nullopt;
        ok = ok && got[i].*member == expected;
      }
    }
    c.expect(ok, "space-list fixture " + name);
  }

  const auto decisions = json::parse(read_file(testing::fixture_dir() / "parsers" / "decisions.json"));
  c.expect(decisions.size() >= 8, "fewer than 8 decision fixtures");
  for (const auto& f : decisions) {
    const auto got = llm::parse_decision(f["response"].get<std::string>());
    const auto want = f["expected"].is_null() ? std::nullopt : std::optional(f["expected"].get<bool>());
    c.expect(got == want, "decision fixture " + f["name"].get<std::string>());
  }

  for (auto o : llm::organ_vocabulary()) {
    const std::string name(llm::to_string(o));
    c.expect(llm::parse_organ(name) == o && llm::parse_organ(" \"" + name + "\"\n") == o, "organ " + name);
  }
  for (const std::string miss : {"lung", "Lung cancer", "Colon"}) {
    c.expect(!llm::parse_organ(miss).has_value(), "organ miss accepted: " + miss);
  }

  std::ifstream sums(testing::prompt_dir() / "SHA256SUMS");
  c.expect(static_cast<bool>(sums), "SHA256SUMS missing");
  std::set<std::string> listed;
  std::string line;
  while (std::getline(sums, line)) {
    if (line.size() < 67) continue;
    const auto file = line.substr(66);
    const auto stem = file.substr(0, file.size() - 4);
    listed.insert(stem);
    c.expect(sha256_hex(llm::prompt_resource(stem)) == line.substr(0, 64), "prompt checksum " + stem);
  }
  std::set<std::string> embedded;
  for (auto n : llm::prompt_resource_names()) embedded.insert(std::string(n));
  c.expect(listed == embedded, "embedded prompt set differs from SHA256SUMS");
}

// Splits and leakage.

void splits_and_leakage(Check& c) {
  std::map<Split, int> counts;
  for (int i = 0; i < 10000; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "patient_%05d", i);
    const Split s = assign_split(id);
    ++counts[s];
    c.expect(assign_split(std::string(id)) == s, std::string("split not stable for ") + id);
  }
  const std::map<Split, double> target = {{Split::kTrain, 80.0}, {Split::kValidation, 10.0}, {Split::kTest, 10.0}};
  for (const auto& [split, pct] : target) {
    const double got = counts[split] / 100.0;
    c.expect(std::abs(got - pct) <= kSplitTolPoints,
             std::string(to_string(split)) + " share " + fmt(got) + " outside tolerance");
  }

  // The same patient lands in the same split in every derived dataset.
  const auto& corpus = testing::desk_corpus();
  llm::MockChatProvider mock;
  const auto stage1 = trainprep::build_stage1_pairs(corpus, mock, 1, 5);
  c.expect(!stage1.pairs.empty(), "stage 1 produced no pairs");
  for (const auto& p : stage1.pairs) {
    c.expect(assign_split(p.summary_ref.patient_id) == Split::kTrain, "stage 1 pair outside train");
  }
  embedding::MockEmbedder small(8);
  const auto idx = cascade::build_corpus_index(corpus, small);
  for (const auto& s : corpus.summaries) {
    const auto item = idx.get(index::Side::kPatient, s.ref().key());
    c.expect(item && item->meta.split == assign_split(s.patient_id), "index split differs for " + s.patient_id);
  }
  c.expect(trainprep::scan_leakage(std::span<const trainprep::EmbedPairExample>(stage1.pairs)).empty(),
           "leakage scan flagged clean stage 1 pairs");

  // Injected violation.
  auto leaky = stage1.pairs;
  std::string test_id;
  for (int i = 0; test_id.empty(); ++i) {
    const auto id = "patient_" + std::to_string(i);
    if (assign_split(id) == Split::kTest) test_id = id;
  }
  leaky.back().summary_ref.patient_id = test_id;
  const auto flagged = trainprep::scan_leakage(std::span<const trainprep::EmbedPairExample>(leaky));
  c.expect(flagged == std::vector<std::string>{test_id}, "leakage scan missed the injected test patient");
  bool threw = false;
  try {
    trainprep::assert_no_leakage(std::span<const trainprep::EmbedPairExample>(leaky));
  } catch (const LeakageError&) {
    threw = true;
  }
  c.expect(threw, "assert_no_leakage accepted an injected violation");
}

// MMD and outlier filtering.

std::vector<evalkit::Point> gaussian(Rng& rng, std::size_t n, std::size_t dim, double shift) {
  std::vector<evalkit::Point> out(n, evalkit::Point(dim));
  for (auto& p : out) {
    for (auto& x : p) x = rng.normal();
    p[0] += shift;
  }
  return out;
}

void mmd(Check& c) {
  Rng rng(8);
  const auto x = gaussian(rng, 200, 8, 0.0);
  const auto same = evalkit::mmd_test(x, x, 200, 1);
  c.expect(same.mmd < kMmdIdenticalMax, "identical samples give MMD " + fmt(same.mmd));

  const auto y = gaussian(rng, 200, 8, 3.0);
  const auto apart = evalkit::mmd_test(x, y, kMmdPermutations, 20241022);
  c.expect(apart.p_value < kMmdAlpha, "separated samples give p " + fmt(apart.p_value));
  const auto again = evalkit::mmd_test(x, y, kMmdPermutations, 20241022);
  c.expect(again.p_value == apart.p_value && again.mmd == apart.mmd, "seeded MMD test not reproducible");

  // Two tight 3x3 grids plus one planted outlier in the first group.
  std::vector<std::array<double, 2>> pts;
  std::vector<std::string> groups;
  for (int g = 0; g < 2; ++g) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        pts.push_back({g * 10.0 + i * 0.1, j * 0.1});
        groups.push_back(g == 0 ? "a" : "b");
      }
    }
  }
  pts.push_back({4.0, 4.0});
  groups.push_back("a");
  std::vector<std::size_t> want(18);
  for (std::size_t i = 0; i < want.size(); ++i) want[i] = i;
  c.expect(evalkit::knn_outlier_filter(pts, groups, 5, 2.0) == want, "kNN filter did not drop exactly the outlier");
  pts.pop_back();
  groups.pop_back();
  c.expect(evalkit::knn_outlier_filter(pts, groups, 5, 2.0).size() == 18, "kNN filter dropped a tight cluster point");
}

// Cohesion.

std::string summary_cancer_type(const std::string& text) {
  const std::string prefix = "Cancer type/primary site: ";
  auto line = text.substr(0, text.find('\n'));
  if (line.rfind(prefix, 0) != 0) return {};
  line = line.substr(prefix.size());
  return line.substr(0, line.find(" ("));
}

void cohesion(Check& c) {
  const auto& corpus = testing::desk_corpus();
  embedding::MockEmbedder embedder(256);
  std::vector<std::string> texts;
  std::vector<std::string> labels;
  for (const auto& s : corpus.summaries) {
    texts.push_back(s.text);
    labels.push_back(summary_cancer_type(s.text));
  }
  for (const auto& s : corpus.spaces) {
    texts.push_back(s.raw_text);
    labels.push_back(s.cancer_type_allowed.value_or(""));
  }
  c.expect(std::none_of(labels.begin(), labels.end(), [](const auto& l) { return l.empty(); }), "unlabelled item");
  std::vector<std::vector<float>> vectors;
  for (auto& v : embedding::embed(texts, embedder)) vectors.push_back(std::move(v.values));
  const auto r = evalkit::cosine_cohesion(vectors, labels);
  std::cout << "  cohesion within " << r.within << " between " << r.between << "\n";
  c.expect(r.within > r.between, "within-group cosine does not exceed between-group cosine");
}

int run_all() {
  const std::vector<Criterion> criteria = {
      {"metric oracles (P@k, AP/MAP, AUROC, AUPRC; AUROC invariance)", kMetricBudget, metric_oracles},
      {"exact search (1000 x 256, k in {1,10,20}, 8-thread replay)", kSearchBudget, exact_search},
      {"cascade properties and oracle-checker precision 1.0", kCascadeBudget, cascade_properties},
      {"temporal filter over 10000 randomized trials", 0.0, temporal_filter},
      {"end-to-end golden eval report", kEndToEndBudget, end_to_end},
      {"parser fixtures and prompt checksums", 0.0, parser_fixtures},
      {"split proportions, consistency and leakage", 0.0, splits_and_leakage},
      {"MMD two-sample test and kNN outlier filter", kMmdBudget, mmd},
      {"embedding cohesion within > between", 0.0, cohesion},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.budget_seconds > 0 && secs > cr.budget_seconds) {
      check.failures.push_back("runtime " + fmt(secs) + " s exceeds " + fmt(cr.budget_seconds) + " s");
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.2f s", secs);
    std::cout << (check.failures.empty() ? "[PASS] " : "[FAIL] ") << cr.name << " (" << timing << ")\n";
    for (const auto& f : check.failures) std::cout << "  " << f << "\n";
    failed += !check.failures.empty();
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace trialmatch

int main() { return trialmatch::run_all(); }
