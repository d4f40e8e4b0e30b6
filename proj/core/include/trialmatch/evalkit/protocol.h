#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trialmatch/cascade/matcher.h"
#include "trialmatch/evalkit/metrics.h"

namespace trialmatch::evalkit {

enum class Protocol { kPatientCentricK10, kTrialCentricK20 };
enum class Variant { kRetrievalOnly, kRetrievalPlusChecker };

std::string_view to_string(Protocol p);
std::string_view to_string(Variant v);
Protocol parse_protocol(std::string_view s);  // also accepts "patient_centric", "trial_centric"

struct EvalReport {
  Protocol protocol = Protocol::kPatientCentricK10;
  Variant variant = Variant::kRetrievalOnly;
  std::size_t k = 10;
  std::optional<double> precision_at_k;  // absent when every query came back empty
  std::optional<double> map_at_k;
  double median_results = 0.0;
  double mean_results = 0.0;
  std::size_t n_queries = 0;        // evaluated queries
  std::size_t n_empty_queries = 0;  // evaluated, but nothing survived
  std::vector<std::string> missing_gold;  // excluded queries
  // Checker discrimination over every retrieved candidate; checker variant only.
  std::optional<double> checker_auroc;
  std::optional<double> checker_auprc;
  std::vector<CalibrationBin> calibration;
};

struct ProtocolConfig {
  Protocol protocol = Protocol::kPatientCentricK10;
  std::optional<std::size_t> k;  // default 10 / 20 by protocol
  cascade::PairChecker* checker = nullptr;
  double threshold = 0.5;
  bool temporal = true;
  // Patient-centric queries come from these splits (default: test only);
  // trial-centric candidates from these (default: all).
  std::optional<std::set<Split>> query_splits;
  std::optional<std::set<Split>> candidate_splits;
};

// Gold label per (SummaryRef::key(), space_id). Where several provenances
// label one pair, the latest provenance wins.
std::map<std::pair<std::string, std::string>, bool> gold_labels(const std::vector<PairLabel>& labels);

// Runs every query of the protocol through `matcher` once and scores both
// variants against gold labels. Queries whose retrieved candidates lack a
// gold label are excluded from both variants and listed. Without a checker
// the checker variant equals retrieval only.
std::pair<EvalReport, EvalReport> run_protocol(const cascade::Matcher& matcher, const ProtocolConfig& config);

// One JSON object per line, fixed key order, 6 decimal places.
std::string render_jsonl(const std::pair<EvalReport, EvalReport>& reports);

// Tab-separated table: one block per protocol, one column per variant.
std::string render_table(const std::pair<EvalReport, EvalReport>& reports);

}  // namespace trialmatch::evalkit
