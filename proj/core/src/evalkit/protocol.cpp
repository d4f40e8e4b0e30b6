#include "trialmatch/evalkit/protocol.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "trialmatch/common/error.h"
#include "trialmatch/datamodel/split.h"

namespace trialmatch::evalkit {

namespace {

std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v, int places, const char* missing) {
  return v ? fixed(*v, places) : std::string(missing);
}

// Shortest form of a count statistic: "8", "7.5", "13.25".
std::string count_number(double v) {
  auto s = fixed(v, 2);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

EvalReport score_variant(Protocol protocol, Variant variant, std::size_t k, const std::vector<Judgments>& lists,
                         const std::vector<std::string>& missing) {
  EvalReport r;
  r.protocol = protocol;
  r.variant = variant;
  r.k = k;
  r.n_queries = lists.size();
  r.n_empty_queries = count_empty(lists);
  r.missing_gold = missing;
  if (r.n_empty_queries < lists.size()) {
    r.precision_at_k = precision_at_k(lists);
    r.map_at_k = map_at_k(lists);
  }
  if (!lists.empty()) {
    std::vector<std::size_t> counts;
    for (const auto& l : lists) counts.push_back(l.size());
    const auto stats = cascade::result_count_stats(counts);
    r.median_results = stats.median;
    r.mean_results = stats.mean;
  }
  return r;
}

}  // namespace

std::string_view to_string(Protocol p) {
  return p == Protocol::kPatientCentricK10 ? "patient_centric_k10" : "trial_centric_k20";
}

std::string_view to_string(Variant v) {
  return v == Variant::kRetrievalOnly ? "retrieval_only" : "retrieval_plus_checker";
}

Protocol parse_protocol(std::string_view s) {
  if (s == "patient_centric_k10" || s == "patient_centric") return Protocol::kPatientCentricK10;
  if (s == "trial_centric_k20" || s == "trial_centric") return Protocol::kTrialCentricK20;
  throw InvalidArgument("unknown protocol: " + std::string(s));
}

std::map<std::pair<std::string, std::string>, bool> gold_labels(const std::vector<PairLabel>& labels) {
  std::map<std::pair<std::string, std::string>, std::pair<LabelProvenance, bool>> best;
  for (const auto& l : labels) {
    const auto key = std::make_pair(l.summary_ref.key(), l.space_id);
    auto it = best.find(key);
    if (it == best.end() || l.provenance >= it->second.first) best[key] = {l.provenance, l.label};
  }
  std::map<std::pair<std::string, std::string>, bool> out;
  for (const auto& [key, v] : best) out[key] = v.second;
  return out;
}

std::pair<EvalReport, EvalReport> run_protocol(const cascade::Matcher& matcher, const ProtocolConfig& config) {
  const bool patient_centric = config.protocol == Protocol::kPatientCentricK10;
  const std::size_t k = config.k.value_or(patient_centric ? 10 : 20);
  const auto gold = gold_labels(matcher.corpus().labels);

  cascade::MatchOptions options;
  options.k = k;
  options.checker = config.checker;
  options.threshold = config.threshold;
  options.temporal = config.temporal;

  std::vector<Judgments> raw_lists, checked_lists;
  std::vector<double> probs;
  std::vector<bool> prob_labels;
  std::vector<std::string> missing;

  auto consume = [&](const std::string& query_id, const std::vector<cascade::MatchCandidate>& cands,
                     bool patient_query) {
    Judgments raw, checked;
    for (const auto& c : cands) {
      const auto key = patient_query ? std::make_pair(c.query_ref, c.item_ref) : std::make_pair(c.item_ref, c.query_ref);
      auto it = gold.find(key);
      if (it == gold.end()) {
        missing.push_back(query_id);
        return;
      }
      raw.push_back(it->second);
      if (c.passed) checked.push_back(it->second);
    }
    for (const auto& c : cands) {
      if (!c.checker_prob) continue;
      probs.push_back(*c.checker_prob);
      const auto key = patient_query ? std::make_pair(c.query_ref, c.item_ref) : std::make_pair(c.item_ref, c.query_ref);
      prob_labels.push_back(gold.at(key));
    }
    raw_lists.push_back(std::move(raw));
    checked_lists.push_back(std::move(checked));
  };

  if (patient_centric) {
    const auto splits = config.query_splits.value_or(std::set<Split>{Split::kTest});
    std::vector<const PatientSummary*> queries;
    for (const auto& s : matcher.corpus().summaries) {
      if (splits.count(assign_split(s.patient_id))) queries.push_back(&s);
    }
    std::sort(queries.begin(), queries.end(),
              [](const auto* a, const auto* b) { return a->ref().key() < b->ref().key(); });
    for (const auto* s : queries) consume(s->ref().key(), matcher.match_patient(*s, options), true);
  } else {
    if (config.candidate_splits) options.filter.split_in = config.candidate_splits;
    std::vector<const TrialSpace*> queries;
    for (const auto& s : matcher.corpus().spaces) queries.push_back(&s);
    std::sort(queries.begin(), queries.end(), [](const auto* a, const auto* b) { return a->space_id < b->space_id; });
    for (const auto* s : queries) consume(s->space_id, matcher.match_space(*s, options), false);
  }

  auto retrieval = score_variant(config.protocol, Variant::kRetrievalOnly, k, raw_lists, missing);
  auto checked = score_variant(config.protocol, Variant::kRetrievalPlusChecker, k, checked_lists, missing);
  if (!probs.empty()) {
    const bool both = std::count(prob_labels.begin(), prob_labels.end(), true) > 0 &&
                      std::count(prob_labels.begin(), prob_labels.end(), false) > 0;
    if (both) {
      checked.checker_auroc = auroc(probs, prob_labels);
      checked.checker_auprc = auprc(probs, prob_labels);
    }
    checked.calibration = calibration_curve(probs, prob_labels);
  }
  return {std::move(retrieval), std::move(checked)};
}

std::string render_jsonl(const std::pair<EvalReport, EvalReport>& reports) {
  std::string out;
  for (const auto* r : {&reports.first, &reports.second}) {
    out += "{\"protocol\":\"" + std::string(to_string(r->protocol)) + "\",\"variant\":\"" +
           std::string(to_string(r->variant)) + "\",\"k\":" + std::to_string(r->k) +
           ",\"precision_at_k\":" + opt_fixed(r->precision_at_k, 6, "null") +
           ",\"map_at_k\":" + opt_fixed(r->map_at_k, 6, "null") + ",\"median_results\":" + fixed(r->median_results, 6) +
           ",\"mean_results\":" + fixed(r->mean_results, 6) + ",\"n_queries\":" + std::to_string(r->n_queries) +
           ",\"n_empty_queries\":" + std::to_string(r->n_empty_queries) +
           ",\"n_missing_gold\":" + std::to_string(r->missing_gold.size()) +
           ",\"checker_auroc\":" + opt_fixed(r->checker_auroc, 6, "null") +
           ",\"checker_auprc\":" + opt_fixed(r->checker_auprc, 6, "null") + ",\"calibration\":[";
    for (std::size_t i = 0; i < r->calibration.size(); ++i) {
      const auto& b = r->calibration[i];
      out += std::string(i ? "," : "") + "[" + fixed(b.bin_mid, 6) + "," + fixed(b.mean_score, 6) + "," +
             fixed(b.frac_positive, 6) + "," + std::to_string(b.count) + "]";
    }
    out += "]}\n";
  }
  return out;
}

std::string render_table(const std::pair<EvalReport, EvalReport>& reports) {
  const auto& a = reports.first;
  const auto& b = reports.second;
  const bool patient = a.protocol == Protocol::kPatientCentricK10;
  const std::string k = std::to_string(a.k);
  std::string out;
  out += patient ? "Patient-centric use case (up to " + k + " trial spaces per patient summary query)\n"
                 : "Trial-centric use case (up to " + k + " patient summaries per trial space query)\n";
  out += "Queries evaluated: " + std::to_string(a.n_queries) +
         "; excluded for missing gold labels: " + std::to_string(a.missing_gold.size()) + "\n";
  out += "Metric\tRetrieval only\tRetrieval + checker\n";
  out += "Precision @ " + k + "\t" + opt_fixed(a.precision_at_k, 2, "n/a") + "\t" +
         opt_fixed(b.precision_at_k, 2, "n/a") + "\n";
  out += "MAP @ " + k + "\t" + opt_fixed(a.map_at_k, 2, "n/a") + "\t" + opt_fixed(b.map_at_k, 2, "n/a") + "\n";
  const std::string per_query = patient ? " per query" : "";
  out += "Median results returned" + per_query + " (N)\t" + count_number(a.median_results) + "\t" +
         count_number(b.median_results) + "\n";
  out += "Mean results returned" + per_query + " (N)\t" + count_number(a.mean_results) + "\t" +
         count_number(b.mean_results) + "\n";
  return out;
}

}  // namespace trialmatch::evalkit
