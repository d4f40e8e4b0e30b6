#include "trialmatch/synthgen/synthgen.h"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <regex>
#include <set>

#include "trialmatch/common/error.h"
#include "trialmatch/common/hash.h"
#include "trialmatch/common/log.h"
#include "trialmatch/common/oncology_lexicon.h"
#include "trialmatch/common/rng.h"
#include "trialmatch/common/text.h"

namespace trialmatch::synthgen {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t state = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
  return splitmix64(state);
}

std::string generate_with_retry(llm::TemplateId id, const llm::Bindings& b, llm::ChatProvider& provider,
                                std::uint64_t seed, const llm::GatewayOptions& options) {
  try {
    return llm::generate_synthetic(id, b, provider, seed, options);
  } catch (const Error& e) {
    log().info("synthgen: {} failed once ({}); retrying", llm::to_string(id), e.what());
  }
  return llm::generate_synthetic(id, b, provider, seed, options);
}

std::string padded_id(const std::string& prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return prefix + buf;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.id_prefix.empty()) throw InvalidArgument("synth spec: empty id_prefix");
  if (spec.n_patients > 0 && spec.cancer_type_distribution.empty()) {
    throw InvalidArgument("synth spec: cancer_type_distribution is empty");
  }
  for (const auto& [type, w] : spec.cancer_type_distribution) {
    if (text::trim(type).empty()) throw InvalidArgument("synth spec: empty cancer type");
    if (!(w > 0.0)) throw InvalidArgument("synth spec: weight for " + type + " must be positive");
  }
  for (const auto& s : spec.scan_type_pool) {
    if (text::trim(s).empty()) throw InvalidArgument("synth spec: empty scan type");
  }
}

SynthSpec parse_synth_spec(const std::string& json_text) {
  const auto j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("synth spec is not a JSON object");
  SynthSpec spec;
  try {
    spec.n_patients = j.value("n_patients", std::size_t{0});
    if (j.contains("cancer_types")) {
      for (const auto& e : j.at("cancer_types")) {
        spec.cancer_type_distribution.emplace_back(e.at("type").get<std::string>(), e.value("weight", 1.0));
      }
    }
    if (j.contains("scan_types")) spec.scan_type_pool = j.at("scan_types").get<std::vector<std::string>>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.id_prefix = j.value("id_prefix", std::string("synth_"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("synth spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& file) { return parse_synth_spec(read_file(file)); }

SyntheticPatient generate_patient(const std::string& patient_id, const std::string& cancer_type,
                                  const std::string& scan_type, llm::ChatProvider& provider, std::uint64_t seed,
                                  const llm::GatewayOptions& options) {
  using llm::TemplateId;
  SyntheticPatient p;
  p.patient_id = patient_id;
  p.cancer_type = cancer_type;
  p.scan_type = scan_type;
  const llm::Bindings base = {{"cancer_type", cancer_type}};
  auto imaging_bindings = base;
  imaging_bindings["scan_type"] = scan_type;

  p.history = generate_with_retry(TemplateId::kSynthHistory, base, provider, seed, options);
  const auto note = generate_with_retry(TemplateId::kSynthNote, base, provider, seed, options);
  const auto imaging = generate_with_retry(TemplateId::kSynthImaging, imaging_bindings, provider, seed, options);
  const auto pathology = generate_with_retry(TemplateId::kSynthPathology, base, provider, seed, options);

  static const std::regex kUsDate(R"(\b\d{1,2}/\d{1,2}/\d{4}\b)");
  for (auto it = std::sregex_iterator(p.history.begin(), p.history.end(), kUsDate); it != std::sregex_iterator();
       ++it) {
    if (auto d = Date::try_parse_us(it->str())) p.history_dates.push_back(*d);
  }
  Date first, last;
  if (p.history_dates.empty()) {
    Rng rng(seed);
    first = last = Date::from_ymd(2018, 1, 1).plus_days(static_cast<std::int64_t>(rng.uniform_index(1800)));
  } else {
    first = *std::min_element(p.history_dates.begin(), p.history_dates.end());
    last = *std::max_element(p.history_dates.begin(), p.history_dates.end());
  }
  p.documents.push_back({patient_id, DocType::kOncologistNote, last.plus_days(14), text::canonicalize_newlines(note), {}});
  p.documents.push_back({patient_id, DocType::kImagingReport, last.plus_days(7), text::canonicalize_newlines(imaging), {}});
  p.documents.push_back(
      {patient_id, DocType::kPathologyReport, first.plus_days(7), text::canonicalize_newlines(pathology), {}});
  return p;
}

std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t n) {
  std::vector<std::size_t> counts(weights.size(), 0);
  if (weights.empty()) return counts;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> remainder(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(n) * weights[i] / total;
    counts[i] = static_cast<std::size_t>(quota);
    remainder[i] = quota - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % order.size()]];
  return counts;
}

AssembleResult assemble_corpus(const SynthSpec& spec, llm::ChatProvider& provider,
                               const llm::GatewayOptions& options) {
  validate(spec);
  AssembleResult out;
  std::vector<double> weights;
  for (const auto& [type, w] : spec.cancer_type_distribution) weights.push_back(w);
  const auto counts = apportion(weights, spec.n_patients);
  std::vector<std::string> types;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    types.insert(types.end(), counts[i], spec.cancer_type_distribution[i].first);
  }
  Rng rng(spec.seed);
  rng.shuffle(types);
  const auto& scans = spec.scan_type_pool.empty() ? lexicon::scan_types() : spec.scan_type_pool;

  condenser::LexiconTagger tagger;
  for (std::size_t i = 0; i < types.size(); ++i) {
    const auto id = padded_id(spec.id_prefix, i + 1);
    const auto& scan = scans[rng.uniform_index(scans.size())];
    SyntheticPatient patient;
    try {
      patient = generate_patient(id, types[i], scan, provider, derive_seed(spec.seed, i + 1), options);
    } catch (const Error& e) {
      ++out.failed_patients;
      log().warn("synthgen: skipping {} ({}): {}", id, types[i], e.what());
      continue;
    }
    out.cancer_types.push_back(types[i]);
    out.histories.emplace_back(id, patient.history);
    Date anchor = patient.documents.front().date;
    for (const auto& d : patient.documents) anchor = std::max(anchor, d.date);
    out.corpus.documents.insert(out.corpus.documents.end(), patient.documents.begin(), patient.documents.end());
    try {
      auto condensed = condenser::condense(patient.documents, tagger, 0.5, anchor);
      auto summary = llm::summarize_patient(condensed, provider, SummarySource::kStandardOfCare, options);
      out.condensed.push_back(std::move(condensed));
      out.corpus.summaries.push_back(std::move(summary));
    } catch (const Error& e) {
      ++out.failed_summaries;
      log().warn("synthgen: no summary for {}: {}", id, e.what());
    }
  }
  if (out.failed_patients + out.failed_summaries > 0) {
    log().warn("synthgen: {} patients and {} summaries failed", out.failed_patients, out.failed_summaries);
  }
  canonicalize(out.corpus);
  return out;
}

void write_assembled(const AssembleResult& result, const std::filesystem::path& dir) {
  save_corpus(result.corpus, dir);
  condenser::write_condensed(result.condensed, dir / "condensed.jsonl");
  std::string histories;
  for (const auto& [id, h] : result.histories) {
    histories += ordered_json{{"v", 1}, {"patient_id", id}, {"text", h}}.dump() + "\n";
  }
  write_file_atomic(dir / "histories.jsonl", histories);
}

TrialRecord desk_trial(std::size_t index, std::uint64_t seed) {
  const auto& profiles = lexicon::cancer_profiles();
  const auto& p = profiles[index % profiles.size()];
  Rng rng(derive_seed(seed, 1000 + index));
  auto pick = [&](const std::vector<std::string>& v) -> const std::string& { return v[rng.uniform_index(v.size())]; };

  std::string a = "Cohort A: Patients with metastatic " + p.name + ".";
  if (rng.uniform01() < 0.5) a += " Tumors must harbor " + pick(p.biomarkers) + ".";
  if (rng.uniform01() < 0.3) a += " Patients must have progressed on prior " + p.therapies.front() + ".";
  std::string b = rng.uniform01() < 0.6 ? "Cohort B: Patients with locally advanced or metastatic " + p.name + "."
                                        : "Cohort B: Patients with localized " + p.name + ".";
  if (rng.uniform01() < 0.4) b += " Patients with " + pick(p.biomarkers) + " are not allowed.";
  if (rng.uniform01() < 0.4) b += " No prior " + pick(p.therapies) + " is allowed.";

  TrialRecord t;
  char nct[16];
  std::snprintf(nct, sizeof nct, "NCT9%07zu", index + 1);
  t.nct_id = nct;
  t.title = "Desk fixture study " + std::to_string(index + 1) + " in " + p.name;
  t.eligibility_text = "Inclusion Criteria:\n\n- Age 18 years or older.\n- ECOG performance status 0 or 1.\n\n" +
                       a + "\n\n" + b + "\n";
  if (index % 2 == 0) {
    t.open_date = Date::from_ymd(2015, 1, 1).plus_days(static_cast<std::int64_t>(rng.uniform_index(365)));
    if (index % 4 == 2) t.close_date = Date::from_ymd(2023, 6, 30);
  } else {
    t.open_date = Date::from_ymd(2018, 1, 1).plus_days(static_cast<std::int64_t>(rng.uniform_index(1500)));
    if (index % 4 == 3) t.close_date = t.open_date.plus_days(1000);
  }
  return t;
}

Corpus build_desk_fixture(const DeskFixtureConfig& config, llm::ChatProvider& provider,
                          const llm::GatewayOptions& options) {
  SynthSpec spec;
  spec.n_patients = config.n_patients;
  for (const auto& p : lexicon::cancer_profiles()) spec.cancer_type_distribution.emplace_back(p.name, 1.0);
  spec.seed = config.seed;
  auto assembled = assemble_corpus(spec, provider, options);
  if (assembled.failed_patients + assembled.failed_summaries > 0) {
    throw Error("desk fixture: synthetic generation failed for some patients");
  }
  Corpus corpus = std::move(assembled.corpus);

  for (std::size_t i = 0; i < config.n_trials; ++i) {
    auto trial = desk_trial(i, config.seed);
    auto spaces = llm::extract_trial_spaces(trial, provider, options);
    corpus.spaces.insert(corpus.spaces.end(), spaces.begin(), spaces.end());
    corpus.trials.push_back(std::move(trial));
  }

  Rng rng(derive_seed(config.seed, 7));
  for (auto& s : corpus.summaries) {
    const auto* profile = lexicon::find_profile(s.text);
    std::vector<const TrialRecord*> open;
    for (const auto& t : corpus.trials) {
      const bool in_window = t.open_date <= s.anchor_date && (!t.close_date || s.anchor_date <= *t.close_date);
      if (in_window && profile && lexicon::mentions(t.eligibility_text, profile->name)) open.push_back(&t);
    }
    if (open.empty()) continue;
    const auto* chosen = open[rng.uniform_index(open.size())];
    corpus.enrollments.push_back({s.patient_id, chosen->nct_id, s.anchor_date, {}});
    s.source = SummarySource::kTrialEnrollment;
  }

  std::set<std::pair<std::string, std::string>> enrolled;
  for (const auto& e : corpus.enrollments) enrolled.insert({e.patient_id, e.nct_id});
  for (const auto& s : corpus.summaries) {
    for (const auto& sp : corpus.spaces) {
      const auto d = llm::check_reasonable(s, sp, provider, options);
      corpus.labels.push_back({s.ref(), sp.space_id, d.value,
                               enrolled.count({s.patient_id, sp.nct_id}) ? LabelProvenance::kStage1Enrolled
                                                                         : LabelProvenance::kMinedRound1,
                               d.raw_text, {}});
    }
  }
  canonicalize(corpus);
  const auto problems = validate_corpus(corpus);
  if (!problems.empty()) throw ContractViolation("desk fixture is inconsistent: " + problems.front());
  return corpus;
}

}  // namespace trialmatch::synthgen
