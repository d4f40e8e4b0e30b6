#include "trialmatch/service/cli.h"

#include <CLI11.hpp>
#include <cstdio>
#include <set>

#include "trialmatch/common/error.h"
#include "trialmatch/common/http.h"
#include "trialmatch/common/log.h"
#include "trialmatch/common/text.h"
#include "trialmatch/common/version.h"
#include "trialmatch/ctgov/registry.h"
#include "trialmatch/datamodel/split.h"
#include "trialmatch/evalkit/protocol.h"
#include "trialmatch/service/http_server.h"
#include "trialmatch/service/match_service.h"
#include "trialmatch/synthgen/synthgen.h"
#include "trialmatch/trainprep/trainprep.h"

namespace trialmatch::service {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  bool mock = false;
  std::string log_level;
};

ServiceConfig resolve_config(const Globals& g) {
  ServiceConfig c = g.config_file.empty() ? ServiceConfig{} : load_config(g.config_file);
  apply_environment(c);
  if (g.mock) c.mock_providers = true;
  if (g.seed) c.seed = *g.seed;
  validate(c);
  return c;
}

llm::GatewayOptions gateway_options(const ServiceConfig& c) {
  llm::GatewayOptions o;
  o.model = c.llm_model;
  return o;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> read_id_file(const fs::path& file) {
  std::vector<std::string> ids;
  for (const auto& line : text::split_lines(read_file(file))) {
    auto t = std::string(text::trim(line));
    if (!t.empty() && t[0] != '#') ids.push_back(std::move(t));
  }
  return ids;
}

std::optional<Date> opt_date(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return Date::parse_iso(s);
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> ncts;
  std::string nct_file, condition, as_of, status = "recruiting", out, base_url, cache_dir;
  int page_size = 100;
  std::size_t sample = 0;
  double rate_limit = -1.0;
};

void cmd_ingest(const IngestArgs& a, const ServiceConfig& c, std::ostream& out) {
  ctgov::ClientConfig cc;
  cc.base_url = a.base_url.empty() ? c.registry_base_url : a.base_url;
  if (!a.cache_dir.empty()) cc.cache_dir = fs::path(a.cache_dir);
  else cc.cache_dir = c.registry_cache_dir;
  cc.rate_limit = a.rate_limit >= 0.0 ? a.rate_limit : c.registry_rate_limit;
  ctgov::RegistryClient client(cc, http::make_transport());

  std::vector<std::string> ids = a.ncts;
  if (!a.nct_file.empty()) {
    auto more = read_id_file(a.nct_file);
    ids.insert(ids.end(), more.begin(), more.end());
  }
  const bool listed = !a.condition.empty();
  if (listed) {
    ctgov::RegistryQuery q;
    q.condition = a.condition;
    q.as_of = opt_date(a.as_of);
    q.page_size = a.page_size;
    if (a.status == "any") q.status_filter = ctgov::StatusFilter::kAny;
    else if (a.status != "recruiting") throw InvalidArgument("--status must be recruiting or any");
    auto found = client.list_open_trials(q);
    out << "listed " << found.size() << " trials for \"" << a.condition << "\"\n";
    ids.insert(ids.end(), found.begin(), found.end());
  }
  if (ids.empty()) throw InvalidArgument("ingest-trials: give --nct, --nct-file or --condition");
  if (a.sample > 0) ids = ctgov::sample_trials(ids, a.sample, c.seed);

  std::vector<TrialRecord> trials;
  std::size_t failed = 0;
  for (const auto& id : ids) {
    try {
      trials.push_back(client.fetch_trial(id));
    } catch (const Error& e) {
      if (!listed) throw;
      ++failed;
      log().warn("ingest-trials: skipping {}: {}", id, e.what());
    }
  }
  write_trials(trials, a.out);
  out << "wrote " << trials.size() << " trials to " << a.out;
  if (failed) out << " (" << failed << " failed)";
  out << "\n";
}

void cmd_extract(const std::string& in, const std::string& out_file, const ServiceConfig& c, const Providers& p,
                 std::ostream& out) {
  const auto trials = read_trials(in);
  std::vector<TrialSpace> spaces;
  std::size_t failed = 0;
  for (const auto& t : trials) {
    try {
      auto s = llm::extract_trial_spaces(t, *p.llm, gateway_options(c));
      spaces.insert(spaces.end(), s.begin(), s.end());
    } catch (const ExtractionError& e) {
      ++failed;
      log().warn("extract-spaces: no spaces for {}: {}", t.nct_id, e.what());
    }
  }
  write_spaces(spaces, out_file);
  out << "wrote " << spaces.size() << " spaces from " << trials.size() - failed << " trials to " << out_file;
  if (failed) out << " (" << failed << " trials failed)";
  out << "\n";
}

// Documents grouped per patient in file order.
std::map<std::string, std::vector<ClinicalDocument>> by_patient(const std::vector<ClinicalDocument>& docs) {
  std::map<std::string, std::vector<ClinicalDocument>> m;
  for (const auto& d : docs) m[d.patient_id].push_back(d);
  return m;
}

Date latest(const std::vector<ClinicalDocument>& docs) {
  Date d = docs.front().date;
  for (const auto& x : docs) d = std::max(d, x.date);
  return d;
}

void cmd_condense(const std::string& in, const std::string& as_of, double threshold, const std::string& out_file,
                  const Providers& p, std::ostream& out) {
  const auto groups = by_patient(read_documents(in));
  std::vector<condenser::CondensedRecord> records;
  std::size_t empty = 0;
  for (const auto& [pid, docs] : groups) {
    try {
      records.push_back(condenser::condense(docs, *p.tagger, threshold, opt_date(as_of).value_or(latest(docs))));
    } catch (const EmptyRecordError& e) {
      ++empty;
      log().warn("condense: {}: {}", pid, e.what());
    }
  }
  condenser::write_condensed(records, out_file);
  out << "wrote " << records.size() << " condensed records to " << out_file;
  if (empty) out << " (" << empty << " empty)";
  out << "\n";
}

struct SummarizeArgs {
  std::string condensed, documents, enrollments, source = "standard_of_care", out;
  double threshold = 0.5;
};

void cmd_summarize(const SummarizeArgs& a, const ServiceConfig& c, const Providers& p, std::ostream& out) {
  std::vector<std::pair<condenser::CondensedRecord, SummarySource>> work;
  std::size_t failed = 0;
  if (!a.condensed.empty()) {
    const auto source = parse_summary_source(a.source);
    for (auto& r : condenser::read_condensed(a.condensed)) work.emplace_back(std::move(r), source);
  } else if (!a.documents.empty()) {
    const auto groups = by_patient(read_documents(a.documents));
    auto add = [&](const std::vector<ClinicalDocument>& docs, Date as_of, SummarySource source) {
      try {
        work.emplace_back(condenser::condense(docs, *p.tagger, a.threshold, as_of), source);
      } catch (const EmptyRecordError& e) {
        ++failed;
        log().warn("summarize: {}: {}", docs.front().patient_id, e.what());
      }
    };
    if (!a.enrollments.empty()) {
      for (const auto& e : read_enrollments(a.enrollments)) {
        auto it = groups.find(e.patient_id);
        if (it == groups.end()) {
          ++failed;
          log().warn("summarize: no documents for enrolled patient {}", e.patient_id);
          continue;
        }
        add(it->second, e.enroll_date, SummarySource::kTrialEnrollment);
      }
    } else {
      for (const auto& [pid, docs] : groups) add(docs, latest(docs), parse_summary_source(a.source));
    }
  } else {
    throw InvalidArgument("summarize: give --condensed or --documents");
  }
  std::vector<PatientSummary> summaries;
  for (const auto& [record, source] : work) {
    try {
      summaries.push_back(llm::summarize_patient(record, *p.llm, source, gateway_options(c)));
    } catch (const Error& e) {
      ++failed;
      log().warn("summarize: {}: {}", record.patient_id, e.what());
    }
  }
  write_summaries(summaries, a.out);
  out << "wrote " << summaries.size() << " summaries to " << a.out;
  if (failed) out << " (" << failed << " failed)";
  out << "\n";
}

void cmd_embed_index(const std::string& corpus_dir, const std::string& out_file, const std::string& cache_file,
                     const Providers& p, std::ostream& out) {
  const auto corpus = load_corpus(corpus_dir);
  embedding::VectorCache cache(p.embedder->dimension(), p.embedder->id());
  if (!cache_file.empty() && fs::exists(cache_file)) cache.load(cache_file);
  const auto idx = cascade::build_corpus_index(corpus, *p.embedder, &cache);
  idx.save(out_file);
  if (!cache_file.empty()) cache.save(cache_file);
  out << "indexed " << idx.size(index::Side::kPatient) << " summaries and " << idx.size(index::Side::kSpace)
      << " spaces (dimension " << idx.dimension() << ") to " << out_file << "\n";
}

struct MatchArgs {
  std::string corpus, index, summary_file, patient_id, summary_ref, space_id, space_file, nct_id, as_of,
      format = "tsv";
  std::vector<std::string> splits;
  std::size_t k = 0;
  double threshold = -1.0;
  bool no_checker = false, no_temporal = false, passed_only = false;
};

std::unique_ptr<MatchService> open_service(ServiceConfig c, const std::string& corpus, const std::string& index) {
  if (!corpus.empty()) c.corpus_dir = fs::path(corpus);
  if (!index.empty()) c.index_path = fs::path(index);
  if (!c.corpus_dir) throw InvalidArgument("no corpus: give --corpus or corpus_dir in the config");
  auto service = std::make_unique<MatchService>(c, make_providers(c));
  service->reload();
  return service;
}

void cmd_match_patient(const MatchArgs& a, const ServiceConfig& c, std::ostream& out) {
  const auto owned_service = open_service(c, a.corpus, a.index);
  auto& service = *owned_service;
  PatientQuery q;
  if (!a.summary_file.empty()) q.summary_text = read_file(a.summary_file);
  if (!a.patient_id.empty()) q.patient_id = a.patient_id;
  if (!a.summary_ref.empty()) q.summary_ref = a.summary_ref;
  if (!!q.summary_text + !!q.patient_id + !!q.summary_ref != 1) {
    throw InvalidArgument("match patient: give exactly one of --summary-file, --patient-id, --summary-ref");
  }
  if (a.k) q.k = a.k;
  if (a.threshold >= 0.0) q.threshold = a.threshold;
  q.as_of = opt_date(a.as_of);
  q.temporal = !a.no_temporal;
  q.use_checker = !a.no_checker;
  q.show_filtered = !a.passed_only;
  if (a.format == "json") {
    out << service.patient_json(q) << "\n";
    return;
  }
  const auto r = service.run_patient(q);
  const auto m = service.matcher();
  for (const auto& cand : r.candidates) {
    if (a.passed_only && !cand.passed) continue;
    const auto* sp = m->space(cand.item_ref);
    out << cand.rank << '\t' << cand.item_ref << '\t' << (sp ? sp->nct_id : "") << '\t' << fixed6(cand.cosine) << '\t'
        << (cand.checker_prob ? fixed6(*cand.checker_prob) : "-") << '\t' << (cand.passed ? 1 : 0) << '\n';
  }
}

void cmd_match_space(const MatchArgs& a, const ServiceConfig& c, std::ostream& out) {
  const auto owned_service = open_service(c, a.corpus, a.index);
  auto& service = *owned_service;
  SpaceQuery q;
  if (!a.space_file.empty()) q.space_text = read_file(a.space_file);
  if (!a.space_id.empty()) q.space_id = a.space_id;
  if (!!q.space_text == !!q.space_id) throw InvalidArgument("match space: give exactly one of --space-id, --space-file");
  if (!a.nct_id.empty()) q.nct_id = a.nct_id;
  if (a.k) q.k = a.k;
  if (a.threshold >= 0.0) q.threshold = a.threshold;
  if (!a.splits.empty()) {
    std::set<Split> s;
    for (const auto& name : a.splits) s.insert(parse_split(name));
    q.splits = s;
  }
  q.temporal = !a.no_temporal;
  q.use_checker = !a.no_checker;
  q.show_filtered = !a.passed_only;
  if (a.format == "json") {
    out << service.space_json(q) << "\n";
    return;
  }
  const auto r = service.run_space(q);
  const auto m = service.matcher();
  for (const auto& cand : r.candidates) {
    if (a.passed_only && !cand.passed) continue;
    const auto* s = m->summary(cand.item_ref);
    out << cand.rank << '\t' << cand.item_ref << '\t' << (s ? to_string(assign_split(s->patient_id)) : "") << '\t'
        << fixed6(cand.cosine) << '\t' << (cand.checker_prob ? fixed6(*cand.checker_prob) : "-") << '\t'
        << (cand.passed ? 1 : 0) << '\n';
  }
}

struct TrainprepArgs {
  std::string corpus, out;
  std::size_t neg_ratio = 1, tagger_patients = 20, k_patient = 10, k_space = 20;
  std::string round_tag = "round1";
  bool all_splits = false;
};

void cmd_trainprep(const TrainprepArgs& a, const ServiceConfig& c, const Providers& p, std::ostream& out) {
  auto corpus = std::make_shared<const Corpus>(load_corpus(a.corpus));
  const auto opts = gateway_options(c);
  fs::create_directories(a.out);

  const auto tagger = trainprep::build_tagger_dataset(corpus->documents, *p.llm, a.tagger_patients, c.seed, opts);
  trainprep::write_tagger_examples(tagger.examples, fs::path(a.out) / "tagger.jsonl");

  const auto stage1 = trainprep::build_stage1_pairs(*corpus, *p.llm, a.neg_ratio, c.seed, opts);
  trainprep::write_ranking_pairs(stage1.pairs, fs::path(a.out) / "ranking_pairs.jsonl");

  auto idx = std::make_shared<const index::VectorIndex>(cascade::build_corpus_index(*corpus, *p.embedder));
  const cascade::Matcher matcher(idx, corpus, p.embedder);
  trainprep::MiningConfig mc;
  mc.k_patient = a.k_patient;
  mc.k_space = a.k_space;
  mc.round_tag = a.round_tag;
  mc.train_only = !a.all_splits;
  const auto mined = trainprep::mine_hard_negatives(matcher, *p.llm, mc, opts);

  auto contrastive = stage1.pairs;
  contrastive.insert(contrastive.end(), mined.pairs.begin(), mined.pairs.end());
  trainprep::write_contrastive_pairs(contrastive, fs::path(a.out) / "contrastive_pairs.jsonl");

  const auto checker = trainprep::build_checker_dataset(stage1.enrolled_checked, mined.pairs, {});
  trainprep::write_checker_examples(checker.examples, fs::path(a.out) / "checker.jsonl");

  out << "tagger sentences: " << tagger.examples.size() << "\n"
      << "stage-1 pairs: " << stage1.pairs.size() << "\n"
      << "mined pairs: " << mined.pairs.size() << "\n"
      << "checker examples: " << checker.examples.size() << " (" << checker.duplicates_dropped
      << " duplicates dropped, " << checker.label_conflicts << " label conflicts)\n";
}

struct EvalArgs {
  std::string corpus, index, protocol = "both", checker = "default", format = "table", out;
  std::size_t k = 0;
  double threshold = -1.0;
  bool no_temporal = false;
};

void cmd_eval(const EvalArgs& a, const ServiceConfig& c, std::ostream& out) {
  const auto owned_service = open_service(c, a.corpus, a.index);
  auto& service = *owned_service;
  const auto matcher = service.matcher();
  std::unique_ptr<cascade::PairChecker> owned;
  cascade::PairChecker* checker = nullptr;
  if (a.checker == "default") {
    checker = service.providers().checker.get();
  } else if (a.checker == "lexical") {
    owned = std::make_unique<cascade::LexicalChecker>();
  } else if (a.checker == "oracle") {
    auto oracle = std::make_unique<cascade::OracleChecker>();
    const auto gold = evalkit::gold_labels(matcher->corpus().labels);
    for (const auto& [key, label] : gold) {
      const auto* s = matcher->summary(key.first);
      const auto* sp = matcher->space(key.second);
      if (s && sp) oracle->set_label(s->text, sp->raw_text, label);
    }
    owned = std::move(oracle);
  } else if (a.checker != "none") {
    throw InvalidArgument("--checker must be default, lexical, oracle or none");
  }
  if (owned) checker = owned.get();

  std::vector<evalkit::Protocol> protocols;
  if (a.protocol == "both") protocols = {evalkit::Protocol::kPatientCentricK10, evalkit::Protocol::kTrialCentricK20};
  else protocols = {evalkit::parse_protocol(a.protocol)};

  std::string report;
  for (std::size_t i = 0; i < protocols.size(); ++i) {
    evalkit::ProtocolConfig pc;
    pc.protocol = protocols[i];
    if (a.k) pc.k = a.k;
    pc.checker = checker;
    pc.threshold = a.threshold >= 0.0 ? a.threshold : c.threshold;
    pc.temporal = !a.no_temporal;
    const auto reports = evalkit::run_protocol(*matcher, pc);
    if (a.format == "jsonl") {
      report += evalkit::render_jsonl(reports);
    } else if (a.format == "table") {
      if (i) report += "\n";
      report += evalkit::render_table(reports);
    } else {
      throw InvalidArgument("--format must be table or jsonl");
    }
  }
  if (a.out.empty()) {
    out << report;
  } else {
    write_file_atomic(a.out, report);
    out << "wrote report to " << a.out << "\n";
  }
}

struct SynthArgs {
  std::string spec, out;
  bool desk = false;
  std::size_t patients = 50, trials = 20;
};

void cmd_synth(const SynthArgs& a, const ServiceConfig& c, const Globals& g, const Providers& p, std::ostream& out) {
  if (a.desk) {
    synthgen::DeskFixtureConfig dc;
    dc.n_patients = a.patients;
    dc.n_trials = a.trials;
    if (g.seed) dc.seed = *g.seed;
    const auto corpus = synthgen::build_desk_fixture(dc, *p.llm, gateway_options(c));
    save_corpus(corpus, a.out);
    out << "wrote desk fixture (" << corpus.summaries.size() << " summaries, " << corpus.spaces.size()
        << " spaces, " << corpus.labels.size() << " labels) to " << a.out << "\n";
    return;
  }
  if (a.spec.empty()) throw InvalidArgument("synth: give --spec or --desk-fixture");
  auto spec = synthgen::load_synth_spec(a.spec);
  if (g.seed) spec.seed = *g.seed;
  const auto result = synthgen::assemble_corpus(spec, *p.llm, gateway_options(c));
  synthgen::write_assembled(result, a.out);
  out << "wrote " << result.corpus.summaries.size() << " synthetic patients to " << a.out;
  if (result.failed_patients + result.failed_summaries) {
    out << " (" << result.failed_patients << " patients and " << result.failed_summaries << " summaries failed)";
  }
  out << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Clinical trial matching engine"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_file, "Service/pipeline config file (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for sampling and generation");
  app.add_flag("--mock-providers", g.mock, "Use offline mock providers for every model call");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off");

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest-trials", "Fetch trial records from the registry");
  s_ingest->add_option("--nct", ingest.ncts, "NCT id (repeatable)");
  s_ingest->add_option("--nct-file", ingest.nct_file, "File with one NCT id per line")->check(CLI::ExistingFile);
  s_ingest->add_option("--condition", ingest.condition, "List trials for this condition");
  s_ingest->add_option("--as-of", ingest.as_of, "Drop listed trials starting after this date");
  s_ingest->add_option("--status", ingest.status, "recruiting or any");
  s_ingest->add_option("--page-size", ingest.page_size, "Search page size");
  s_ingest->add_option("--sample", ingest.sample, "Keep a seeded random sample of this many ids");
  s_ingest->add_option("--registry-base-url", ingest.base_url, "Registry base URL");
  s_ingest->add_option("--cache-dir", ingest.cache_dir, "Raw payload cache directory");
  s_ingest->add_option("--rate-limit", ingest.rate_limit, "Requests per second");
  s_ingest->add_option("--out", ingest.out, "trials.jsonl to write")->required();

  std::string ex_in, ex_out;
  auto* s_extract = app.add_subcommand("extract-spaces", "Extract trial spaces from eligibility criteria");
  s_extract->add_option("--trials", ex_in, "trials.jsonl")->required()->check(CLI::ExistingFile);
  s_extract->add_option("--out", ex_out, "spaces.jsonl to write")->required();

  std::string cd_in, cd_as_of, cd_out;
  double cd_threshold = 0.5;
  auto* s_condense = app.add_subcommand("condense", "Condense patient documents to tagged sentences");
  s_condense->add_option("--documents", cd_in, "documents.jsonl")->required()->check(CLI::ExistingFile);
  s_condense->add_option("--as-of", cd_as_of, "Cutoff date (default: each patient's latest document)");
  s_condense->add_option("--threshold", cd_threshold, "any_tag threshold");
  s_condense->add_option("--out", cd_out, "condensed.jsonl to write")->required();

  SummarizeArgs sum;
  auto* s_sum = app.add_subcommand("summarize", "Summarize condensed records into patient summaries");
  s_sum->add_option("--condensed", sum.condensed, "condensed.jsonl")->check(CLI::ExistingFile);
  s_sum->add_option("--documents", sum.documents, "documents.jsonl (condensed on the fly)")->check(CLI::ExistingFile);
  s_sum->add_option("--enrollments", sum.enrollments, "enrollments.jsonl: one summary per enrollment")
      ->check(CLI::ExistingFile);
  s_sum->add_option("--source", sum.source, "trial_enrollment, standard_of_care or user_entered");
  s_sum->add_option("--threshold", sum.threshold, "any_tag threshold for on-the-fly condensing");
  s_sum->add_option("--out", sum.out, "summaries.jsonl to write")->required();

  std::string ei_corpus, ei_out, ei_cache;
  auto* s_embed = app.add_subcommand("embed-index", "Embed a corpus and write the vector index");
  s_embed->add_option("--corpus", ei_corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  s_embed->add_option("--out", ei_out, "Index file to write")->required();
  s_embed->add_option("--vector-cache", ei_cache, "Embedding cache file (read and updated)");

  MatchArgs ma;
  auto* s_match = app.add_subcommand("match", "Retrieve and check candidates");
  s_match->require_subcommand(1);
  auto add_common = [&](CLI::App* s) {
    s->add_option("--corpus", ma.corpus, "Corpus directory")->check(CLI::ExistingDirectory);
    s->add_option("--index", ma.index, "Index file (built from the corpus when absent)");
    s->add_option("--k", ma.k, "Candidates to retrieve");
    s->add_option("--threshold", ma.threshold, "Checker threshold");
    s->add_flag("--no-checker", ma.no_checker, "Retrieval only");
    s->add_flag("--no-temporal", ma.no_temporal, "Skip the open-window filter");
    s->add_flag("--passed-only", ma.passed_only, "Print only candidates that pass the checker");
    s->add_option("--format", ma.format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));
  };
  auto* s_mp = s_match->add_subcommand("patient", "Trial spaces for a patient summary");
  add_common(s_mp);
  s_mp->add_option("--summary-file", ma.summary_file, "Free-text summary")->check(CLI::ExistingFile);
  s_mp->add_option("--patient-id", ma.patient_id, "Stored patient (latest summary)");
  s_mp->add_option("--summary-ref", ma.summary_ref, "Stored summary key");
  s_mp->add_option("--as-of", ma.as_of, "Temporal filter date");
  auto* s_ms = s_match->add_subcommand("space", "Patient summaries for a trial space");
  add_common(s_ms);
  s_ms->add_option("--space-id", ma.space_id, "Stored space id");
  s_ms->add_option("--space-file", ma.space_file, "Free-text space")->check(CLI::ExistingFile);
  s_ms->add_option("--nct-id", ma.nct_id, "Trial whose window applies to --space-file");
  s_ms->add_option("--split", ma.splits, "Restrict candidates to these splits (repeatable)");

  TrainprepArgs tp;
  auto* s_tp = app.add_subcommand("trainprep", "Build training datasets");
  s_tp->add_option("--corpus", tp.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  s_tp->add_option("--out", tp.out, "Output directory")->required();
  s_tp->add_option("--neg-ratio", tp.neg_ratio, "Random negatives per stage-1 positive");
  s_tp->add_option("--tagger-patients", tp.tagger_patients, "Patients sampled for tagger labels");
  s_tp->add_option("--k-patient", tp.k_patient, "Mining depth per patient");
  s_tp->add_option("--k-space", tp.k_space, "Mining depth per space");
  s_tp->add_option("--round-tag", tp.round_tag, "Label round tag for mined pairs");
  s_tp->add_flag("--all-splits", tp.all_splits, "Mine over every split (output is still leakage-checked)");

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Evaluate retrieval and retrieval + checker");
  s_eval->add_option("--corpus", ev.corpus, "Corpus directory with gold labels")->check(CLI::ExistingDirectory);
  s_eval->add_option("--index", ev.index, "Index file (built from the corpus when absent)");
  s_eval->add_option("--protocol", ev.protocol, "patient_centric, trial_centric or both");
  s_eval->add_option("--checker", ev.checker, "default, lexical, oracle or none");
  s_eval->add_option("--k", ev.k, "Override the protocol's k");
  s_eval->add_option("--threshold", ev.threshold, "Checker threshold");
  s_eval->add_flag("--no-temporal", ev.no_temporal, "Skip the open-window filter");
  s_eval->add_option("--format", ev.format, "table or jsonl");
  s_eval->add_option("--out", ev.out, "Report file (stdout when absent)");

  SynthArgs sy;
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  s_synth->add_option("--spec", sy.spec, "Synthetic corpus spec (JSON)")->check(CLI::ExistingFile);
  s_synth->add_flag("--desk-fixture", sy.desk, "Build the desk-scale evaluation fixture");
  s_synth->add_option("--patients", sy.patients, "Desk fixture patients");
  s_synth->add_option("--trials", sy.trials, "Desk fixture trials");
  s_synth->add_option("--out", sy.out, "Output corpus directory")->required();

  std::string sv_corpus, sv_index, sv_host;
  int sv_port = -1;
  std::size_t sv_threads = 0;
  auto* s_serve = app.add_subcommand("serve", "Run the HTTP matching service");
  s_serve->add_option("--corpus", sv_corpus, "Corpus directory")->check(CLI::ExistingDirectory);
  s_serve->add_option("--index", sv_index, "Index file");
  s_serve->add_option("--host", sv_host, "Listen address");
  s_serve->add_option("--port", sv_port, "Listen port");
  s_serve->add_option("--threads", sv_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    if (!g.log_level.empty()) log().set_level(spdlog::level::from_str(g.log_level));
    const auto config = resolve_config(g);
    auto providers = [&] { return make_providers(config); };
    if (*s_ingest) {
      cmd_ingest(ingest, config, out);
    } else if (*s_extract) {
      cmd_extract(ex_in, ex_out, config, providers(), out);
    } else if (*s_condense) {
      cmd_condense(cd_in, cd_as_of, cd_threshold, cd_out, providers(), out);
    } else if (*s_sum) {
      cmd_summarize(sum, config, providers(), out);
    } else if (*s_embed) {
      cmd_embed_index(ei_corpus, ei_out, ei_cache, providers(), out);
    } else if (*s_mp) {
      cmd_match_patient(ma, config, out);
    } else if (*s_ms) {
      cmd_match_space(ma, config, out);
    } else if (*s_tp) {
      cmd_trainprep(tp, config, providers(), out);
    } else if (*s_eval) {
      cmd_eval(ev, config, out);
    } else if (*s_synth) {
      cmd_synth(sy, config, g, providers(), out);
    } else if (*s_serve) {
      auto c = config;
      if (!sv_host.empty()) c.host = sv_host;
      if (sv_port >= 0) c.port = sv_port;
      if (sv_threads) c.worker_threads = sv_threads;
      const auto service = open_service(c, sv_corpus, sv_index);
      HttpServer server(*service);
      err << "serving on " << c.host << ":" << c.port << "\n";
      server.listen(c.host, c.port);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace trialmatch::service
