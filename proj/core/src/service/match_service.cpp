#include "trialmatch/service/match_service.h"

#include <json.hpp>

#include "trialmatch/common/error.h"
#include "trialmatch/common/hash.h"
#include "trialmatch/common/log.h"
#include "trialmatch/common/version.h"
#include "trialmatch/datamodel/split.h"

namespace trialmatch::service {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json parse_body(const std::string& body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("request body is not a JSON object");
  return j;
}

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("request field \"") + key + "\" has the wrong type");
  }
}

std::optional<std::size_t> opt_k(const json& j) {
  if (!j.contains("k") || j["k"].is_null()) return std::nullopt;
  if (!j["k"].is_number_integer() || j["k"].get<long long>() < 1) throw InvalidArgument("k must be an integer >= 1");
  return j["k"].get<std::size_t>();
}

std::optional<Date> opt_date(const json& j, const char* key) {
  auto s = opt<std::string>(j, key);
  if (!s) return std::nullopt;
  return Date::parse_iso(*s);
}

ordered_json prob(const cascade::MatchCandidate& c) {
  return c.checker_prob ? ordered_json(*c.checker_prob) : ordered_json(nullptr);
}

ordered_json header(const MatchResult& r) {
  std::size_t passed = 0;
  for (const auto& c : r.candidates) passed += c.passed ? 1 : 0;
  return ordered_json{{"query_ref", r.query_ref},
                      {"k", r.k},
                      {"threshold", r.threshold},
                      {"as_of_date", r.as_of ? ordered_json(r.as_of->iso()) : ordered_json(nullptr)},
                      {"n_candidates", r.candidates.size()},
                      {"n_passed", passed}};
}

Reply error_reply(const std::exception& e) {
  return {status_for(e), ordered_json{{"error", e.what()}}.dump()};
}

template <typename Fn>
Reply guarded(Fn fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return error_reply(e);
  }
}

}  // namespace

int status_for(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const ParseError*>(&e)) return 400;
  if (dynamic_cast<const NotFound*>(&e)) return 404;
  if (dynamic_cast<const ConflictError*>(&e)) return 409;
  if (dynamic_cast<const TransportError*>(&e) || dynamic_cast<const ContractViolation*>(&e) ||
      dynamic_cast<const cascade::CheckerFailure*>(&e) || dynamic_cast<const LlmOutputError*>(&e)) {
    return 502;
  }
  return 500;
}

PatientQuery parse_patient_query(const std::string& body) {
  const auto j = parse_body(body);
  PatientQuery q;
  q.summary_text = opt<std::string>(j, "summary_text");
  q.patient_id = opt<std::string>(j, "patient_id");
  q.summary_ref = opt<std::string>(j, "summary_ref");
  const int sources = !!q.summary_text + !!q.patient_id + !!q.summary_ref;
  if (sources != 1) throw InvalidArgument("give exactly one of summary_text, patient_id, summary_ref");
  if (q.summary_text && q.summary_text->find_first_not_of(" \t\r\n") == std::string::npos) {
    throw InvalidArgument("summary_text is empty");
  }
  q.k = opt_k(j);
  q.threshold = opt<double>(j, "threshold");
  q.as_of = opt_date(j, "as_of_date");
  q.show_filtered = opt<bool>(j, "show_filtered").value_or(false);
  q.temporal = opt<bool>(j, "temporal").value_or(true);
  q.use_checker = opt<bool>(j, "checker").value_or(true);
  return q;
}

SpaceQuery parse_space_query(const std::string& body) {
  const auto j = parse_body(body);
  SpaceQuery q;
  q.space_text = opt<std::string>(j, "space_text");
  q.space_id = opt<std::string>(j, "space_id");
  if (!!q.space_text == !!q.space_id) throw InvalidArgument("give exactly one of space_text, space_id");
  if (q.space_text && q.space_text->find_first_not_of(" \t\r\n") == std::string::npos) {
    throw InvalidArgument("space_text is empty");
  }
  q.nct_id = opt<std::string>(j, "nct_id");
  q.open_date = opt_date(j, "open_date");
  q.close_date = opt_date(j, "close_date");
  if (q.close_date && !q.open_date) throw InvalidArgument("close_date requires open_date");
  q.k = opt_k(j);
  q.threshold = opt<double>(j, "threshold");
  if (auto splits = opt<std::vector<std::string>>(j, "splits")) {
    std::set<Split> s;
    for (const auto& name : *splits) s.insert(parse_split(name));
    q.splits = s;
  }
  q.show_filtered = opt<bool>(j, "show_filtered").value_or(false);
  q.temporal = opt<bool>(j, "temporal").value_or(true);
  q.use_checker = opt<bool>(j, "checker").value_or(true);
  return q;
}

MatchService::MatchService(ServiceConfig config, Providers providers)
    : config_(std::move(config)), providers_(std::move(providers)) {
  validate(config_);
  cache_ = std::make_shared<embedding::VectorCache>(providers_.embedder->dimension(), providers_.embedder->id());
  if (config_.vector_cache && std::filesystem::exists(*config_.vector_cache)) cache_->load(*config_.vector_cache);
}

void MatchService::reload() {
  std::lock_guard reload_lock(reload_mu_);
  if (!config_.corpus_dir) throw InvalidArgument("no corpus_dir configured");
  auto corpus = std::make_shared<Corpus>(load_corpus(*config_.corpus_dir));
  std::shared_ptr<const index::VectorIndex> idx;
  if (config_.index_path && std::filesystem::exists(*config_.index_path)) {
    idx = std::make_shared<const index::VectorIndex>(index::VectorIndex::load(*config_.index_path));
  } else {
    idx = std::make_shared<const index::VectorIndex>(
        cascade::build_corpus_index(*corpus, *providers_.embedder, cache_.get()));
  }
  install(std::move(corpus), std::move(idx));
}

void MatchService::install(std::shared_ptr<const Corpus> corpus, std::shared_ptr<const index::VectorIndex> index) {
  if (index->dimension() != providers_.embedder->dimension()) {
    throw ContractViolation("index dimension " + std::to_string(index->dimension()) +
                            " differs from the embedder's " + std::to_string(providers_.embedder->dimension()));
  }
  auto next = std::make_shared<Snapshot>();
  next->corpus = corpus;
  next->matcher = std::make_shared<const cascade::Matcher>(std::move(index), std::move(corpus), providers_.embedder, cache_);
  std::lock_guard lock(mu_);
  snapshot_ = std::move(next);
}

bool MatchService::loaded() const { return snapshot() != nullptr; }

std::shared_ptr<const MatchService::Snapshot> MatchService::snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

std::shared_ptr<const MatchService::Snapshot> MatchService::require_snapshot() const {
  auto s = snapshot();
  if (!s) throw ConflictError("index not loaded");
  return s;
}

std::shared_ptr<const cascade::Matcher> MatchService::matcher() const {
  auto s = snapshot();
  return s ? s->matcher : nullptr;
}

cascade::MatchOptions MatchService::options(std::optional<std::size_t> k, std::size_t default_k,
                                            std::optional<double> threshold, bool temporal, bool use_checker) const {
  cascade::MatchOptions o;
  o.k = k.value_or(default_k);
  o.threshold = threshold.value_or(config_.threshold);
  if (!(o.threshold >= 0.0 && o.threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0, 1]");
  o.temporal = temporal;
  o.checker = use_checker ? providers_.checker.get() : nullptr;
  return o;
}

MatchResult MatchService::run_patient(const PatientQuery& q) const {
  const auto snap = require_snapshot();
  const auto& m = *snap->matcher;
  auto opts = options(q.k, config_.k_patient, q.threshold, q.temporal, q.use_checker);
  MatchResult r;
  r.k = opts.k;
  r.threshold = opts.threshold;
  if (q.summary_text) {
    r.query_ref = "user:" + sha256_hex(*q.summary_text).substr(0, 16);
    r.as_of = q.as_of;
    r.candidates = m.match_patient(r.query_ref, *q.summary_text, r.as_of, opts);
    return r;
  }
  const PatientSummary* s = nullptr;
  if (q.summary_ref) {
    s = m.summary(*q.summary_ref);
    if (!s) throw NotFound("unknown summary_ref " + *q.summary_ref);
  } else {
    for (const auto& cand : snap->corpus->summaries) {
      if (cand.patient_id == *q.patient_id && (!s || s->ref() < cand.ref())) s = &cand;
    }
    if (!s) throw NotFound("unknown patient_id " + *q.patient_id);
  }
  r.query_ref = s->ref().key();
  r.as_of = q.as_of ? q.as_of : std::optional<Date>(s->anchor_date);
  r.candidates = m.match_patient(r.query_ref, s->text, r.as_of, opts);
  return r;
}

MatchResult MatchService::run_space(const SpaceQuery& q) const {
  const auto snap = require_snapshot();
  const auto& m = *snap->matcher;
  auto opts = options(q.k, config_.k_space, q.threshold, q.temporal, q.use_checker);
  if (q.splits) opts.filter.split_in = q.splits;
  MatchResult r;
  r.k = opts.k;
  r.threshold = opts.threshold;
  if (q.space_id) {
    const auto* sp = m.space(*q.space_id);
    if (!sp) throw NotFound("unknown space_id " + *q.space_id);
    r.query_ref = sp->space_id;
    r.candidates = m.match_space(*sp, opts);
    return r;
  }
  std::optional<index::Window> window;
  if (q.open_date) {
    window = index::Window{*q.open_date, q.close_date};
  } else if (q.nct_id) {
    window = m.trial_window(*q.nct_id);
    if (!window) throw NotFound("unknown nct_id " + *q.nct_id);
  }
  r.query_ref = "user:" + sha256_hex(*q.space_text).substr(0, 16);
  r.candidates = m.match_space(r.query_ref, *q.space_text, window, opts);
  return r;
}

std::string MatchService::patient_json(const PatientQuery& q) const {
  const auto snap = require_snapshot();
  const auto r = run_patient(q);
  auto out = header(r);
  out["candidates"] = ordered_json::array();
  for (const auto& c : r.candidates) {
    if (!c.passed && !q.show_filtered) continue;
    const auto* sp = snap->matcher->space(c.item_ref);
    out["candidates"].push_back(ordered_json{{"rank", c.rank},
                                             {"space_id", c.item_ref},
                                             {"nct_id", sp ? sp->nct_id : ""},
                                             {"cosine", c.cosine},
                                             {"checker_prob", prob(c)},
                                             {"passed", c.passed},
                                             {"raw_text", sp ? sp->raw_text : ""}});
  }
  return out.dump();
}

std::string MatchService::space_json(const SpaceQuery& q) const {
  const auto snap = require_snapshot();
  const auto r = run_space(q);
  auto out = header(r);
  out["candidates"] = ordered_json::array();
  for (const auto& c : r.candidates) {
    if (!c.passed && !q.show_filtered) continue;
    const auto* s = snap->matcher->summary(c.item_ref);
    ordered_json row{{"rank", c.rank}, {"summary_ref", c.item_ref}};
    if (s) {
      row["patient_id"] = s->patient_id;
      row["anchor_date"] = s->anchor_date.iso();
      row["source"] = to_string(s->source);
      row["split"] = to_string(assign_split(s->patient_id));
    }
    row["cosine"] = c.cosine;
    row["checker_prob"] = prob(c);
    row["passed"] = c.passed;
    row["summary_text"] = s ? s->text : "";
    out["candidates"].push_back(std::move(row));
  }
  return out.dump();
}

Reply MatchService::handle_match_patient(const std::string& body) const {
  return guarded([&] { return Reply{200, patient_json(parse_patient_query(body))}; });
}

Reply MatchService::handle_match_space(const std::string& body) const {
  return guarded([&] { return Reply{200, space_json(parse_space_query(body))}; });
}

Reply MatchService::handle_trial(const std::string& nct_id) const {
  return guarded([&] {
    if (!is_valid_nct_id(nct_id)) throw InvalidArgument("malformed nct_id " + nct_id);
    const auto snap = require_snapshot();
    const auto* t = snap->matcher->trial(nct_id);
    if (!t) throw NotFound("unknown nct_id " + nct_id);
    ordered_json spaces = ordered_json::array();
    for (const auto& s : snap->corpus->spaces) {
      if (s.nct_id == nct_id) spaces.push_back(s.space_id);
    }
    ordered_json out{{"nct_id", t->nct_id},
                     {"title", t->title ? ordered_json(*t->title) : ordered_json(nullptr)},
                     {"open_date", t->open_date.iso()},
                     {"close_date", t->close_date ? ordered_json(t->close_date->iso()) : ordered_json(nullptr)},
                     {"eligibility_text", t->eligibility_text},
                     {"spaces", spaces}};
    return Reply{200, out.dump()};
  });
}

Reply MatchService::handle_space(const std::string& space_id) const {
  return guarded([&] {
    const auto snap = require_snapshot();
    const auto* s = snap->matcher->space(space_id);
    if (!s) throw NotFound("unknown space_id " + space_id);
    auto field = [](const std::optional<std::string>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    ordered_json out{{"space_id", s->space_id},
                     {"nct_id", s->nct_id},
                     {"ordinal", s->ordinal},
                     {"cancer_type_allowed", field(s->cancer_type_allowed)},
                     {"histology_allowed", field(s->histology_allowed)},
                     {"cancer_burden_allowed", field(s->cancer_burden_allowed)},
                     {"prior_treatment_required", field(s->prior_treatment_required)},
                     {"prior_treatment_excluded", field(s->prior_treatment_excluded)},
                     {"biomarkers_required", field(s->biomarkers_required)},
                     {"biomarkers_excluded", field(s->biomarkers_excluded)},
                     {"raw_text", s->raw_text}};
    return Reply{200, out.dump()};
  });
}

Reply MatchService::handle_health() const {
  const auto snap = snapshot();
  ordered_json out{{"status", "ok"}, {"version", kVersion}, {"index_loaded", snap != nullptr}};
  if (snap) {
    const auto& idx = snap->matcher->index();
    out["n_patients"] = idx.size(index::Side::kPatient);
    out["n_spaces"] = idx.size(index::Side::kSpace);
    out["n_trials"] = snap->corpus->trials.size();
    out["dimension"] = idx.dimension();
  }
  out["embedder"] = providers_.embedder->id();
  return {200, out.dump()};
}

Reply MatchService::handle_reload() {
  return guarded([&] {
    reload();
    log().info("service: snapshot reloaded");
    return handle_health();
  });
}

bool MatchService::authorized(const std::string& header) const {
  if (!config_.require_auth) return true;
  const char* token = std::getenv(config_.auth_token_env.c_str());
  if (!token || !*token) return false;
  return header == std::string("Bearer ") + token;
}

}  // namespace trialmatch::service
