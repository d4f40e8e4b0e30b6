#include "internal/json_codec.h"

#include <set>

#include "trialmatch/common/error.h"

namespace trialmatch::codec {

namespace {

class Reader {
 public:
  Reader(const json& j, bool strict, std::string_view kind) : j_(j), strict_(strict), kind_(kind) {
    if (!j.is_object()) throw ParseError(std::string(kind) + " record is not a JSON object");
  }

  std::string str(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || !it->is_string()) {
      throw ParseError(kind_ + ": missing or non-string field '" + key + "'");
    }
    return it->get<std::string>();
  }

  std::optional<std::string> opt_str(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(kind_ + ": non-string field '" + key + "'");
    return it->get<std::string>();
  }

  Date date(const char* key) { return Date::parse_iso(str(key)); }

  std::optional<Date> opt_date(const char* key) {
    auto s = opt_str(key);
    if (!s) return std::nullopt;
    return Date::parse_iso(*s);
  }

  bool boolean(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || !it->is_boolean()) {
      throw ParseError(kind_ + ": missing or non-boolean field '" + key + "'");
    }
    return it->get<bool>();
  }

  std::int64_t integer(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || !it->is_number_integer()) {
      throw ParseError(kind_ + ": missing or non-integer field '" + key + "'");
    }
    return it->get<std::int64_t>();
  }

  const json& object(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || !it->is_object()) {
      throw ParseError(kind_ + ": missing or non-object field '" + key + "'");
    }
    return *it;
  }

  ExtraFields finish() {
    ExtraFields extra;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.count(it.key())) continue;
      if (strict_) throw ParseError(kind_ + ": unknown field '" + it.key() + "'");
      extra.emplace(it.key(), it.value().dump());
    }
    return extra;
  }

 private:
  const json& j_;
  bool strict_;
  std::string kind_;
  std::set<std::string> seen_;
};

void put_extra(json& j, const ExtraFields& extra) {
  for (const auto& [k, v] : extra) j[k] = json::parse(v);
}

void put_opt(json& j, const char* key, const std::optional<std::string>& v) {
  if (v) j[key] = *v;
}

}  // namespace

json encode(const SummaryRef& r) {
  return json{{"patient_id", r.patient_id},
              {"anchor_date", r.anchor_date.iso()},
              {"source", std::string(to_string(r.source))}};
}

json encode(const ClinicalDocument& r) {
  json j;
  put_extra(j, r.extra);
  j["patient_id"] = r.patient_id;
  j["doc_type"] = std::string(to_string(r.doc_type));
  j["date"] = r.date.iso();
  j["text"] = r.text;
  return j;
}

json encode(const PatientSummary& r) {
  json j;
  put_extra(j, r.extra);
  j["patient_id"] = r.patient_id;
  j["anchor_date"] = r.anchor_date.iso();
  j["source"] = std::string(to_string(r.source));
  j["text"] = r.text;
  return j;
}

json encode(const TrialRecord& r) {
  json j;
  put_extra(j, r.extra);
  j["nct_id"] = r.nct_id;
  put_opt(j, "title", r.title);
  j["eligibility_text"] = r.eligibility_text;
  j["open_date"] = r.open_date.iso();
  if (r.close_date) j["close_date"] = r.close_date->iso();
  return j;
}

json encode(const TrialSpace& r) {
  json j;
  put_extra(j, r.extra);
  j["space_id"] = r.space_id;
  j["nct_id"] = r.nct_id;
  j["ordinal"] = r.ordinal;
  put_opt(j, "cancer_type_allowed", r.cancer_type_allowed);
  put_opt(j, "histology_allowed", r.histology_allowed);
  put_opt(j, "cancer_burden_allowed", r.cancer_burden_allowed);
  put_opt(j, "prior_treatment_required", r.prior_treatment_required);
  put_opt(j, "prior_treatment_excluded", r.prior_treatment_excluded);
  put_opt(j, "biomarkers_required", r.biomarkers_required);
  put_opt(j, "biomarkers_excluded", r.biomarkers_excluded);
  j["raw_text"] = r.raw_text;
  return j;
}

json encode(const Enrollment& r) {
  json j;
  put_extra(j, r.extra);
  j["patient_id"] = r.patient_id;
  j["nct_id"] = r.nct_id;
  j["enroll_date"] = r.enroll_date.iso();
  return j;
}

json encode(const PairLabel& r) {
  json j;
  put_extra(j, r.extra);
  j["summary_ref"] = encode(r.summary_ref);
  j["space_id"] = r.space_id;
  j["label"] = r.label;
  j["provenance"] = std::string(to_string(r.provenance));
  put_opt(j, "rationale_text", r.rationale_text);
  return j;
}

SummaryRef decode_summary_ref(const json& j) {
  Reader r(j, true, "summary_ref");
  SummaryRef ref;
  ref.patient_id = r.str("patient_id");
  ref.anchor_date = r.date("anchor_date");
  ref.source = parse_summary_source(r.str("source"));
  r.finish();
  return ref;
}

ClinicalDocument decode_document(const json& j, bool strict) {
  Reader r(j, strict, "document");
  ClinicalDocument d;
  d.patient_id = r.str("patient_id");
  d.doc_type = parse_doc_type(r.str("doc_type"));
  d.date = r.date("date");
  d.text = r.str("text");
  d.extra = r.finish();
  if (d.patient_id.empty()) throw ParseError("document: empty patient_id");
  if (d.text.empty()) throw ParseError("document: empty text");
  return d;
}

PatientSummary decode_summary(const json& j, bool strict) {
  Reader r(j, strict, "summary");
  PatientSummary s;
  s.patient_id = r.str("patient_id");
  s.anchor_date = r.date("anchor_date");
  s.source = parse_summary_source(r.str("source"));
  s.text = r.str("text");
  s.extra = r.finish();
  if (s.patient_id.empty()) throw ParseError("summary: empty patient_id");
  if (s.text.empty()) throw ParseError("summary: empty text");
  return s;
}

TrialRecord decode_trial(const json& j, bool strict) {
  Reader r(j, strict, "trial");
  TrialRecord t;
  t.nct_id = r.str("nct_id");
  t.title = r.opt_str("title");
  t.eligibility_text = r.str("eligibility_text");
  t.open_date = r.date("open_date");
  t.close_date = r.opt_date("close_date");
  t.extra = r.finish();
  if (!is_valid_nct_id(t.nct_id)) throw ParseError("trial: malformed nct_id '" + t.nct_id + "'");
  if (t.close_date && *t.close_date < t.open_date) {
    throw ParseError("trial " + t.nct_id + ": close_date precedes open_date");
  }
  return t;
}

TrialSpace decode_space(const json& j, bool strict) {
  Reader r(j, strict, "space");
  TrialSpace s;
  s.space_id = r.str("space_id");
  s.nct_id = r.str("nct_id");
  s.ordinal = static_cast<int>(r.integer("ordinal"));
  s.cancer_type_allowed = r.opt_str("cancer_type_allowed");
  s.histology_allowed = r.opt_str("histology_allowed");
  s.cancer_burden_allowed = r.opt_str("cancer_burden_allowed");
  s.prior_treatment_required = r.opt_str("prior_treatment_required");
  s.prior_treatment_excluded = r.opt_str("prior_treatment_excluded");
  s.biomarkers_required = r.opt_str("biomarkers_required");
  s.biomarkers_excluded = r.opt_str("biomarkers_excluded");
  s.raw_text = r.str("raw_text");
  s.extra = r.finish();
  if (s.ordinal < 1) throw ParseError("space: ordinal must be >= 1");
  if (s.raw_text.empty()) throw ParseError("space: empty raw_text");
  if (s.space_id != make_space_id(s.nct_id, s.ordinal)) {
    throw ParseError("space: space_id '" + s.space_id + "' does not match nct_id#ordinal");
  }
  return s;
}

Enrollment decode_enrollment(const json& j, bool strict) {
  Reader r(j, strict, "enrollment");
  Enrollment e;
  e.patient_id = r.str("patient_id");
  e.nct_id = r.str("nct_id");
  e.enroll_date = r.date("enroll_date");
  e.extra = r.finish();
  return e;
}

PairLabel decode_label(const json& j, bool strict) {
  Reader r(j, strict, "label");
  PairLabel l;
  l.summary_ref = decode_summary_ref(r.object("summary_ref"));
  l.space_id = r.str("space_id");
  l.label = r.boolean("label");
  l.provenance = parse_label_provenance(r.str("provenance"));
  l.rationale_text = r.opt_str("rationale_text");
  l.extra = r.finish();
  return l;
}

void for_each_jsonl(const std::string& contents,
                    const std::function<void(const json&, std::size_t)>& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t nl = contents.find('\n', start);
    if (nl == std::string::npos) nl = contents.size();
    ++line_no;
    std::string_view line(contents.data() + start, nl - start);
    start = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    try {
      fn(j, line_no);
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(e.what(), line_no);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

}  // namespace trialmatch::codec
