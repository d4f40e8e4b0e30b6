#include "trialmatch/llm/mock_provider.h"

#include <algorithm>
#include <json.hpp>
#include <fstream>
#include <regex>
#include <sstream>

#include "trialmatch/common/error.h"
#include "trialmatch/common/hash.h"
#include "trialmatch/common/oncology_lexicon.h"
#include "trialmatch/common/text.h"
#include "trialmatch/llm/parsers.h"

namespace trialmatch::llm {

namespace {

const std::string& binding(const Bindings& b, const std::string& name) {
  auto it = b.find(name);
  if (it == b.end()) throw InvalidArgument("mock: missing binding " + name);
  return it->second;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cur.push_back(s[i]);
    const bool end = s[i] == '\n' || (s[i] == '.' && (i + 1 == s.size() || s[i + 1] == ' ' || s[i + 1] == '\n'));
    if (end) {
      auto t = std::string(text::trim(cur));
      if (!t.empty()) out.push_back(t);
      cur.clear();
    }
  }
  auto t = std::string(text::trim(cur));
  if (!t.empty()) out.push_back(t);
  return out;
}

bool negative_sentence(std::string_view s) {
  for (auto cue : {"not allowed", "excluded", "must not", "without", "no prior", "ineligible"}) {
    if (text::contains_ci(s, cue)) return true;
  }
  return false;
}

void append_unique(std::vector<std::string>& v, const std::string& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

std::vector<std::string> all_biomarkers() {
  std::vector<std::string> out;
  for (const auto& p : lexicon::cancer_profiles()) {
    for (const auto& b : p.biomarkers) append_unique(out, b);
  }
  return out;
}

std::vector<std::string> all_therapies() {
  std::vector<std::string> out;
  for (const auto& p : lexicon::cancer_profiles()) {
    for (const auto& t : p.therapies) append_unique(out, t);
    append_unique(out, p.local_therapy);
  }
  // Longer regimens first so "docetaxel" does not shadow a combination.
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return out;
}

// Space extraction ---------------------------------------------------------

std::vector<std::string> cohort_blocks(const std::string& trial) {
  static const std::regex kCohort(R"(^\s*cohort\s+[A-Za-z0-9]+\s*:)", std::regex::icase);
  std::vector<std::string> blocks;
  for (const auto& line : text::split_lines(trial)) {
    if (std::regex_search(line, kCohort)) {
      blocks.push_back(line.substr(line.find(':') + 1));
    } else if (!blocks.empty() && !text::trim(line).empty() &&
               !text::contains_ci(line, "criteria")) {
      blocks.back() += " " + std::string(text::trim(line));
    } else if (!blocks.empty()) {
      // blank line or section heading closes the cohort
      blocks.emplace_back();
    }
  }
  blocks.erase(std::remove_if(blocks.begin(), blocks.end(),
                              [](const std::string& b) { return text::trim(b).empty(); }),
               blocks.end());
  if (blocks.empty()) blocks.push_back(trial);
  return blocks;
}

std::string extract_space_item(const std::string& block) {
  const auto* profile = lexicon::find_profile(block);
  std::vector<std::string> hist, burden, bio_req, bio_exc, tx_req, tx_exc;
  for (const auto& s : split_sentences(block)) {
    const bool neg = negative_sentence(s);
    if (profile && !neg) {
      for (const auto& h : profile->histologies) {
        if (lexicon::mentions(s, h)) append_unique(hist, h);
      }
    }
    if (!neg) {
      for (auto e : lexicon::kExtents) {
        if (lexicon::mentions(s, e)) append_unique(burden, std::string(e));
      }
    }
    for (const auto& b : all_biomarkers()) {
      if (lexicon::mentions(s, b)) append_unique(neg ? bio_exc : bio_req, b);
    }
    std::string rest = s;
    for (const auto& t : all_therapies()) {
      const auto pos = lexicon::find_phrase(rest, t);
      if (pos == std::string::npos) continue;
      rest.replace(pos, t.size(), std::string(t.size(), ' '));
      if (neg) {
        append_unique(tx_exc, t);
      } else if (text::contains_ci(s, "prior") || text::contains_ci(s, "received") ||
                 text::contains_ci(s, "progressed")) {
        append_unique(tx_req, t);
      }
    }
  }
  std::vector<std::string> parts;
  if (profile) {
    parts.push_back("Cancer type allowed: " + profile->name);
  } else if (text::contains_ci(block, "solid tumor")) {
    parts.push_back("Cancer type allowed: any solid tumor");
  }
  if (!hist.empty()) parts.push_back("Histology allowed: " + text::join(hist, " or "));
  if (!burden.empty()) parts.push_back("Cancer burden allowed: " + text::join(burden, " or "));
  if (!tx_req.empty()) parts.push_back("Prior treatment required: " + text::join(tx_req, " or "));
  if (!tx_exc.empty()) parts.push_back("Prior treatment excluded: " + text::join(tx_exc, ", "));
  if (!bio_req.empty()) parts.push_back("Biomarkers required: " + text::join(bio_req, " or "));
  if (!bio_exc.empty()) parts.push_back("Biomarkers excluded: " + text::join(bio_exc, ", "));
  if (parts.empty()) return {};
  return text::join(parts, ". ") + ".";
}

std::string respond_space_extraction(const Bindings& b) {
  std::vector<std::string> items;
  for (const auto& block : cohort_blocks(text::canonicalize_newlines(binding(b, "trial")))) {
    auto item = extract_space_item(block);
    if (!item.empty()) items.push_back(std::move(item));
  }
  if (items.empty()) items.push_back("Cancer type allowed: any solid tumor.");
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += std::to_string(i + 1) + ". " + items[i] + "\n";
  }
  return out;
}

// Summarization --------------------------------------------------------------

std::string respond_summarization(const Bindings& b) {
  const std::string& excerpt = binding(b, "excerpt");
  const auto* profile = lexicon::find_profile(excerpt);
  std::vector<std::string> lines;
  lines.push_back("Cancer type/primary site: " +
                  (profile ? profile->name + " (" + profile->primary_site + ")" : std::string("not documented")));
  std::string hist = "not documented";
  if (profile) {
    std::size_t best = std::string::npos;
    for (const auto& h : profile->histologies) {
      const auto pos = lexicon::find_phrase(excerpt, h);
      if (pos < best) {
        best = pos;
        hist = h;
      }
    }
  }
  lines.push_back("Histology: " + hist);
  const auto extent = lexicon::detect_extent(excerpt);
  lines.push_back("Current extent: " + (extent.empty() ? std::string("not documented") : extent));
  std::vector<std::pair<std::size_t, std::string>> found;
  for (const auto& m : all_biomarkers()) {
    const auto pos = lexicon::find_phrase(excerpt, m);
    if (pos != std::string::npos) found.emplace_back(pos, m);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> bio;
  for (auto& [pos, m] : found) bio.push_back(m);
  lines.push_back("Biomarkers: " + (bio.empty() ? std::string("no actionable alterations documented")
                                                 : text::join(bio, "; ")));
  // Treatments in order of first mention, dated by the enclosing header.
  static const std::regex kHeader(R"(^\[(\d{4}-\d{2}-\d{2}) [a-z_]+\]$)");
  std::vector<std::string> tx;
  std::string current_date;
  for (const auto& line : text::split_lines(excerpt)) {
    std::smatch m;
    if (std::regex_match(line, m, kHeader)) {
      current_date = m.str(1);
      continue;
    }
    std::string rest = line;
    std::vector<std::pair<std::size_t, std::string>> hits;
    for (const auto& t : all_therapies()) {
      const auto pos = lexicon::find_phrase(rest, t);
      if (pos == std::string::npos) continue;
      rest.replace(pos, t.size(), std::string(t.size(), ' '));
      hits.emplace_back(pos, t);
    }
    std::sort(hits.begin(), hits.end());
    for (auto& [pos, t] : hits) {
      const bool seen = std::any_of(tx.begin(), tx.end(), [&](const std::string& x) {
        return x.rfind(t + " (", 0) == 0 || x == t;
      });
      if (!seen) tx.push_back(current_date.empty() ? t : t + " (documented " + current_date + ")");
    }
  }
  lines.push_back("Treatment history: " + (tx.empty() ? std::string("none documented") : text::join(tx, "; ")));
  return text::join(lines, "\n");
}

// Reasonable consideration ---------------------------------------------------

std::vector<std::string> split_items(std::string_view value) {
  std::vector<std::string> out;
  std::string v = std::regex_replace(std::string(value), std::regex(R"(\s+or\s+)"), ",");
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = std::string(text::trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string respond_check(const Bindings& b) {
  const std::string& space_text = binding(b, "trial_summary");
  const std::string& patient = binding(b, "patient_summary");
  TrialSpace space;
  parse_space_fields(space_text, space);
  std::vector<std::string> reasons;
  bool ok = true;
  auto fail = [&](std::string why) {
    ok = false;
    reasons.push_back(std::move(why));
  };

  const auto* patient_profile = lexicon::find_profile(patient);
  if (space.cancer_type_allowed && !text::contains_ci(*space.cancer_type_allowed, "solid tumor")) {
    const auto allowed = lexicon::find_profiles(*space.cancer_type_allowed);
    if (!allowed.empty()) {
      if (std::find(allowed.begin(), allowed.end(), patient_profile) == allowed.end()) {
        fail("The patient's cancer type does not match the trial's allowed cancer type.");
      } else {
        reasons.push_back("The cancer type matches.");
      }
    }
  }
  if (space.cancer_burden_allowed) {
    const auto& v = *space.cancer_burden_allowed;
    std::vector<std::string> allowed;
    for (auto e : lexicon::kExtents) {
      if (lexicon::mentions(v, e)) allowed.emplace_back(e);
    }
    if (allowed.empty() && lexicon::mentions(v, "advanced")) allowed = {"metastatic", "locally advanced"};
    const auto extent = lexicon::detect_extent(patient);
    if (!allowed.empty() && !extent.empty() &&
        std::find(allowed.begin(), allowed.end(), extent) == allowed.end()) {
      fail("The patient's disease is " + extent + ", which is outside the allowed cancer burden.");
    } else {
      reasons.push_back("The cancer burden is compatible.");
    }
  }
  if (space.biomarkers_required) {
    const auto items = split_items(*space.biomarkers_required);
    const bool any = std::any_of(items.begin(), items.end(), [&](const std::string& m) {
      return lexicon::mentions(patient, lexicon::biomarker_key(m));
    });
    if (!any) fail("The patient's summary does not document a required biomarker.");
    else reasons.push_back("A required biomarker is documented.");
  }
  if (space.biomarkers_excluded) {
    for (const auto& m : split_items(*space.biomarkers_excluded)) {
      if (lexicon::mentions(patient, lexicon::biomarker_key(m))) {
        fail("The patient has an excluded biomarker (" + m + ").");
        break;
      }
    }
  }
  if (space.prior_treatment_required) {
    const auto items = split_items(*space.prior_treatment_required);
    const bool any = std::any_of(items.begin(), items.end(),
                                 [&](const std::string& t) { return lexicon::mentions(patient, t); });
    if (!any) fail("The patient has not received the required prior treatment.");
    else reasons.push_back("The required prior treatment was given.");
  }
  if (space.prior_treatment_excluded) {
    for (const auto& t : split_items(*space.prior_treatment_excluded)) {
      if (lexicon::mentions(patient, t)) {
        fail("The patient received an excluded prior treatment (" + t + ").");
        break;
      }
    }
  }
  std::string out;
  for (std::size_t i = 0; i < reasons.size(); ++i) {
    out += "Step " + std::to_string(i + 1) + ": " + reasons[i] + "\n";
  }
  out += ok ? "Yes!" : "No!";
  return out;
}

// Organ ----------------------------------------------------------------------

std::string respond_organ(const Bindings& b) {
  const std::string& t = binding(b, "text");
  const auto profiles = lexicon::find_profiles(t);
  if (profiles.size() > 1) return "Multiple";
  if (profiles.size() == 1) return profiles.front()->organ;
  if (text::contains_ci(t, "solid tumor")) return "Solid tumor";
  return "None";
}

// Sentence tagging -------------------------------------------------------------

std::string respond_tagging(const Bindings& b) {
  static const std::regex kLine(R"(^\s*(\d+)[.:]\s*(.*)$)");
  std::string out;
  for (const auto& line : text::split_lines(binding(b, "sentences"))) {
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    std::vector<std::string> tags;
    for (std::size_t c = 0; c < lexicon::kConcepts.size(); ++c) {
      const auto& kws = lexicon::concept_keywords(c);
      if (std::any_of(kws.begin(), kws.end(), [&](const std::string& k) { return lexicon::mentions(m.str(2), k); })) {
        tags.emplace_back(lexicon::kConcepts[c]);
      }
    }
    out += m.str(1) + ": " + (tags.empty() ? std::string("none") : text::join(tags, ", ")) + "\n";
  }
  return out;
}

// Synthetic documents -----------------------------------------------------------

std::string respond_synth(TemplateId id, const Bindings& b, std::uint64_t seed) {
  const auto p = lexicon::draw_patient_profile(binding(b, "cancer_type"), seed);
  const auto timeline = lexicon::profile_timeline(p);
  const std::string marker =
      p.biomarker ? *p.biomarker + " was detected" : std::string("no actionable alterations were detected");
  switch (id) {
    case TemplateId::kSynthHistory: {
      std::vector<std::string> lines;
      for (const auto& e : timeline) lines.push_back(e.text);
      return text::join(lines, "\n");
    }
    case TemplateId::kSynthNote: {
      std::vector<std::string> lines;
      lines.push_back("Oncology follow-up note.");
      lines.push_back("The patient has stage " + p.stage + " " + p.extent + " " + p.cancer.name + " with " +
                      p.histology + " histology, diagnosed on " + lexicon::us_date(p.diagnosis_date) + ".");
      lines.push_back("On molecular testing, " + marker + ".");
      if (p.local_therapy) lines.push_back("The patient previously underwent " + p.cancer.local_therapy + ".");
      for (std::size_t i = 0; i < p.therapies.size(); ++i) {
        lines.push_back((i + 1 == p.therapies.size() ? "The patient is currently receiving "
                                                      : "The patient was previously treated with ") +
                        p.therapies[i] + ".");
      }
      lines.push_back("The patient reports good energy and is walking daily.");
      lines.push_back("Plan: continue current management and follow up in four weeks.");
      return text::join(lines, "\n");
    }
    case TemplateId::kSynthImaging: {
      const std::string& scan = binding(b, "scan_type");
      std::string findings, impression;
      if (p.extent == "metastatic") {
        findings = "Multiple lesions in the liver and bones are again seen.";
        impression = "Findings are consistent with metastatic " + p.cancer.name + ".";
      } else if (p.extent == "locally advanced") {
        findings = "The primary mass persists with regional lymphadenopathy and no distant spread.";
        impression = "Locally advanced disease without distant spread.";
      } else {
        findings = "Expected postsurgical changes are present.";
        impression = "No evidence of recurrence.";
      }
      return "Exam: " + scan + ".\nIndication: restaging of " + p.cancer.name + ".\nFindings: " + findings +
             "\nImpression: " + impression;
    }
    case TemplateId::kSynthPathology:
      return "Specimen: biopsy of the " + p.cancer.primary_site + ".\nDiagnosis: " + p.histology +
             ", consistent with primary " + p.cancer.name + ".\nAncillary testing: " + marker + ".";
    default:
      break;
  }
  throw InvalidArgument("mock: not a synthetic-document template");
}

}  // namespace

std::string fixture_key(TemplateId id, const Bindings& bindings, std::optional<std::uint64_t> seed) {
  std::string material(to_string(id));
  for (const auto& [k, v] : bindings) {
    material += '\x1f';
    material += k;
    material += '=';
    material += v;
  }
  material += '\x1f';
  material += seed ? std::to_string(*seed) : std::string("-");
  return to_hex(fnv1a64(material));
}

std::string mock_response(TemplateId id, const Bindings& bindings, std::optional<std::uint64_t> seed) {
  switch (id) {
    case TemplateId::kSpaceExtraction:
      return respond_space_extraction(bindings);
    case TemplateId::kPatientSummarization:
      return respond_summarization(bindings);
    case TemplateId::kReasonableConsideration:
      return respond_check(bindings);
    case TemplateId::kOncotreeOrgan:
      return respond_organ(bindings);
    case TemplateId::kSentenceTagging:
      return respond_tagging(bindings);
    case TemplateId::kSynthNote:
    case TemplateId::kSynthImaging:
    case TemplateId::kSynthPathology:
    case TemplateId::kSynthHistory:
      return respond_synth(id, bindings, seed.value_or(0));
  }
  throw InvalidArgument("mock: unknown template");
}

void MockChatProvider::load_fixtures(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("mock fixtures not found: " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      add_fixture(j.at("key").get<std::string>(), j.at("response").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), n);
    }
  }
}

void MockChatProvider::add_fixture(std::string key, std::string response) {
  std::lock_guard lock(mu_);
  fixtures_[std::move(key)] = std::move(response);
}

LlmResponse MockChatProvider::complete(const LlmRequest& request) {
  if (!request.template_id) throw InvalidArgument("mock provider needs template routing");
  LlmResponse r;
  std::optional<std::string> fixed;
  {
    std::lock_guard lock(mu_);
    auto it = fixtures_.find(fixture_key(*request.template_id, request.bindings, request.decoding.seed));
    if (it != fixtures_.end()) fixed = it->second;
  }
  r.text = fixed ? *fixed : mock_response(*request.template_id, request.bindings, request.decoding.seed);
  for (const auto& m : request.messages) r.prompt_tokens += static_cast<int>(text::word_tokens(m.content).size());
  r.completion_tokens = static_cast<int>(text::word_tokens(r.text).size());
  return r;
}

}  // namespace trialmatch::llm
