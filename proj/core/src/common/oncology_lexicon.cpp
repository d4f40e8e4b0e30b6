#include "trialmatch/common/oncology_lexicon.h"

#include <algorithm>

#include "trialmatch/common/hash.h"
#include "trialmatch/common/rng.h"
#include "trialmatch/common/text.h"

namespace trialmatch::lexicon {

namespace {

bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

}  // namespace

std::size_t find_phrase(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return std::string_view::npos;
  const std::string hay = text::to_lower(text);
  const std::string needle = text::to_lower(phrase);
  std::size_t pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]) || !is_word_char(needle.front());
    const std::size_t end = pos + needle.size();
    const bool right_ok =
        end >= hay.size() || !is_word_char(hay[end]) || !is_word_char(needle.back());
    if (left_ok && right_ok) return pos;
    ++pos;
  }
  return std::string_view::npos;
}

bool mentions(std::string_view text, std::string_view phrase) {
  return find_phrase(text, phrase) != std::string_view::npos;
}

const std::vector<std::string>& concept_keywords(std::size_t concept_index) {
  static const std::array<std::vector<std::string>, 6> kKeywords = {{
      // cancer_type
      {"cancer", "carcinoma", "melanoma", "lymphoma", "leukemia", "myeloma", "sarcoma",
       "malignancy", "neoplasm", "nsclc", "tumor"},
      // histology
      {"adenocarcinoma", "squamous", "ductal", "lobular", "histology", "histologic",
       "differentiated", "gleason", "grade"},
      // stage_at_diagnosis
      {"stage", "staging", "tnm", "t1", "t2", "t3", "t4", "n0", "n1", "n2", "n3", "m0", "m1"},
      // current_extent
      {"metastatic", "metastases", "metastasis", "metastatic disease", "localized",
       "locally advanced", "advanced", "recurrent", "recurrence", "progression", "progressed",
       "distant", "lymphadenopathy", "lesions"},
      // treatment_history
      {"chemotherapy", "radiation", "radiotherapy", "surgery", "resection", "lobectomy",
       "mastectomy", "prostatectomy", "colectomy", "immunotherapy", "started", "cycles",
       "carboplatin", "pemetrexed", "osimertinib", "pembrolizumab", "alectinib", "sotorasib",
       "docetaxel", "paclitaxel", "trastuzumab", "letrozole", "palbociclib", "olaparib",
       "folfox", "folfiri", "bevacizumab", "cetuximab", "encorafenib", "enzalutamide",
       "abiraterone", "nivolumab", "ipilimumab", "dabrafenib", "trametinib", "folfirinox",
       "gemcitabine"},
      // biomarkers
      {"egfr", "alk", "kras", "braf", "her2", "pd-l1", "brca1", "brca2", "pik3ca", "nras",
       "msi-high", "microsatellite", "mismatch repair", "estrogen receptor", "er-positive",
       "mutation", "amplification", "rearrangement", "next-generation sequencing", "biomarker"},
  }};
  return kKeywords.at(concept_index);
}

const std::vector<CancerProfile>& cancer_profiles() {
  static const std::vector<CancerProfile> kProfiles = {
      {"non-small cell lung cancer",
       "Lung",
       {"lung cancer", "nsclc", "lung adenocarcinoma"},
       {"adenocarcinoma", "squamous cell carcinoma"},
       {"EGFR exon 19 deletion", "ALK rearrangement", "KRAS G12C mutation"},
       {"carboplatin and pemetrexed", "osimertinib", "pembrolizumab", "alectinib", "sotorasib",
        "docetaxel"},
       "lobectomy",
       "right upper lobe of the lung"},
      {"breast cancer",
       "Breast",
       {"breast carcinoma"},
       {"invasive ductal carcinoma", "invasive lobular carcinoma"},
       {"HER2 amplification", "ER-positive", "BRCA1 germline mutation", "PIK3CA mutation"},
       {"letrozole and palbociclib", "trastuzumab and pertuzumab", "paclitaxel", "olaparib",
        "capecitabine"},
       "mastectomy",
       "left breast"},
      {"colorectal cancer",
       "Bowel",
       {"colon cancer", "rectal cancer"},
       {"adenocarcinoma"},
       {"KRAS G12D mutation", "BRAF V600E mutation", "MSI-high"},
       {"FOLFOX", "FOLFIRI and bevacizumab", "encorafenib and cetuximab", "pembrolizumab"},
       "colectomy",
       "sigmoid colon"},
      {"prostate cancer",
       "Prostate",
       {"prostate adenocarcinoma"},
       {"acinar adenocarcinoma"},
       {"BRCA2 mutation", "AR-V7"},
       {"leuprolide and enzalutamide", "abiraterone", "docetaxel", "olaparib"},
       "prostatectomy",
       "prostate"},
      {"melanoma",
       "Skin",
       {"cutaneous melanoma"},
       {"superficial spreading melanoma", "nodular melanoma"},
       {"BRAF V600E mutation", "NRAS mutation"},
       {"nivolumab and ipilimumab", "dabrafenib and trametinib", "pembrolizumab"},
       "wide local excision",
       "skin of the back"},
      {"pancreatic cancer",
       "Pancreas",
       {"pancreatic adenocarcinoma"},
       {"ductal adenocarcinoma"},
       {"KRAS G12D mutation", "BRCA2 germline mutation"},
       {"FOLFIRINOX", "gemcitabine and nab-paclitaxel", "olaparib"},
       "pancreaticoduodenectomy",
       "head of the pancreas"},
  };
  return kProfiles;
}

std::vector<const CancerProfile*> find_profiles(std::string_view text) {
  std::vector<const CancerProfile*> out;
  for (const auto& p : cancer_profiles()) {
    bool hit = mentions(text, p.name);
    for (const auto& a : p.aliases) hit = hit || mentions(text, a);
    if (hit) out.push_back(&p);
  }
  return out;
}

const CancerProfile* find_profile(std::string_view text) {
  auto all = find_profiles(text);
  return all.empty() ? nullptr : all.front();
}

std::string biomarker_gene(std::string_view biomarker) {
  auto t = text::trim(biomarker);
  auto sp = t.find(' ');
  return std::string(sp == std::string_view::npos ? t : t.substr(0, sp));
}

}  // namespace trialmatch::lexicon

namespace trialmatch::lexicon {

std::string detect_extent(std::string_view text) {
  for (auto e : kExtents) {
    if (mentions(text, e)) return std::string(e);
  }
  return {};
}

std::string biomarker_key(std::string_view biomarker) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text::trim(biomarker)) {
    if (c == ' ') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  if (words.empty()) return {};
  if (words.size() >= 2 &&
      std::any_of(words[1].begin(), words[1].end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return words[0] + " " + words[1];
  }
  return words[0];
}

PatientProfile draw_patient_profile(std::string_view cancer_type, std::uint64_t seed) {
  std::uint64_t state = fnv1a64(text::to_lower(text::trim(cancer_type))) ^ seed;
  Rng rng(splitmix64(state));
  PatientProfile p;
  if (const auto* known = find_profile(cancer_type)) {
    p.cancer = *known;
  } else {
    p.cancer.name = std::string(text::trim(cancer_type));
    p.cancer.organ = "None";
    p.cancer.histologies = {"carcinoma"};
    p.cancer.therapies = {"platinum-based chemotherapy", "pembrolizumab"};
    p.cancer.local_therapy = "surgical resection";
    p.cancer.primary_site = "primary site";
  }
  p.histology = p.cancer.histologies[rng.uniform_index(p.cancer.histologies.size())];
  const double u = rng.uniform01();
  if (u < 0.55) {
    p.extent = "metastatic";
    p.stage = "IV";
  } else if (u < 0.8) {
    p.extent = "locally advanced";
    p.stage = "III";
  } else {
    p.extent = "localized";
    p.stage = "II";
  }
  if (!p.cancer.biomarkers.empty() && rng.uniform01() < 0.75) {
    p.biomarker = p.cancer.biomarkers[rng.uniform_index(p.cancer.biomarkers.size())];
  }
  std::size_t lines = 0;
  if (p.extent == "metastatic") {
    lines = 1 + rng.uniform_index(3);
    p.local_therapy = rng.uniform01() < 0.3;
  } else if (p.extent == "locally advanced") {
    lines = 1 + rng.uniform_index(2);
    p.local_therapy = true;
  } else {
    lines = rng.uniform_index(2);
    p.local_therapy = true;
  }
  auto pool = p.cancer.therapies;
  rng.shuffle(pool);
  pool.resize(std::min(lines, pool.size()));
  p.therapies = std::move(pool);
  p.diagnosis_date = Date::from_ymd(2016, 1, 1).plus_days(static_cast<std::int64_t>(rng.uniform_index(2200)));
  return p;
}

std::string us_date(Date d) {
  const auto iso = d.iso();  // YYYY-MM-DD
  return iso.substr(5, 2) + "/" + iso.substr(8, 2) + "/" + iso.substr(0, 4);
}

std::vector<TimelineEvent> profile_timeline(const PatientProfile& p) {
  std::vector<TimelineEvent> ev;
  const Date d0 = p.diagnosis_date;
  ev.push_back({d0, "On " + us_date(d0) + ", the patient was diagnosed with stage " + p.stage + " " +
                        p.extent + " " + p.cancer.name + "."});
  const Date biopsy = d0.plus_days(7);
  ev.push_back({biopsy, "A biopsy of the " + p.cancer.primary_site + " on " + us_date(biopsy) +
                            " showed " + p.histology + "."});
  const Date ngs = d0.plus_days(21);
  ev.push_back({ngs, "Next-generation sequencing on " + us_date(ngs) + " revealed " +
                         (p.biomarker ? *p.biomarker : std::string("no actionable alterations")) + "."});
  if (p.local_therapy) {
    const Date local = d0.plus_days(45);
    ev.push_back({local, "On " + us_date(local) + ", the patient underwent " + p.cancer.local_therapy + "."});
  }
  for (std::size_t i = 0; i < p.therapies.size(); ++i) {
    const Date start = d0.plus_days(60 + 150 * static_cast<std::int64_t>(i));
    ev.push_back({start, "On " + us_date(start) + ", the patient started " + p.therapies[i] + "."});
    if (i + 1 < p.therapies.size()) {
      const Date stop = start.plus_days(140);
      ev.push_back({stop, "On " + us_date(stop) + ", restaging scans showed progression and " +
                              p.therapies[i] + " was stopped."});
    }
  }
  return ev;
}

}  // namespace trialmatch::lexicon
