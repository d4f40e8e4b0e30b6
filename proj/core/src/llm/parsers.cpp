#include "trialmatch/llm/parsers.h"

#include <algorithm>
#include <array>
#include <regex>
#include <set>

#include "trialmatch/common/oncology_lexicon.h"
#include "trialmatch/common/text.h"

namespace trialmatch::llm {

namespace {

using SpaceField = std::optional<std::string> TrialSpace::*;

struct KnownKey {
  std::string_view key;
  SpaceField field;
};

const std::array<KnownKey, 14> kKnownKeys = {{
    {"cancer type allowed", &TrialSpace::cancer_type_allowed},
    {"cancer types allowed", &TrialSpace::cancer_type_allowed},
    {"histology allowed", &TrialSpace::histology_allowed},
    {"histologies allowed", &TrialSpace::histology_allowed},
    {"cancer burden allowed", &TrialSpace::cancer_burden_allowed},
    {"prior treatment required", &TrialSpace::prior_treatment_required},
    {"prior treatments required", &TrialSpace::prior_treatment_required},
    {"prior treatment excluded", &TrialSpace::prior_treatment_excluded},
    {"prior treatments excluded", &TrialSpace::prior_treatment_excluded},
    {"biomarkers required", &TrialSpace::biomarkers_required},
    {"biomarker required", &TrialSpace::biomarkers_required},
    {"biomarkers excluded", &TrialSpace::biomarkers_excluded},
    {"biomarker excluded", &TrialSpace::biomarkers_excluded},
    {"histology required", &TrialSpace::histology_allowed},
}};

bool is_key_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == ' ' || c == '/' || c == '-';
}

struct KeyHit {
  std::size_t key_start;   // first char of the key phrase
  std::size_t value_start; // first char after the colon
  std::string key;         // normalized lowercase key
};

const KnownKey* lookup_key(std::string_view normalized) {
  for (const auto& k : kKnownKeys) {
    if (k.key == normalized) return &k;
  }
  return nullptr;
}

// Start of the `words`-th word before `pos`.
std::size_t back_words(const std::string& s, std::size_t pos, std::size_t words) {
  std::size_t p = pos;
  for (std::size_t w = 0; w < words; ++w) {
    while (p > 0 && s[p - 1] == ' ') --p;
    while (p > 0 && s[p - 1] != ' ' && is_key_char(s[p - 1])) --p;
  }
  return p;
}

std::vector<KeyHit> find_keys(std::string_view item) {
  static const std::regex kSuffix(R"((allowed|required|excluded)\s*:)", std::regex::icase);
  std::vector<KeyHit> hits;
  const std::string s(item);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kSuffix); it != std::sregex_iterator(); ++it) {
    const auto suffix_pos = static_cast<std::size_t>(it->position(0));
    const auto value_start = suffix_pos + static_cast<std::size_t>(it->length(0));
    std::size_t b = suffix_pos;
    while (b > 0 && is_key_char(s[b - 1])) --b;
    const std::string phrase =
        text::normalize_whitespace_lower(s.substr(b, suffix_pos - b) + it->str(1));
    std::size_t key_start = b;
    while (key_start < suffix_pos && s[key_start] == ' ') ++key_start;
    std::string key = phrase;
    // "metastatic Prior treatment required:" (missing period): peel a known
    // key off the end so the prefix stays with the previous value.
    if (!lookup_key(phrase)) {
      for (const auto& k : kKnownKeys) {
        const auto n = k.key.size();
        if (phrase.size() > n && phrase.compare(phrase.size() - n, n, k.key) == 0 &&
            phrase[phrase.size() - n - 1] == ' ') {
          key = std::string(k.key);
          const auto words = static_cast<std::size_t>(std::count(k.key.begin(), k.key.end(), ' '));
          key_start = back_words(s, suffix_pos, words);
          break;
        }
      }
    }
    hits.push_back({key_start, value_start, key});
  }
  return hits;
}

std::string clean_value(std::string_view v) {
  auto t = text::trim(v);
  while (!t.empty() && (t.back() == ',' || t.back() == ';')) t = text::trim(t.substr(0, t.size() - 1));
  if (!t.empty() && t.back() == '.') t = text::trim(t.substr(0, t.size() - 1));
  return std::string(t);
}

constexpr std::array<std::pair<Organ, std::string_view>, 34> kOrganNames{{
    {Organ::kAdrenalGland, "Adrenal Gland"},
    {Organ::kAmpullaOfVater, "Ampulla of Vater"},
    {Organ::kBiliaryTract, "Biliary Tract"},
    {Organ::kBladderUrinaryTract, "Bladder/Urinary Tract"},
    {Organ::kBone, "Bone"},
    {Organ::kBowel, "Bowel"},
    {Organ::kBreast, "Breast"},
    {Organ::kCervix, "Cervix"},
    {Organ::kCnsBrain, "CNS/Brain"},
    {Organ::kEsophagusStomach, "Esophagus/Stomach"},
    {Organ::kEye, "Eye"},
    {Organ::kHeadAndNeck, "Head and Neck"},
    {Organ::kKidney, "Kidney"},
    {Organ::kLiver, "Liver"},
    {Organ::kLung, "Lung"},
    {Organ::kLymphoid, "Lymphoid"},
    {Organ::kMyeloid, "Myeloid"},
    {Organ::kOvaryFallopianTube, "Ovary/Fallopian Tube"},
    {Organ::kPancreas, "Pancreas"},
    {Organ::kPenis, "Penis"},
    {Organ::kPeripheralNervousSystem, "Peripheral Nervous System"},
    {Organ::kPeritoneum, "Peritoneum"},
    {Organ::kPleura, "Pleura"},
    {Organ::kProstate, "Prostate"},
    {Organ::kSkin, "Skin"},
    {Organ::kSoftTissue, "Soft Tissue"},
    {Organ::kTestis, "Testis"},
    {Organ::kThymus, "Thymus"},
    {Organ::kThyroid, "Thyroid"},
    {Organ::kUterus, "Uterus"},
    {Organ::kVulvaVagina, "Vulva/Vagina"},
    {Organ::kSolidTumor, "Solid tumor"},
    {Organ::kMultiple, "Multiple"},
    {Organ::kNone, "None"},
}};

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

}  // namespace

void parse_space_fields(std::string_view item_text, TrialSpace& space) {
  const auto hits = find_keys(item_text);
  std::vector<SpaceField> assigned;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const std::size_t end = i + 1 < hits.size() ? hits[i + 1].key_start : item_text.size();
    const KnownKey* known = lookup_key(hits[i].key);
    if (!known || std::find(assigned.begin(), assigned.end(), known->field) != assigned.end()) continue;
    const std::size_t begin = std::min(hits[i].value_start, end);
    auto value = clean_value(item_text.substr(begin, end - begin));
    if (value.empty()) continue;
    space.*(known->field) = std::move(value);
    assigned.push_back(known->field);
  }
}

std::vector<TrialSpace> parse_space_list(std::string_view response, std::string_view nct_id) {
  static const std::regex kItem(R"(^\s*(\d+)[.)]\s+(.*)$)");
  std::vector<std::string> items;
  bool in_item = false;
  for (const auto& raw_line : text::split_lines(text::canonicalize_newlines(response))) {
    std::smatch m;
    if (std::regex_match(raw_line, m, kItem)) {
      items.emplace_back(text::trim(m.str(2)));
      in_item = true;
      continue;
    }
    auto line = text::trim(raw_line);
    if (line.empty()) {
      continue;
    }
    if (in_item) {
      auto& cur = items.back();
      if (!cur.empty()) cur.push_back(' ');
      cur.append(line);
    }
  }
  std::vector<TrialSpace> spaces;
  std::set<std::string> seen;
  for (auto& item : items) {
    if (item.empty()) continue;
    if (!seen.insert(text::normalize_whitespace_lower(item)).second) continue;
    TrialSpace s;
    s.nct_id = std::string(nct_id);
    s.ordinal = static_cast<int>(spaces.size()) + 1;
    s.space_id = make_space_id(nct_id, s.ordinal);
    s.raw_text = item;
    parse_space_fields(item, s);
    spaces.push_back(std::move(s));
  }
  return spaces;
}

std::optional<bool> parse_decision(std::string_view response) {
  const std::string lower = text::to_lower(response);
  std::optional<bool> result;
  std::size_t best = 0;
  for (auto [token, value] : {std::pair{std::string_view("yes!"), true},
                              std::pair{std::string_view("no!"), false}}) {
    std::size_t pos = 0;
    while ((pos = lower.find(token, pos)) != std::string::npos) {
      if ((pos == 0 || !is_letter(lower[pos - 1])) && (!result || pos >= best)) {
        best = pos;
        result = value;
      }
      ++pos;
    }
  }
  return result;
}

std::string_view to_string(Organ organ) {
  for (const auto& [o, name] : kOrganNames) {
    if (o == organ) return name;
  }
  return "None";
}

const std::vector<Organ>& organ_vocabulary() {
  static const std::vector<Organ> kAll = [] {
    std::vector<Organ> v;
    for (const auto& [o, name] : kOrganNames) v.push_back(o);
    return v;
  }();
  return kAll;
}

std::optional<Organ> parse_organ(std::string_view response) {
  auto t = text::trim(response);
  auto is_quote = [](char c) { return c == '"' || c == '\'' || c == '`'; };
  while (t.size() >= 2 && is_quote(t.front()) && is_quote(t.back())) {
    t = text::trim(t.substr(1, t.size() - 2));
  }
  for (const auto& [o, name] : kOrganNames) {
    if (name == t) return o;
  }
  return std::nullopt;
}

std::vector<std::optional<std::vector<std::string>>> parse_sentence_tags(std::string_view response,
                                                                          std::size_t n_sentences) {
  static const std::regex kLine(R"(^\s*(\d+)\s*[:.)]\s*(.*)$)");
  std::vector<std::optional<std::vector<std::string>>> out(n_sentences);
  for (const auto& line : text::split_lines(text::canonicalize_newlines(response))) {
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    const auto idx = std::stoul(m.str(1));
    if (idx < 1 || idx > n_sentences || out[idx - 1]) continue;
    std::vector<std::string> concepts;
    bool ok = true;
    const std::string body = text::to_lower(text::trim(m.str(2)));
    if (body != "none") {
      std::size_t start = 0;
      while (start <= body.size()) {
        auto comma = body.find(',', start);
        if (comma == std::string::npos) comma = body.size();
        auto c = std::string(text::trim(std::string_view(body).substr(start, comma - start)));
        if (!c.empty()) {
          if (std::find(lexicon::kConcepts.begin(), lexicon::kConcepts.end(), c) ==
              lexicon::kConcepts.end()) {
            ok = false;
          }
          concepts.push_back(c);
        }
        start = comma + 1;
      }
    }
    if (ok) out[idx - 1] = std::move(concepts);
  }
  return out;
}

}  // namespace trialmatch::llm
