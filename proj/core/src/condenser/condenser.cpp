#include "trialmatch/condenser/condenser.h"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <numeric>

#include "trialmatch/common/error.h"
#include "trialmatch/common/oncology_lexicon.h"
#include "trialmatch/common/text.h"
#include "trialmatch/datamodel/corpus.h"

namespace trialmatch::condenser {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

constexpr std::array<std::string_view, 16> kAbbreviations = {
    "dr", "mr", "mrs", "ms", "pt", "pts", "vs", "e.g", "i.e", "approx", "fig", "st", "jr", "sr", "hx", "dx"};

// TNM-style stage token: optional c/p/y/r prefix, T/N/M, digit or x/is,
// optional a-d suffix ("T2a", "pN1", "M0", "Tis").
bool is_stage_token(std::string_view tok) {
  std::size_t i = 0;
  if (tok.size() > 1 && std::string_view("cpyrCPYR").find(tok[0]) != std::string_view::npos &&
      std::string_view("TNMtnm").find(tok[1]) != std::string_view::npos) {
    ++i;
  }
  if (i >= tok.size() || std::string_view("TNM").find(tok[i]) == std::string_view::npos) return false;
  ++i;
  if (i >= tok.size()) return false;
  if (tok.substr(i) == "is") return true;
  if (!(is_digit(tok[i]) || tok[i] == 'x' || tok[i] == 'X')) return false;
  ++i;
  if (i < tok.size() && tok[i] >= 'a' && tok[i] <= 'd') ++i;
  return i == tok.size();
}

// Token immediately preceding position `dot` (exclusive), back to whitespace.
std::string_view token_before(std::string_view text, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(text[b - 1])) --b;
  std::string_view tok = text.substr(b, dot - b);
  while (!tok.empty() && (tok.front() == '(' || tok.front() == '"' || tok.front() == '\'')) {
    tok.remove_prefix(1);
  }
  return tok;
}

bool period_is_boundary(std::string_view text, std::size_t dot) {
  auto tok = token_before(text, dot);
  if (tok.empty()) return true;
  const std::string lower = text::to_lower(tok);
  if (std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end()) {
    return false;
  }
  if (tok.size() == 1 && is_alpha(tok[0]) && tok[0] >= 'A' && tok[0] <= 'Z') return false;
  if (is_stage_token(tok)) return false;
  return true;
}

}  // namespace

std::vector<Sentence> segment(const ClinicalDocument& document, std::size_t doc_index) {
  const std::string_view text = document.text;
  std::vector<Sentence> out;
  std::size_t start = std::string_view::npos;

  auto emit = [&](std::size_t end) {
    if (start == std::string_view::npos) return;
    std::size_t e = end;
    while (e > start && is_space(text[e - 1])) --e;
    if (e > start) {
      Sentence s;
      s.patient_id = document.patient_id;
      s.doc_ref = {doc_index, document.date};
      s.seq = out.size();
      s.char_start = start;
      s.char_end = e;
      s.text = std::string(text.substr(start, e - start));
      out.push_back(std::move(s));
    }
    start = std::string_view::npos;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      emit(i);
      continue;
    }
    if (start == std::string_view::npos) {
      if (is_space(c)) continue;
      start = i;
    }
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == '"' || text[j] == '\'' || text[j] == ')')) ++j;
      const bool at_break = j >= text.size() || is_space(text[j]);
      if (!at_break) continue;
      if (c == '.' && !period_is_boundary(text, i)) continue;
      emit(j);
      i = j - 1;
    }
  }
  emit(text.size());
  return out;
}

std::vector<TagScores> LexiconTagger::score(std::span<const std::string> sentences) {
  std::vector<TagScores> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    TagScores t;
    for (std::size_t c = 0; c < kConceptCount; ++c) {
      for (const auto& kw : lexicon::concept_keywords(c)) {
        if (lexicon::mentions(s, kw)) {
          t.concepts[c] = 1.0;
          break;
        }
      }
      t.any_tag = std::max(t.any_tag, t.concepts[c]);
    }
    out.push_back(t);
  }
  return out;
}

RemoteTagger::RemoteTagger(std::string base_url, std::shared_ptr<http::Transport> transport,
                           std::optional<std::string> bearer_token)
    : base_url_(std::move(base_url)), transport_(std::move(transport)), token_(std::move(bearer_token)) {}

std::vector<TagScores> RemoteTagger::score(std::span<const std::string> sentences) {
  nlohmann::json body = {{"sentences", std::vector<std::string>(sentences.begin(), sentences.end())}};
  http::Headers headers;
  if (token_) headers.emplace_back("Authorization", "Bearer " + *token_);
  auto res = transport_->post(base_url_ + "/v1/tag", body.dump(), "application/json", headers);
  if (res.status != 200) {
    throw TransportError("tagger service returned HTTP " + std::to_string(res.status));
  }
  auto j = nlohmann::json::parse(res.body, nullptr, false);
  if (j.is_discarded() || !j.contains("scores") || !j["scores"].is_array() ||
      j["scores"].size() != sentences.size()) {
    throw ContractViolation("tagger service response is not an order-aligned score array");
  }
  std::vector<TagScores> out;
  for (const auto& row : j["scores"]) {
    if (!row.is_array() || row.size() != kConceptCount + 1) {
      throw ContractViolation("tagger service row must hold 7 scores");
    }
    TagScores t;
    for (std::size_t c = 0; c < kConceptCount; ++c) t.concepts[c] = row[c].get<double>();
    t.any_tag = row[kConceptCount].get<double>();
    out.push_back(t);
  }
  return out;
}

std::vector<TagScores> tag(std::span<const Sentence> sentences, SentenceTagger& tagger,
                           std::size_t batch_size) {
  if (batch_size == 0) throw InvalidArgument("tag: batch_size must be positive");
  std::vector<TagScores> out;
  out.reserve(sentences.size());
  for (std::size_t b = 0; b * batch_size < sentences.size(); ++b) {
    const std::size_t lo = b * batch_size;
    const std::size_t hi = std::min(sentences.size(), lo + batch_size);
    std::vector<std::string> texts;
    for (std::size_t i = lo; i < hi; ++i) texts.push_back(sentences[i].text);
    std::vector<TagScores> scores;
    try {
      scores = tagger.score(texts);
    } catch (const TransportError& e) {
      throw TransportError("tagger batch " + std::to_string(b) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error("tagger batch " + std::to_string(b) + ": " + e.what());
    }
    if (scores.size() != texts.size()) {
      throw ContractViolation("tagger batch " + std::to_string(b) + " returned " +
                              std::to_string(scores.size()) + " scores for " +
                              std::to_string(texts.size()) + " sentences");
    }
    for (const auto& s : scores) {
      auto bad = [](double v) { return !(v >= 0.0 && v <= 1.0); };
      if (bad(s.any_tag) || std::any_of(s.concepts.begin(), s.concepts.end(), bad)) {
        throw ContractViolation("tagger batch " + std::to_string(b) + " returned a score outside [0,1]");
      }
      out.push_back(s);
    }
  }
  return out;
}

double select_threshold(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("select_threshold: length mismatch");
  const auto positives = static_cast<long long>(std::count(labels.begin(), labels.end(), true));
  const auto total = static_cast<long long>(labels.size());
  if (positives == 0 || positives == total) {
    throw InvalidArgument("select_threshold: labels must contain both classes");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  // Sweep thresholds from high to low. At threshold t, predicted positives are
  // all scores >= t. F1 = 2TP / (2TP + FP + FN) compared as exact fractions.
  long long tp = 0, fp = 0;
  long long best_num = -1, best_den = 1;
  double best = scores[order.front()];
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      if (labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    const long long fn = positives - tp;
    const long long num = 2 * tp;
    const long long den = 2 * tp + fp + fn;
    // Descending sweep: ">=" lets a lower threshold win ties.
    if (num * best_den >= best_num * den) {
      best_num = num;
      best_den = den;
      best = t;
    }
  }
  return best;
}

CondensedRecord condense(std::span<const ClinicalDocument> documents, SentenceTagger& tagger,
                         double threshold, Date as_of) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("condense: threshold must lie in [0, 1]");
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (documents[i].date <= as_of) order.push_back(i);
  }
  if (order.empty()) throw EmptyRecordError("condense: no documents on or before " + as_of.iso());
  const std::string& patient_id = documents[order.front()].patient_id;
  for (auto i : order) {
    if (documents[i].patient_id != patient_id) {
      throw InvalidArgument("condense: documents belong to more than one patient");
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return documents[a].date < documents[b].date; });

  std::vector<Sentence> sentences;
  for (auto i : order) {
    auto s = segment(documents[i], i);
    sentences.insert(sentences.end(), std::make_move_iterator(s.begin()),
                     std::make_move_iterator(s.end()));
  }
  const auto scores = tag(sentences, tagger);

  CondensedRecord rec;
  rec.patient_id = patient_id;
  rec.as_of_date = as_of;
  std::vector<std::string> lines;
  std::optional<std::size_t> current_doc;
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    if (scores[k].any_tag < threshold) continue;
    const auto& s = sentences[k];
    if (current_doc != s.doc_ref.index) {
      const auto& doc = documents[s.doc_ref.index];
      lines.push_back("[" + doc.date.iso() + " " + std::string(to_string(doc.doc_type)) + "]");
      current_doc = s.doc_ref.index;
    }
    lines.push_back(s.text);
    rec.retained.push_back(s);
  }
  if (rec.retained.empty()) {
    throw EmptyRecordError("condense: no sentence reached threshold " + std::to_string(threshold));
  }
  rec.text = text::join(lines, "\n");
  return rec;
}

void write_condensed(std::span<const CondensedRecord> records, const std::filesystem::path& file) {
  std::string out;
  for (const auto& r : records) {
    out += nlohmann::ordered_json{{"v", 1}, {"patient_id", r.patient_id}, {"as_of_date", r.as_of_date.iso()},
                                  {"text", r.text}}
               .dump();
    out += '\n';
  }
  write_file_atomic(file, out);
}

std::vector<CondensedRecord> read_condensed(const std::filesystem::path& file) {
  std::vector<CondensedRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(read_file(file))) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CondensedRecord r;
      r.patient_id = j.at("patient_id").get<std::string>();
      r.as_of_date = Date::parse_iso(j.at("as_of_date").get<std::string>());
      r.text = j.at("text").get<std::string>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(file.string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace trialmatch::condenser
