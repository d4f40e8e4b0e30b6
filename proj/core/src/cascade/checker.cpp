#include "trialmatch/cascade/checker.h"

#include <algorithm>
#include <json.hpp>
#include <set>

#include "trialmatch/common/error.h"
#include "trialmatch/common/text.h"

namespace trialmatch::cascade {

namespace {

// Words of the criterion keys themselves; they say nothing about a patient.
const std::set<std::string> kFieldWords = {"allowed", "biomarker", "biomarkers", "burden",   "cancer",
                                           "excluded", "histology", "prior",     "required", "treatment",
                                           "treatments", "type"};

void check_range(const std::vector<double>& probs, std::size_t expected) {
  if (probs.size() != expected) throw ContractViolation("checker returned a misaligned probability array");
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("checker probability outside [0, 1]");
  }
}

}  // namespace

double PairChecker::score_one(const CheckPair& pair) {
  return score(std::span<const CheckPair>(&pair, 1)).at(0);
}

std::vector<double> LexicalChecker::score(std::span<const CheckPair> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    std::set<std::string> space_tokens;
    for (auto& t : text::content_tokens(p.space_text)) {
      if (!kFieldWords.count(t)) space_tokens.insert(std::move(t));
    }
    if (space_tokens.empty()) {
      out.push_back(0.0);
      continue;
    }
    const auto summary_vec = text::content_tokens(p.summary_text);
    const std::set<std::string> summary_tokens(summary_vec.begin(), summary_vec.end());
    std::size_t shared = 0;
    for (const auto& t : space_tokens) shared += summary_tokens.count(t);
    out.push_back(static_cast<double>(shared) / static_cast<double>(space_tokens.size()));
  }
  return out;
}

void OracleChecker::set_label(const std::string& summary_text, const std::string& space_text, bool label) {
  labels_[{summary_text, space_text}] = label;
}

std::vector<double> OracleChecker::score(std::span<const CheckPair> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto it = labels_.find({p.summary_text, p.space_text});
    if (it != labels_.end()) {
      out.push_back(it->second ? 1.0 : 0.0);
    } else if (fallback_) {
      out.push_back(*fallback_);
    } else {
      throw NotFound("oracle checker: no gold label for pair");
    }
  }
  return out;
}

RemoteChecker::RemoteChecker(std::string base_url, std::shared_ptr<http::Transport> transport,
                             std::optional<std::string> bearer_token)
    : base_url_(std::move(base_url)), transport_(std::move(transport)), token_(std::move(bearer_token)) {}

std::vector<double> RemoteChecker::score(std::span<const CheckPair> pairs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : pairs) arr.push_back({{"summary", p.summary_text}, {"space", p.space_text}});
  http::Headers headers;
  if (token_) headers.emplace_back("Authorization", "Bearer " + *token_);
  auto res = transport_->post(base_url_ + "/v1/check", nlohmann::json{{"pairs", arr}}.dump(), "application/json",
                              headers);
  if (res.status != 200) throw TransportError("checker service returned HTTP " + std::to_string(res.status));
  auto j = nlohmann::json::parse(res.body, nullptr, false);
  if (j.is_discarded() || !j.contains("probabilities") || !j["probabilities"].is_array()) {
    throw ContractViolation("checker service response lacks a probabilities array");
  }
  auto probs = j["probabilities"].get<std::vector<double>>();
  check_range(probs, pairs.size());
  return probs;
}

}  // namespace trialmatch::cascade
