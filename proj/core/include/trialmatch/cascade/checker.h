#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trialmatch/common/http.h"

namespace trialmatch::cascade {

struct CheckPair {
  std::string summary_text;
  std::string space_text;
};

// Pair classifier: probability that a (summary, space) pair would pass the
// reasonable-consideration check. Implementations return one probability
// in [0, 1] per pair, order-aligned, and score each pair independently of
// its batch.
class PairChecker {
 public:
  virtual ~PairChecker() = default;
  virtual std::vector<double> score(std::span<const CheckPair> pairs) = 0;
  double score_one(const CheckPair& pair);
};

// Offline default: share of the space's distinct content tokens (criterion
// field keywords removed) that also occur in the summary. A space with no
// remaining tokens scores 0.
class LexicalChecker final : public PairChecker {
 public:
  std::vector<double> score(std::span<const CheckPair> pairs) override;
};

// 1.0 for pairs whose gold label is true, 0.0 for false. A pair without a
// label throws NotFound unless a fallback probability is given.
class OracleChecker final : public PairChecker {
 public:
  explicit OracleChecker(std::optional<double> fallback = std::nullopt) : fallback_(fallback) {}
  void set_label(const std::string& summary_text, const std::string& space_text, bool label);
  std::vector<double> score(std::span<const CheckPair> pairs) override;

 private:
  std::map<std::pair<std::string, std::string>, bool> labels_;
  std::optional<double> fallback_;
};

class ConstantChecker final : public PairChecker {
 public:
  explicit ConstantChecker(double p) : p_(p) {}
  std::vector<double> score(std::span<const CheckPair> pairs) override {
    return std::vector<double>(pairs.size(), p_);
  }

 private:
  double p_;
};

// Checker scoring service client. POST {base_url}/v1/check
// {"pairs": [{"summary": ..., "space": ...}]} -> {"probabilities": [...]}.
class RemoteChecker final : public PairChecker {
 public:
  RemoteChecker(std::string base_url, std::shared_ptr<http::Transport> transport,
                std::optional<std::string> bearer_token = std::nullopt);
  std::vector<double> score(std::span<const CheckPair> pairs) override;

 private:
  std::string base_url_;
  std::shared_ptr<http::Transport> transport_;
  std::optional<std::string> token_;
};

}  // namespace trialmatch::cascade
