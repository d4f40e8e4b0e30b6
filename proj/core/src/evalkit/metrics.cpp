#include "trialmatch/evalkit/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trialmatch/common/error.h"

namespace trialmatch::evalkit {

namespace {

void check_lengths(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
}

std::pair<std::size_t, std::size_t> class_counts(const std::vector<bool>& labels) {
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  return {pos, labels.size() - pos};
}

}  // namespace

double precision_at_k(std::span<const Judgments> queries) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& q : queries) {
    if (q.empty()) continue;
    sum += static_cast<double>(std::count(q.begin(), q.end(), true)) / static_cast<double>(q.size());
    ++n;
  }
  if (n == 0) throw UndefinedMetric("precision: every query returned zero results");
  return sum / static_cast<double>(n);
}

double average_precision(const Judgments& query) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (!query[i]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(std::max<std::size_t>(1, hits));
}

double map_at_k(std::span<const Judgments> queries) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& q : queries) {
    if (q.empty()) continue;
    sum += average_precision(q);
    ++n;
  }
  if (n == 0) throw UndefinedMetric("MAP: every query returned zero results");
  return sum / static_cast<double>(n);
}

std::size_t count_empty(std::span<const Judgments> queries) {
  return static_cast<std::size_t>(
      std::count_if(queries.begin(), queries.end(), [](const Judgments& q) { return q.empty(); }));
}

double auroc(std::span<const double> scores, const std::vector<bool>& labels) {
  check_lengths(scores, labels);
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw UndefinedMetric("AUROC needs both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks (1-based) of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t m = i; m < j; ++m) {
      if (labels[order[m]]) rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

double auprc(std::span<const double> scores, const std::vector<bool>& labels) {
  check_lengths(scores, labels);
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw UndefinedMetric("AUPRC needs both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> recall, precision;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      labels[order[j]] ? ++tp : ++fp;
      ++j;
    }
    recall.push_back(static_cast<double>(tp) / static_cast<double>(pos));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    i = j;
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double area = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    area += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return area;
}

std::vector<CalibrationBin> calibration_curve(std::span<const double> scores, const std::vector<bool>& labels,
                                              std::size_t bins) {
  check_lengths(scores, labels);
  if (scores.empty()) throw InvalidArgument("calibration_curve: no scores");
  if (bins == 0) throw InvalidArgument("calibration_curve: bins must be positive");
  std::vector<double> sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0), positives(bins, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (!(s >= 0.0 && s <= 1.0)) throw InvalidArgument("calibration_curve: score outside [0, 1]");
    const auto b = std::min(bins - 1, static_cast<std::size_t>(std::floor(s * static_cast<double>(bins))));
    sum[b] += s;
    ++count[b];
    if (labels[i]) ++positives[b];
  }
  std::vector<CalibrationBin> out;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double n = static_cast<double>(count[b]);
    out.push_back({(static_cast<double>(b) + 0.5) / static_cast<double>(bins), sum[b] / n,
                   static_cast<double>(positives[b]) / n, count[b]});
  }
  return out;
}

}  // namespace trialmatch::evalkit
