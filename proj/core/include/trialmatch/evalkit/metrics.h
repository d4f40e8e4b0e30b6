#pragma once

#include <span>
#include <vector>

namespace trialmatch::evalkit {

// One query's returned list, best first: true = relevant.
using Judgments = std::vector<bool>;

// Macro mean over queries with at least one returned result of
// (#relevant / #returned). Throws UndefinedMetric when every list is empty.
double precision_at_k(std::span<const Judgments> queries);

// Sum of P@i over relevant positions i, divided by max(1, #relevant).
double average_precision(const Judgments& query);

// Macro mean of average_precision over non-empty queries. Throws
// UndefinedMetric when every list is empty.
double map_at_k(std::span<const Judgments> queries);

std::size_t count_empty(std::span<const Judgments> queries);

// P(score_pos > score_neg) + 0.5 P(tie) via midranks. Throws
// UndefinedMetric unless both classes are present, InvalidArgument on
// length mismatch.
double auroc(std::span<const double> scores, const std::vector<bool>& labels);

// Area under the precision envelope: thresholds at each distinct score,
// descending; each recall step is weighted by the highest precision
// reached at that recall or beyond.
double auprc(std::span<const double> scores, const std::vector<bool>& labels);

struct CalibrationBin {
  double bin_mid = 0.0;
  double mean_score = 0.0;
  double frac_positive = 0.0;
  std::size_t count = 0;
};

// Equal-width bins over [0, 1]; a score of exactly 1 falls in the last bin.
// Empty bins are omitted. Throws InvalidArgument for no scores or bins == 0.
std::vector<CalibrationBin> calibration_curve(std::span<const double> scores, const std::vector<bool>& labels,
                                              std::size_t bins = 10);

}  // namespace trialmatch::evalkit
