#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace trialmatch::evalkit {

using Point = std::vector<double>;

struct MmdResult {
  double mmd = 0.0;  // biased squared MMD
  double p_value = 1.0;
  double bandwidth = 0.0;
};

// Gaussian kernel exp(-d^2 / (2 s^2)) with s = median pairwise Euclidean
// distance over X and Y pooled. p = (1 + #{permuted >= observed}) /
// (1 + permutations). When s is 0 the samples are indistinguishable and
// the result is mmd 0, p 1. Throws InvalidArgument for fewer than 2 points
// on either side or ragged dimensions.
MmdResult mmd_test(std::span<const Point> x, std::span<const Point> y, std::size_t permutations = 10000,
                   std::uint64_t seed = 0);

// Biased squared MMD at a fixed bandwidth.
double mmd_statistic(std::span<const Point> x, std::span<const Point> y, double bandwidth);

// Per point: mean Euclidean distance to its k nearest same-group
// neighbours. A point is dropped when that mean exceeds the group's mean
// plus z population standard deviations. Groups with k or fewer members are
// kept whole. Returns retained indices in ascending order.
std::vector<std::size_t> knn_outlier_filter(std::span<const std::array<double, 2>> points,
                                            std::span<const std::string> groups, std::size_t k = 5,
                                            double z = 2.0);

struct Cohesion {
  double within = 0.0;
  double between = 0.0;
};

// Mean cosine over unordered same-label pairs and over cross-label pairs.
// Throws UndefinedMetric unless there are at least two labels with at least
// two members each.
Cohesion cosine_cohesion(std::span<const std::vector<float>> vectors, std::span<const std::string> labels);

// Exchange records for an external 2-D projection tool.
struct ProjectionRecord {
  std::string id;
  std::string organ;
  std::string source;          // "patient" or "space"
  std::vector<float> vector;   // export side
  std::array<double, 2> xy{};  // import side
};

// JSONL {"id","organ","source","vector"}.
void write_projection_export(std::span<const ProjectionRecord> records, const std::filesystem::path& file);

// JSONL {"id","organ","source","x","y"}.
std::vector<ProjectionRecord> read_projection_coordinates(const std::filesystem::path& file);

}  // namespace trialmatch::evalkit
