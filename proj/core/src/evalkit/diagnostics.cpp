#include "trialmatch/evalkit/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <numeric>

#include "trialmatch/common/error.h"
#include "trialmatch/common/rng.h"
#include "trialmatch/datamodel/corpus.h"
#include "trialmatch/embedding/embedding.h"

namespace trialmatch::evalkit {

namespace {

double sq_dist(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<Point> pooled(std::span<const Point> x, std::span<const Point> y) {
  if (x.size() < 2 || y.size() < 2) throw InvalidArgument("mmd: each sample needs at least 2 points");
  std::vector<Point> z(x.begin(), x.end());
  z.insert(z.end(), y.begin(), y.end());
  for (const auto& p : z) {
    if (p.size() != z.front().size()) throw InvalidArgument("mmd: points differ in dimension");
  }
  return z;
}

double median_distance(const std::vector<Point>& z) {
  std::vector<double> d;
  d.reserve(z.size() * (z.size() - 1) / 2);
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = i + 1; j < z.size(); ++j) d.push_back(std::sqrt(sq_dist(z[i], z[j])));
  }
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(d.begin(), mid);
  return (lo + hi) / 2.0;
}

// Kernel matrix, row-major n x n.
std::vector<double> kernel_matrix(const std::vector<Point>& z, double bandwidth) {
  const std::size_t n = z.size();
  std::vector<double> k(n * n);
  const double denom = 2.0 * bandwidth * bandwidth;
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::exp(-sq_dist(z[i], z[j]) / denom);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
  }
  return k;
}

double block_sum(const std::vector<double>& k, std::size_t n, std::span<const std::size_t> a,
                 std::span<const std::size_t> b) {
  double s = 0.0;
  for (auto i : a) {
    const double* row = k.data() + i * n;
    for (auto j : b) s += row[j];
  }
  return s;
}

double statistic(const std::vector<double>& k, std::size_t n, std::span<const std::size_t> xi,
                 std::span<const std::size_t> yi) {
  const double nx = static_cast<double>(xi.size()), ny = static_cast<double>(yi.size());
  const double v = block_sum(k, n, xi, xi) / (nx * nx) + block_sum(k, n, yi, yi) / (ny * ny) -
                   2.0 * block_sum(k, n, xi, yi) / (nx * ny);
  return std::max(0.0, v);
}

}  // namespace

double mmd_statistic(std::span<const Point> x, std::span<const Point> y, double bandwidth) {
  const auto z = pooled(x, y);
  if (!(bandwidth > 0.0)) throw InvalidArgument("mmd: bandwidth must be positive");
  const auto k = kernel_matrix(z, bandwidth);
  std::vector<std::size_t> xi(x.size()), yi(y.size());
  std::iota(xi.begin(), xi.end(), 0);
  std::iota(yi.begin(), yi.end(), x.size());
  return statistic(k, z.size(), xi, yi);
}

MmdResult mmd_test(std::span<const Point> x, std::span<const Point> y, std::size_t permutations,
                   std::uint64_t seed) {
  const auto z = pooled(x, y);
  MmdResult r;
  r.bandwidth = median_distance(z);
  if (!(r.bandwidth > 0.0)) return r;
  const auto k = kernel_matrix(z, r.bandwidth);
  const std::size_t n = z.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const std::span<const std::size_t> all(idx);
  r.mmd = statistic(k, n, all.first(x.size()), all.subspan(x.size()));
  Rng rng(seed);
  std::size_t at_least = 0;
  std::vector<std::size_t> perm = idx;
  for (std::size_t p = 0; p < permutations; ++p) {
    rng.shuffle(perm);
    const std::span<const std::size_t> ps(perm);
    if (statistic(k, n, ps.first(x.size()), ps.subspan(x.size())) >= r.mmd) ++at_least;
  }
  r.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + permutations);
  return r;
}

std::vector<std::size_t> knn_outlier_filter(std::span<const std::array<double, 2>> points,
                                            std::span<const std::string> groups, std::size_t k, double z) {
  if (points.size() != groups.size()) throw InvalidArgument("knn_outlier_filter: points and groups differ in length");
  if (k == 0) throw InvalidArgument("knn_outlier_filter: k must be positive");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  std::vector<bool> keep(points.size(), true);
  for (const auto& [label, idx] : members) {
    if (idx.size() <= k) continue;
    std::vector<double> mean_dist(idx.size());
    std::vector<double> d;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      d.clear();
      for (std::size_t b = 0; b < idx.size(); ++b) {
        if (a == b) continue;
        const double dx = points[idx[a]][0] - points[idx[b]][0];
        const double dy = points[idx[a]][1] - points[idx[b]][1];
        d.push_back(std::sqrt(dx * dx + dy * dy));
      }
      const std::size_t kk = std::min(k, d.size());
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
      mean_dist[a] = std::accumulate(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), 0.0) /
                     static_cast<double>(kk);
    }
    const double n = static_cast<double>(mean_dist.size());
    const double mean = std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / n;
    double var = 0.0;
    for (double m : mean_dist) var += (m - mean) * (m - mean);
    const double cutoff = mean + z * std::sqrt(var / n);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (mean_dist[a] > cutoff) keep[idx[a]] = false;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.push_back(i);
  }
  return out;
}

Cohesion cosine_cohesion(std::span<const std::vector<float>> vectors, std::span<const std::string> labels) {
  if (vectors.size() != labels.size()) throw InvalidArgument("cosine_cohesion: vectors and labels differ in length");
  std::map<std::string, std::size_t> sizes;
  for (const auto& l : labels) ++sizes[l];
  const auto big = std::count_if(sizes.begin(), sizes.end(), [](const auto& kv) { return kv.second >= 2; });
  if (sizes.size() < 2 || big < 2) throw UndefinedMetric("cosine_cohesion needs two groups of two or more");
  double within = 0.0, between = 0.0;
  std::size_t nw = 0, nb = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double c = embedding::cosine(vectors[i], vectors[j]);
      if (labels[i] == labels[j]) {
        within += c;
        ++nw;
      } else {
        between += c;
        ++nb;
      }
    }
  }
  return {within / static_cast<double>(nw), between / static_cast<double>(nb)};
}

void write_projection_export(std::span<const ProjectionRecord> records, const std::filesystem::path& file) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j = {{"id", r.id}, {"organ", r.organ}, {"source", r.source}, {"vector", r.vector}};
    out += j.dump() + "\n";
  }
  write_file_atomic(file, out);
}

std::vector<ProjectionRecord> read_projection_coordinates(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw NotFound("projection file not found: " + file.string());
  std::vector<ProjectionRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ProjectionRecord r;
      r.id = j.at("id").get<std::string>();
      r.organ = j.value("organ", "");
      r.source = j.value("source", "");
      r.xy = {j.at("x").get<double>(), j.at("y").get<double>()};
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(file.string() + ": " + e.what(), n);
    }
  }
  return out;
}

}  // namespace trialmatch::evalkit
