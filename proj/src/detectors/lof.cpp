#include <algorithm>

#include "kd_index.hpp"
#include "occids/detectors.hpp"

namespace occids::detectors {

namespace {

// Local reachability density when every reachability distance is zero
// (k or more exact duplicates); keeps scores finite.
constexpr double kLrdSentinel = 1e12;

double reach_density(const std::vector<std::pair<double, std::size_t>>& neighbors,
                     const std::vector<double>& k_distance) {
  double sum = 0.0;
  for (const auto& [dist, o] : neighbors) sum += std::max(k_distance[o], dist);
  return sum > 0.0 ? static_cast<double>(neighbors.size()) / sum : kLrdSentinel;
}

}  // namespace

LofModel fit_lof(const DetectorConfig& config, const Matrix& x, std::size_t threads) {
  if (config.k_neighbors < 1) throw FitError("lof needs k_neighbors >= 1");
  if (x.rows() <= config.k_neighbors) {
    throw FitError("lof needs more training rows than k_neighbors (rows=" +
                   std::to_string(x.rows()) + ", k=" + std::to_string(config.k_neighbors) + ")");
  }
  LofModel m;
  m.train = x;
  m.k = config.k_neighbors;
  m.index = std::make_shared<const KdIndex>(m.train);

  const std::size_t n = x.rows();
  m.k_distance.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    m.k_distance[i] = m.index->kth_distance(x.row(i), m.k, i);
  });
  m.lrd.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    m.lrd[i] = reach_density(m.index->within(x.row(i), m.k_distance[i], i), m.k_distance);
  });
  return m;
}

double lof_score(const LofModel& m, std::span<const double> x) {
  const double kd = m.index->kth_distance(x, m.k, std::nullopt);
  const auto neighbors = m.index->within(x, kd, std::nullopt);
  const double own = reach_density(neighbors, m.k_distance);
  double sum = 0.0;
  for (const auto& [dist, o] : neighbors) sum += m.lrd[o];
  const double lof = sum / static_cast<double>(neighbors.size()) / own;
  return -lof;
}

}  // namespace occids::detectors
