// Exhaustive local outlier factor. Shares no code with the indexed
// implementation; tests compare the two.

#include <algorithm>
#include <cmath>

#include "occids/detectors.hpp"

namespace occids::detectors {

namespace {

struct Neighborhood {
  double k_distance = 0.0;
  std::vector<std::pair<double, std::size_t>> members;  // (distance, row)
};

double distance(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    const double d = a(i, c) - b(j, c);
    s += d * d;
  }
  return std::sqrt(s);
}

// k-distance neighbourhood of row `i` of `from` among the rows of `train`,
// skipping train row `self` (pass train.rows() to skip nothing).
Neighborhood neighborhood(const Matrix& from, std::size_t i, const Matrix& train,
                          std::size_t self, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < train.rows(); ++j) {
    if (j != self) all.emplace_back(distance(from, i, train, j), j);
  }
  std::sort(all.begin(), all.end());
  Neighborhood nb;
  nb.k_distance = all[k - 1].first;
  for (const auto& e : all) {
    if (e.first > nb.k_distance) break;
    nb.members.push_back(e);
  }
  return nb;
}

double lrd_of(const Neighborhood& nb, const std::vector<double>& k_distance) {
  double reach = 0.0;
  for (const auto& [d, o] : nb.members) reach += std::max(k_distance[o], d);
  if (reach == 0.0) return 1e12;
  return static_cast<double>(nb.members.size()) / reach;
}

}  // namespace

ScoreVector lof_brute_oracle(const Matrix& x_train, const Matrix& x_probe, std::size_t k) {
  const std::size_t n = x_train.rows();
  if (k < 1 || n <= k) throw FitError("lof oracle needs 1 <= k < training rows");

  std::vector<Neighborhood> train_nb;
  std::vector<double> k_distance(n);
  for (std::size_t i = 0; i < n; ++i) {
    train_nb.push_back(neighborhood(x_train, i, x_train, i, k));
    k_distance[i] = train_nb.back().k_distance;
  }
  std::vector<double> lrd(n);
  for (std::size_t i = 0; i < n; ++i) lrd[i] = lrd_of(train_nb[i], k_distance);

  ScoreVector out;
  for (std::size_t p = 0; p < x_probe.rows(); ++p) {
    const auto nb = neighborhood(x_probe, p, x_train, n, k);
    double ratio = 0.0;
    for (const auto& [d, o] : nb.members) ratio += lrd[o];
    out.push_back(-(ratio / static_cast<double>(nb.members.size()) / lrd_of(nb, k_distance)));
  }
  return out;
}

}  // namespace occids::detectors
