#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "occids/matrix.hpp"

namespace occids::detectors {

/// Exact nearest-neighbour index over the rows of a matrix (k-d tree with
/// bounding boxes). Pruning is slightly conservative so that results are the
/// same as an exhaustive scan.
class KdIndex {
 public:
  explicit KdIndex(const Matrix& points);

  /// Distance to the k-th nearest point, ignoring row `exclude` if given.
  double kth_distance(std::span<const double> q, std::size_t k,
                      std::optional<std::size_t> exclude) const;

  /// All (distance, row) with distance <= radius, sorted by distance then row.
  std::vector<std::pair<double, std::size_t>> within(std::span<const double> q, double radius,
                                                     std::optional<std::size_t> exclude) const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(const Matrix& src, std::size_t begin, std::size_t end);
  double box_distance_sq(std::size_t node, std::span<const double> q) const;

  Matrix points_;  // copy, rows permuted into tree order
  std::size_t dims_;
  std::vector<std::size_t> order_;  // tree position -> original row
  std::vector<Node> nodes_;
  std::vector<double> box_lo_;  // nodes_.size() x dims_
  std::vector<double> box_hi_;
};

double euclidean(std::span<const double> a, std::span<const double> b);

}  // namespace occids::detectors
