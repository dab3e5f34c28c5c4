#include "kd_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace occids::detectors {

namespace {

constexpr std::size_t kLeafSize = 16;
// Relative slack on pruning bounds: a node is skipped only when its box is
// clearly farther than the current radius, so rounding in the box bound can
// never drop a point an exhaustive scan would keep.
constexpr double kPruneSlack = 1e-9;

}  // namespace

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

KdIndex::KdIndex(const Matrix& points) : dims_(points.cols()), order_(points.rows()) {
  std::iota(order_.begin(), order_.end(), 0);
  if (points.rows() > 0) build(points, 0, points.rows());
  points_ = points.select_rows(order_);
}

std::int32_t KdIndex::build(const Matrix& src, std::size_t begin, std::size_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1});
  box_lo_.resize(nodes_.size() * dims_);
  box_hi_.resize(nodes_.size() * dims_);

  double* lo = box_lo_.data() + static_cast<std::size_t>(id) * dims_;
  double* hi = box_hi_.data() + static_cast<std::size_t>(id) * dims_;
  for (std::size_t d = 0; d < dims_; ++d) {
    lo[d] = hi[d] = src(order_[begin], d);
  }
  for (std::size_t i = begin + 1; i < end; ++i) {
    const auto r = src.row(order_[i]);
    for (std::size_t d = 0; d < dims_; ++d) {
      lo[d] = std::min(lo[d], r[d]);
      hi[d] = std::max(hi[d], r[d]);
    }
  }
  if (end - begin <= kLeafSize) return id;

  std::size_t widest = 0;
  for (std::size_t d = 1; d < dims_; ++d) {
    if (hi[d] - lo[d] > hi[widest] - lo[widest]) widest = d;
  }
  if (hi[widest] <= lo[widest]) return id;  // all points identical

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     const double va = src(a, widest);
                     const double vb = src(b, widest);
                     return va < vb || (va == vb && a < b);
                   });
  const auto l = build(src, begin, mid);
  const auto r = build(src, mid, end);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

double KdIndex::box_distance_sq(std::size_t node, std::span<const double> q) const {
  const double* lo = box_lo_.data() + node * dims_;
  const double* hi = box_hi_.data() + node * dims_;
  double s = 0.0;
  for (std::size_t d = 0; d < dims_; ++d) {
    double gap = 0.0;
    if (q[d] < lo[d]) gap = lo[d] - q[d];
    else if (q[d] > hi[d]) gap = q[d] - hi[d];
    s += gap * gap;
  }
  return s;
}

double KdIndex::kth_distance(std::span<const double> q, std::size_t k,
                             std::optional<std::size_t> exclude) const {
  std::priority_queue<double> best;  // max-heap of the k smallest distances
  auto bound_sq = [&] {
    if (best.size() < k) return std::numeric_limits<double>::infinity();
    return best.top() * best.top() * (1.0 + kPruneSlack);
  };

  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    if (box_distance_sq(id, q) > bound_sq()) continue;
    const auto& n = nodes_[id];
    if (n.left < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        if (exclude && order_[i] == *exclude) continue;
        const double dist = euclidean(q, points_.row(i));
        if (best.size() < k) {
          best.push(dist);
        } else if (dist < best.top()) {
          best.pop();
          best.push(dist);
        }
      }
      continue;
    }
    // Visit the nearer child first.
    const auto l = static_cast<std::size_t>(n.left);
    const auto r = static_cast<std::size_t>(n.right);
    if (box_distance_sq(l, q) <= box_distance_sq(r, q)) {
      stack.push_back(r);
      stack.push_back(l);
    } else {
      stack.push_back(l);
      stack.push_back(r);
    }
  }
  return best.top();
}

std::vector<std::pair<double, std::size_t>> KdIndex::within(
    std::span<const double> q, double radius, std::optional<std::size_t> exclude) const {
  std::vector<std::pair<double, std::size_t>> out;
  const double bound = radius * radius * (1.0 + kPruneSlack);
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    if (box_distance_sq(id, q) > bound) continue;
    const auto& n = nodes_[id];
    if (n.left < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        if (exclude && order_[i] == *exclude) continue;
        const double dist = euclidean(q, points_.row(i));
        if (dist <= radius) out.emplace_back(dist, order_[i]);
      }
    } else {
      stack.push_back(static_cast<std::size_t>(n.left));
      stack.push_back(static_cast<std::size_t>(n.right));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace occids::detectors
