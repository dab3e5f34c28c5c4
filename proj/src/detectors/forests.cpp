// Isolation forest and the split-at-datum stochastic forest.
//
// Both grow height-limited random trees on seeded subsamples and score a
// probe by the depth at which it settles plus c(leaf mass). They differ in
// how a split is drawn:
//   isolation forest   split uniform in [min, max] of the node on a random dim
//   stochastic forest  split at the coordinate of a random datum in the node,
//                      and a probe outside the node's [min, max] on the split
//                      dim stops there (it has reached an empty region).
// The stochastic forest only ever compares probe coordinates against training
// coordinates, so its scores are unchanged by strictly increasing per-feature
// transforms.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "occids/detectors.hpp"

namespace occids::detectors {

namespace {

constexpr double kEulerGamma = 0.5772156649;

std::size_t height_limit_for(std::size_t subsample) {
  std::size_t h = 0;
  while ((std::size_t{1} << h) < subsample) ++h;
  return h;  // ceil(log2(subsample)); 0 for subsample <= 1
}

std::vector<std::size_t> draw_subsample(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

enum class SplitRule { uniform_in_range, at_datum };

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::size_t height_limit, SplitRule rule, Rng& rng)
      : x_(x), limit_(height_limit), rule_(rule), rng_(rng) {}

  Tree build(std::vector<std::size_t> members) {
    tree_.clear();
    grow(std::move(members), 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t> members, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.size());
    tree_.emplace_back();
    tree_[id].mass = static_cast<std::uint32_t>(members.size());
    if (members.size() <= 1 || depth >= limit_) return id;

    const auto dim = static_cast<std::uint32_t>(rng_.index(x_.cols()));
    double lo = x_(members.front(), dim);
    double hi = lo;
    for (auto m : members) {
      lo = std::min(lo, x_(m, dim));
      hi = std::max(hi, x_(m, dim));
    }
    const double split = rule_ == SplitRule::uniform_in_range
                             ? lo + (hi - lo) * rng_.uniform()
                             : x_(members[rng_.index(members.size())], dim);

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto m : members) (x_(m, dim) < split ? left : right).push_back(m);
    members.clear();
    members.shrink_to_fit();

    const auto l = grow(std::move(left), depth + 1);
    const auto r = grow(std::move(right), depth + 1);
    auto& node = tree_[id];
    node.dim = dim;
    node.split = split;
    node.lo = lo;
    node.hi = hi;
    node.left = l;
    node.right = r;
    return id;
  }

  const Matrix& x_;
  std::size_t limit_;
  SplitRule rule_;
  Rng& rng_;
  Tree tree_;
};

template <typename ModelT>
ModelT grow_forest(const DetectorConfig& config, const Matrix& x, SplitRule rule,
                   std::size_t threads) {
  if (config.n_trees == 0) throw FitError("forest needs n_trees >= 1");
  if (config.subsample < 2) throw FitError("forest needs subsample >= 2");
  if (x.rows() < 2) {
    throw FitError(to_string(config.variant) + " needs at least 2 training rows, got " +
                   std::to_string(x.rows()));
  }
  ModelT model;
  model.subsample = std::min(config.subsample, x.rows());
  model.height_limit = height_limit_for(model.subsample);
  model.trees.resize(config.n_trees);
  parallel_for(config.n_trees, threads, [&](std::size_t t) {
    Rng rng(mix_seed(config.seed, t));
    auto members = draw_subsample(x.rows(), model.subsample, rng);
    TreeBuilder builder(x, model.height_limit, rule, rng);
    model.trees[t] = builder.build(std::move(members));
  });
  return model;
}

}  // namespace

double isolation_path_adjustment(std::size_t n) {
  if (n <= 1) return 0.0;
  const double nd = static_cast<double>(n);
  const double harmonic = std::log(nd - 1.0) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * (nd - 1.0) / nd;
}

IsolationForestModel fit_isolation_forest(const DetectorConfig& config, const Matrix& x,
                                          std::size_t threads) {
  return grow_forest<IsolationForestModel>(config, x, SplitRule::uniform_in_range, threads);
}

StochasticForestModel fit_stochastic_forest(const DetectorConfig& config, const Matrix& x,
                                            std::size_t threads) {
  return grow_forest<StochasticForestModel>(config, x, SplitRule::at_datum, threads);
}

double isolation_path_length(const IsolationForestModel& m, std::span<const double> x) {
  double total = 0.0;
  for (const auto& tree : m.trees) {
    std::size_t node = 0;
    std::size_t depth = 0;
    while (!tree[node].is_leaf()) {
      const auto& n = tree[node];
      node = static_cast<std::size_t>(x[n.dim] < n.split ? n.left : n.right);
      ++depth;
    }
    total += static_cast<double>(depth) + isolation_path_adjustment(tree[node].mass);
  }
  return total / static_cast<double>(m.trees.size());
}

double stochastic_path_length(const StochasticForestModel& m, std::span<const double> x) {
  double total = 0.0;
  for (const auto& tree : m.trees) {
    std::size_t node = 0;
    std::size_t depth = 0;
    double adjust = 0.0;
    for (;;) {
      const auto& n = tree[node];
      if (n.is_leaf()) {
        adjust = isolation_path_adjustment(n.mass);
        break;
      }
      const double v = x[n.dim];
      if (v < n.lo || v > n.hi) break;  // empty region, mass 0
      node = static_cast<std::size_t>(v < n.split ? n.left : n.right);
      ++depth;
    }
    total += static_cast<double>(depth) + adjust;
  }
  return total / static_cast<double>(m.trees.size());
}

}  // namespace occids::detectors
