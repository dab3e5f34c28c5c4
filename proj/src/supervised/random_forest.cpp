#include <algorithm>
#include <cmath>
#include <numeric>

#include "occids/supervised.hpp"

namespace occids::supervised {

namespace {

struct Split {
  std::uint32_t feature = 0;
  double value = 0.0;
  double impurity = 0.0;  // weighted child impurity
};

class CartBuilder {
 public:
  CartBuilder(const Matrix& x, const Labels& y, const ForestConfig& config, std::size_t fps, Rng& rng)
      : x_(x), y_(y), config_(config), fps_(fps), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.size());
    tree_.emplace_back();
    std::uint64_t attacks = 0;
    for (auto r : rows) attacks += y_[r];
    tree_[id].attack_count = attacks;
    tree_[id].normal_count = rows.size() - attacks;

    const bool pure = attacks == 0 || attacks == rows.size();
    const bool depth_capped = config_.max_depth > 0 && depth >= config_.max_depth;
    if (pure || depth_capped || rows.size() < 2 * config_.min_leaf) return id;

    const auto split = choose_split(rows);
    if (!split) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto r : rows) (x_(r, split->feature) <= split->value ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    auto& node = tree_[id];
    node.feature = split->feature;
    node.split = split->value;
    node.left = l;
    node.right = r;
    return id;
  }

  // Features are visited in a random order; the best split among the first
  // fps features wins, and further features are tried only while none of
  // the visited ones admits a valid split.
  std::optional<Split> choose_split(const std::vector<std::size_t>& rows) {
    std::vector<std::uint32_t> features(x_.cols());
    std::iota(features.begin(), features.end(), 0U);
    rng_.shuffle(features);

    std::optional<Split> best;
    std::vector<std::pair<double, std::uint8_t>> column(rows.size());
    for (std::size_t visited = 0; visited < features.size(); ++visited) {
      if (visited >= fps_ && best) break;
      const auto f = features[visited];
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_(rows[i], f), y_[rows[i]]};
      std::sort(column.begin(), column.end());

      const std::size_t n = column.size();
      std::uint64_t total_attack = 0;
      for (const auto& c : column) total_attack += c.second;
      std::uint64_t left_attack = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_attack += column[i].second;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (column[i].first == column[i + 1].first) continue;
        if (nl < config_.min_leaf || nr < config_.min_leaf) continue;
        const std::uint64_t lc[2] = {nl - left_attack, left_attack};
        const std::uint64_t rc[2] = {nr - (total_attack - left_attack), total_attack - left_attack};
        const double impurity = (static_cast<double>(nl) * gini_impurity(lc) +
                                 static_cast<double>(nr) * gini_impurity(rc)) /
                                static_cast<double>(n);
        if (!best || impurity < best->impurity) {
          const double a = column[i].first;
          const double b = column[i + 1].first;
          double mid = a + (b - a) / 2.0;
          if (!(mid >= a && mid < b)) mid = a;
          best = Split{f, mid, impurity};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  const Labels& y_;
  const ForestConfig& config_;
  std::size_t fps_;
  Rng& rng_;
  DecisionTree tree_;
};

std::uint8_t leaf_vote(const DecisionTree& tree, std::span<const double> x) {
  std::size_t node = 0;
  while (!tree[node].is_leaf()) {
    const auto& n = tree[node];
    node = static_cast<std::size_t>(x[n.feature] <= n.split ? n.left : n.right);
  }
  return tree[node].attack_count >= tree[node].normal_count ? kAttack : kNormal;
}

}  // namespace

double gini_impurity(std::span<const std::uint64_t> class_counts) {
  std::uint64_t total = 0;
  for (auto c : class_counts) total += c;
  if (total == 0) throw ArgumentError("gini_impurity: all class counts are zero");
  double sum_sq = 0.0;
  for (auto c : class_counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

nlohmann::json ForestConfig::to_json() const {
  return {{"n_trees", n_trees},
          {"max_depth", max_depth},
          {"min_leaf", min_leaf},
          {"features_per_split", features_per_split},
          {"seed", seed}};
}

ForestConfig ForestConfig::from_json(const nlohmann::json& j) {
  ForestConfig c;
  c.n_trees = j.value("n_trees", c.n_trees);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.min_leaf = j.value("min_leaf", c.min_leaf);
  c.features_per_split = j.value("features_per_split", c.features_per_split);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json ForestModel::to_json() const {
  nlohmann::json trees_json = nlohmann::json::array();
  for (const auto& t : trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t) {
      nodes.push_back({n.left, n.right, n.feature, n.split, n.normal_count, n.attack_count});
    }
    trees_json.push_back(nodes);
  }
  return {{"config", config.to_json()}, {"feature_count", feature_count}, {"trees", trees_json}};
}

ForestModel ForestModel::from_json(const nlohmann::json& j) {
  ForestModel m;
  m.config = ForestConfig::from_json(j.at("config"));
  m.feature_count = j.at("feature_count").get<std::size_t>();
  for (const auto& t : j.at("trees")) {
    DecisionTree tree;
    for (const auto& n : t) {
      tree.push_back({n.at(0).get<std::int32_t>(), n.at(1).get<std::int32_t>(),
                      n.at(2).get<std::uint32_t>(), n.at(3).get<double>(),
                      n.at(4).get<std::uint64_t>(), n.at(5).get<std::uint64_t>()});
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

ForestModel rf_fit(const Matrix& x, const Labels& y, const ForestConfig& config, std::size_t threads) {
  if (x.rows() != y.size()) throw ShapeError("rf_fit: feature rows and labels differ in count");
  if (x.rows() < 2) throw FitError("rf_fit needs at least 2 rows");
  if (x.cols() == 0) throw FitError("rf_fit needs at least 1 feature");
  const auto attacks = static_cast<std::size_t>(std::count(y.begin(), y.end(), kAttack));
  if (attacks == 0 || attacks == y.size()) {
    throw FitError("rf_fit needs both classes in the training data");
  }
  if (config.n_trees == 0) throw FitError("rf_fit needs n_trees >= 1");
  if (config.min_leaf == 0) throw FitError("rf_fit needs min_leaf >= 1");

  const std::size_t fps =
      config.features_per_split > 0
          ? std::min(config.features_per_split, x.cols())
          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));

  ForestModel model;
  model.config = config;
  model.feature_count = x.cols();
  model.trees.resize(config.n_trees);
  parallel_for(config.n_trees, threads, [&](std::size_t t) {
    Rng rng(mix_seed(config.seed, t));
    std::vector<std::size_t> rows(x.rows());
    for (auto& r : rows) r = rng.index(x.rows());
    CartBuilder builder(x, y, config, fps, rng);
    model.trees[t] = builder.build(std::move(rows));
  });
  return model;
}

std::vector<std::size_t> rf_attack_votes(const ForestModel& model, const Matrix& x) {
  if (x.rows() > 0 && x.cols() != model.feature_count) {
    throw ShapeError("rf_predict: model expects " + std::to_string(model.feature_count) +
                     " features, got " + std::to_string(x.cols()));
  }
  std::vector<std::size_t> votes(x.rows(), 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (const auto& tree : model.trees) votes[i] += leaf_vote(tree, x.row(i));
  }
  return votes;
}

Labels rf_predict(const ForestModel& model, const Matrix& x) {
  const auto votes = rf_attack_votes(model, x);
  Labels out(votes.size());
  for (std::size_t i = 0; i < votes.size(); ++i) {
    out[i] = 2 * votes[i] >= model.trees.size() ? kAttack : kNormal;
  }
  return out;
}

}  // namespace occids::supervised
