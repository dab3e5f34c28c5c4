#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <doctest.h>

#include "occids/supervised.hpp"

using namespace occids;
using namespace occids::supervised;

namespace {

struct Blobs {
  Matrix x;
  Labels y;
};

Blobs two_blobs(std::uint64_t seed, std::size_t n = 100) {
  Rng rng(seed);
  Blobs b;
  for (std::size_t i = 0; i < n; ++i) {
    const bool attack = i % 2 == 1;
    const double cx = attack ? 0.8 : 0.2;
    b.x.append_row(std::vector<double>{cx + 0.05 * rng.normal(), cx + 0.05 * rng.normal()});
    b.y.push_back(attack ? kAttack : kNormal);
  }
  return b;
}

// Independent traversal of the serialized form: [left, right, feature, split, normal, attack].
std::size_t json_votes(const nlohmann::json& model, std::span<const double> x) {
  std::size_t votes = 0;
  for (const auto& tree : model.at("trees")) {
    std::size_t node = 0;
    while (tree[node][0].get<int>() >= 0) {
      const auto f = tree[node][2].get<std::size_t>();
      node = x[f] <= tree[node][3].get<double>() ? tree[node][0].get<std::size_t>()
                                                  : tree[node][1].get<std::size_t>();
    }
    votes += tree[node][5].get<std::uint64_t>() >= tree[node][4].get<std::uint64_t>() ? 1 : 0;
  }
  return votes;
}

ForestConfig small_forest(std::uint64_t seed, std::size_t trees = 25) {
  ForestConfig c;
  c.n_trees = trees;
  c.seed = seed;
  return c;
}

std::size_t choose(std::size_t n, std::size_t k) {
  // Pascal's triangle.
  std::vector<std::vector<std::size_t>> t(n + 1, std::vector<std::size_t>(n + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) {
    t[i][0] = 1;
    for (std::size_t j = 1; j <= i; ++j) t[i][j] = t[i - 1][j - 1] + t[i - 1][j];
  }
  return t[n][k];
}

// Demo coordinates are raw; squash them into [0, 1] like the pipeline does.
dataset::Dataset scaled_demo(std::uint64_t seed) {
  auto data = dataset::generate_gaussian_demo(seed);
  for (std::size_t c = 0; c < 2; ++c) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t r = 0; r < data.size(); ++r) lo = std::min(lo, data.X(r, c)), hi = std::max(hi, data.X(r, c));
    for (std::size_t r = 0; r < data.size(); ++r) data.X(r, c) = (data.X(r, c) - lo) / (hi - lo);
  }
  return data;
}

}  // namespace

TEST_CASE("gini") {
  const std::uint64_t pure[] = {10, 0};
  const std::uint64_t even[] = {5, 5};
  const std::uint64_t skew[] = {2, 6};
  const std::uint64_t none[] = {0, 0};
  CHECK(gini_impurity(pure) == 0.0);
  CHECK(gini_impurity(even) == doctest::Approx(0.5));
  CHECK(gini_impurity(skew) == doctest::Approx(0.375));
  CHECK_THROWS_AS(gini_impurity(none), ArgumentError);
}

TEST_CASE("separable blobs are learned exactly") {
  const auto b = two_blobs(1);
  const auto model = rf_fit(b.x, b.y, small_forest(3));
  CHECK(rf_predict(model, b.x) == b.y);
  const Matrix centroids{{0.2, 0.2}, {0.8, 0.8}};
  CHECK(rf_predict(model, centroids) == Labels{kNormal, kAttack});
  CHECK(rf_predict(model, Matrix(0, 2)).empty());
  CHECK_THROWS_AS(rf_predict(model, Matrix(1, 3)), ShapeError);
}

TEST_CASE("forest is seeded and thread-count independent") {
  const auto b = two_blobs(2);
  Rng rng(4);
  Matrix probe(50, 2);
  for (std::size_t r = 0; r < 50; ++r) probe(r, 0) = rng.uniform(), probe(r, 1) = rng.uniform();
  const auto a = rf_fit(b.x, b.y, small_forest(9), 1);
  const auto c = rf_fit(b.x, b.y, small_forest(9), 3);
  CHECK(rf_attack_votes(a, probe) == rf_attack_votes(c, probe));
  CHECK(a.to_json() == c.to_json());
}

TEST_CASE("single-class input is rejected") {
  const Matrix x{{0.1}, {0.2}, {0.3}};
  CHECK_THROWS_AS(rf_fit(x, Labels{0, 0, 0}, small_forest(1)), FitError);
  CHECK_THROWS_AS(rf_fit(x, Labels{1, 1, 1}, small_forest(1)), FitError);
}

TEST_CASE("a tied vote goes to attack") {
  ForestModel m;
  m.feature_count = 1;
  DecisionTree normal_leaf{{-1, -1, 0, 0.0, 5, 1}};
  DecisionTree attack_leaf{{-1, -1, 0, 0.0, 1, 5}};
  m.trees = {normal_leaf, attack_leaf};
  CHECK(rf_predict(m, Matrix{{0.5}}) == Labels{kAttack});
}

TEST_CASE("votes agree with a traversal of the serialized trees") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix x(80, 4);
    Labels y(80);
    for (std::size_t r = 0; r < 80; ++r) {
      for (std::size_t c = 0; c < 4; ++c) x(r, c) = rng.uniform();
      y[r] = x(r, 0) + 0.3 * rng.normal() > 0.5 ? kAttack : kNormal;
    }
    const auto model = rf_fit(x, y, small_forest(trial, 20));
    const auto j = nlohmann::json::parse(model.to_json().dump());
    Matrix probe(20, 4);
    for (std::size_t r = 0; r < 20; ++r) {
      for (std::size_t c = 0; c < 4; ++c) probe(r, c) = rng.uniform(-0.2, 1.2);
    }
    const auto votes = rf_attack_votes(model, probe);
    const auto pred = rf_predict(model, probe);
    for (std::size_t r = 0; r < 20; ++r) {
      const auto v = json_votes(j, probe.row(r));
      CHECK(votes[r] == v);
      CHECK(pred[r] == (2 * v >= 20 ? kAttack : kNormal));
    }
    CHECK(rf_predict(ForestModel::from_json(j), probe) == pred);
  }
}

TEST_CASE("tree nodes are internally consistent") {
  const auto b = two_blobs(6, 200);
  const auto model = rf_fit(b.x, b.y, small_forest(7, 10));
  for (const auto& tree : model.trees) {
    // Training rows reaching each node bound the node's bootstrap data.
    std::vector<std::vector<std::size_t>> reach(tree.size());
    for (std::size_t r = 0; r < b.x.rows(); ++r) {
      std::size_t node = 0;
      reach[0].push_back(r);
      while (!tree[node].is_leaf()) {
        node = static_cast<std::size_t>(b.x(r, tree[node].feature) <= tree[node].split ? tree[node].left
                                                                                      : tree[node].right);
        reach[node].push_back(r);
      }
    }
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const auto& n = tree[i];
      if (n.is_leaf()) continue;
      const auto& l = tree[n.left];
      const auto& r = tree[n.right];
      CHECK(l.normal_count + r.normal_count == n.normal_count);
      CHECK(l.attack_count + r.attack_count == n.attack_count);
      double lo = INFINITY, hi = -INFINITY;
      for (auto row : reach[i]) {
        lo = std::min(lo, b.x(row, n.feature));
        hi = std::max(hi, b.x(row, n.feature));
      }
      CHECK(n.split >= lo);
      CHECK(n.split <= hi);
    }
  }
}

TEST_CASE("noise augmentation sizes") {
  dataset::Dataset train;
  for (int i = 0; i < 900; ++i) {
    train.X.append_row(std::vector<double>{0.5, 0.5});
    train.y.push_back(i < 700 ? kNormal : kAttack);
    train.attack_type.push_back(i < 700 ? "" : "a2");
  }
  train.feature_names = {"x1", "x2"};
  const auto aug = augment_with_noise(train, 1);
  CHECK(aug.size() == 1600);
  CHECK(aug.normal_count() == 700);

  const auto normals = dataset::filter_normal(train).select_rows(std::vector<std::size_t>(500, 0));
  const auto balanced = augment_with_noise(normals, 1);
  CHECK(balanced.size() == 1000);
  CHECK(balanced.attack_count() == 500);

  // The block depends only on the seed and the normal count.
  const auto other = augment_with_noise(dataset::filter_normal(train), 1);
  for (std::size_t i = 0; i < 700; ++i) {
    CHECK(other.X(700 + i, 0) == aug.X(900 + i, 0));
    CHECK(other.X(700 + i, 1) == aug.X(900 + i, 1));
  }
}

TEST_CASE("combinations") {
  const std::vector<std::string> tags{"a", "b", "c", "d"};
  CHECK(enumerate_combinations(tags, 2).size() == 6);
  CHECK(enumerate_combinations(tags, 2).front() == std::vector<std::string>{"a", "b"});
  CHECK(enumerate_combinations(tags, 2).back() == std::vector<std::string>{"c", "d"});
  const auto none = enumerate_combinations(tags, 0);
  REQUIRE(none.size() == 1);
  CHECK(none[0].empty());
  CHECK(enumerate_combinations(tags, 4) == std::vector<std::vector<std::string>>{tags});
  CHECK_THROWS_AS(enumerate_combinations(tags, 5), ArgumentError);
  for (std::size_t m = 0; m <= 10; ++m) {
    std::vector<std::string> t;
    for (std::size_t i = 0; i < m; ++i) t.push_back("t" + std::to_string(i));
    for (std::size_t k = 0; k <= m; ++k) {
      const auto combos = enumerate_combinations(t, k);
      CHECK(combos.size() == choose(m, k));
      CHECK(std::set(combos.begin(), combos.end()).size() == combos.size());
    }
  }
}

TEST_CASE("arm names") {
  for (auto a : {Arm::plain, Arm::noise, Arm::occ}) CHECK(arm_from_string(to_string(a)) == a);
  CHECK_THROWS_AS(arm_from_string("x"), ArgumentError);
}

TEST_CASE("omission experiment on the demo") {
  const auto data = scaled_demo(17);
  OmissionPlan plan;
  plan.k_values = {1, 2};
  plan.split = {0.8, 3, 5};
  plan.seed = 5;
  detectors::DetectorConfig occ;
  occ.n_trees = 30;
  occ.seed = 8;
  const auto result = run_omission_experiment(data, plan, small_forest(2, 15), occ, 2);

  // 3 runs x (1 + 2 + 1 combinations) x 3 arms.
  CHECK(result.records.size() == 36);
  CHECK(std::is_sorted(result.records.begin(), result.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.k, a.combination_id, a.run, a.arm) < std::tie(b.k, b.combination_id, b.run, b.arm);
  }));

  std::map<std::size_t, metrics::ConfusionCounts> occ_by_run;
  std::map<std::size_t, std::uint64_t> test_attacks;
  for (const auto& r : result.records) {
    // The test fold never changes with the omitted combination.
    const auto attacks = r.counts.tp + r.counts.fn;
    if (!test_attacks.contains(r.run)) test_attacks[r.run] = attacks;
    CHECK(test_attacks[r.run] == attacks);
    if (r.arm == Arm::occ) {
      if (!occ_by_run.contains(r.run)) occ_by_run[r.run] = r.counts;
      CHECK(occ_by_run[r.run] == r.counts);
    }
    CHECK(r.omitted_recall.has_value() == (r.k > 0));
  }

  // Aggregates are means of per-combination run means.
  for (const auto& agg : result.aggregates) {
    std::map<std::size_t, std::vector<double>> per_combo;
    for (const auto& r : result.records) {
      if (r.arm == agg.arm && r.k == agg.k) per_combo[r.combination_id].push_back(r.attack.accuracy);
    }
    double sum = 0;
    for (const auto& [id, v] : per_combo) {
      double s = 0;
      for (double x : v) s += x;
      sum += s / static_cast<double>(v.size());
    }
    CHECK(std::fabs(agg.accuracy.mean - sum / static_cast<double>(per_combo.size())) <= 1e-12);
    CHECK(agg.combinations_evaluated == per_combo.size());
  }
  CHECK(aggregate_omission(result.records, {{0, 1}, {1, 2}, {2, 1}}).size() == result.aggregates.size());
}

TEST_CASE("attack recall does not grow as more types are omitted") {
  std::size_t inversions = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    OmissionPlan plan;
    plan.k_values = {1, 2};
    plan.with_noise = false;
    plan.split = {0.8, 1, seed};
    plan.seed = seed;
    const auto result = run_omission_experiment(scaled_demo(seed), plan, small_forest(seed, 15));
    std::vector<double> recall;
    for (const auto& agg : result.aggregates) recall.push_back(agg.attack_recall.mean);
    REQUIRE(recall.size() == 3);
    for (std::size_t k = 0; k + 1 < recall.size(); ++k) {
      if (recall[k + 1] > recall[k]) {
        ++inversions;
        worst = std::max(worst, recall[k + 1] - recall[k]);
      }
    }
  }
  CHECK(inversions <= 1);
  CHECK(worst <= 2.0);
}

TEST_CASE("omission validates its plan") {
  const auto data = dataset::generate_gaussian_demo(1);
  OmissionPlan plan;
  plan.split = {0.8, 1, 1};
  plan.k_values = {3};
  CHECK_THROWS_AS(run_omission_experiment(data, plan, small_forest(1, 3)), ArgumentError);
  plan.k_values = {1};
  plan.attack_types = {"a1", "zz"};
  CHECK_THROWS_AS(run_omission_experiment(data, plan, small_forest(1, 3)), ArgumentError);
}

TEST_CASE("combination cap samples a fixed subset") {
  // Six attack types, one row pair each, so C(6,3) = 20 exceeds a cap of 5.
  dataset::Dataset d;
  d.feature_names = {"x"};
  Rng rng(2);
  for (int i = 0; i < 60; ++i) {
    d.X.append_row(std::vector<double>{rng.uniform()});
    d.y.push_back(kNormal);
    d.attack_type.push_back("");
  }
  for (int t = 0; t < 6; ++t) {
    for (int i = 0; i < 5; ++i) {
      d.X.append_row(std::vector<double>{rng.uniform()});
      d.y.push_back(kAttack);
      d.attack_type.push_back("t" + std::to_string(t));
    }
  }
  OmissionPlan plan;
  plan.k_values = {3};
  plan.split = {0.8, 1, 3};
  plan.combination_cap = 5;
  plan.with_noise = false;
  plan.seed = 4;
  const auto a = run_omission_experiment(d, plan, small_forest(1, 3));
  const auto b = run_omission_experiment(d, plan, small_forest(1, 3), std::nullopt, 3);
  const auto& agg = a.aggregates.back();
  CHECK(agg.k == 3);
  CHECK(agg.combinations_total == 20);
  CHECK(agg.combinations_evaluated == 5);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].combination == b.records[i].combination);
    CHECK(a.records[i].counts == b.records[i].counts);
  }
}
