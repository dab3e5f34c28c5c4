#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <doctest.h>

#include "occids/detectors.hpp"

using namespace occids;
using namespace occids::detectors;

namespace {

const Variant kAll[] = {Variant::isolation_forest, Variant::stochastic_forest, Variant::lof,
                        Variant::linear_recon};

DetectorConfig config_for(Variant v, std::uint64_t seed = 1) {
  DetectorConfig c;
  c.variant = v;
  c.seed = seed;
  c.k_neighbors = 10;
  return c;
}

Matrix random_matrix(Rng& rng, std::size_t n, std::size_t d) {
  Matrix m(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) m(r, c) = rng.uniform();
  }
  return m;
}

std::vector<std::size_t> ranking(const ScoreVector& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s[a] < s[b]; });
  return idx;
}

}  // namespace

TEST_CASE("path adjustment") {
  CHECK(isolation_path_adjustment(0) == 0.0);
  CHECK(isolation_path_adjustment(1) == 0.0);
  CHECK(isolation_path_adjustment(2) == doctest::Approx(0.15443).epsilon(1e-4));
  CHECK(isolation_path_adjustment(2) == doctest::Approx(2.0 * 0.5772156649 - 1.0));
  const double c256 = isolation_path_adjustment(256);
  CHECK(c256 > 9.5);
  CHECK(c256 < 11.0);
  for (std::size_t n = 1; n < 5000; ++n) {
    CHECK(isolation_path_adjustment(n + 1) >= isolation_path_adjustment(n));
  }
}

TEST_CASE("fit is deterministic for every variant") {
  Rng rng(5);
  const auto train = random_matrix(rng, 120, 3);
  const auto probe = random_matrix(rng, 40, 3);
  for (auto v : kAll) {
    const auto a = score(fit(config_for(v), train), probe);
    const auto b = score(fit(config_for(v), train), probe);
    CHECK(a == b);
  }
}

TEST_CASE("thread count does not change scores") {
  Rng rng(6);
  const auto train = random_matrix(rng, 300, 4);
  const auto probe = random_matrix(rng, 50, 4);
  for (auto v : kAll) {
    const auto a = score(fit(config_for(v), train, 1), probe, 1);
    const auto b = score(fit(config_for(v), train, 4), probe, 3);
    CHECK(a == b);
  }
}

TEST_CASE("fit preconditions") {
  Rng rng(7);
  const auto small = random_matrix(rng, 10, 2);
  auto lof = config_for(Variant::lof);
  lof.k_neighbors = 10;
  CHECK_THROWS_AS(fit(lof, small), FitError);
  CHECK_THROWS_AS(fit(config_for(Variant::isolation_forest), Matrix(1, 2)), FitError);
  CHECK_THROWS_AS(fit(config_for(Variant::stochastic_forest), Matrix(0, 2)), FitError);
  auto recon = config_for(Variant::linear_recon);
  recon.n_components = 3;
  CHECK_THROWS_AS(fit(recon, small), FitError);
}

TEST_CASE("isolation forest caps the subsample") {
  Rng rng(8);
  auto c = config_for(Variant::isolation_forest);
  c.subsample = 1000;
  const auto det = fit(c, random_matrix(rng, 40, 2));
  const auto& m = std::get<IsolationForestModel>(det.model());
  CHECK(m.subsample == 40);
  CHECK(m.height_limit == 6);
}

TEST_CASE("forest trees respect the leaf rule") {
  Rng rng(9);
  for (auto v : {Variant::isolation_forest, Variant::stochastic_forest}) {
    auto c = config_for(v);
    c.n_trees = 20;
    c.subsample = 64;
    const auto det = fit(c, random_matrix(rng, 200, 3));
    const auto& trees = v == Variant::isolation_forest ? std::get<IsolationForestModel>(det.model()).trees
                                                       : std::get<StochasticForestModel>(det.model()).trees;
    for (const auto& tree : trees) {
      // Walk with depths; leaves must have mass <= 1 or sit at the height limit.
      std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
      while (!stack.empty()) {
        const auto [node, depth] = stack.back();
        stack.pop_back();
        const auto& n = tree[node];
        if (n.is_leaf()) {
          CHECK((n.mass <= 1 || depth == 6));
        } else {
          CHECK(depth < 6);
          CHECK(tree[n.left].mass + tree[n.right].mass == n.mass);
          stack.push_back({static_cast<std::size_t>(n.left), depth + 1});
          stack.push_back({static_cast<std::size_t>(n.right), depth + 1});
        }
      }
    }
  }
}

TEST_CASE("shape and empty input") {
  Rng rng(10);
  for (auto v : kAll) {
    const auto det = fit(config_for(v), random_matrix(rng, 50, 3));
    CHECK(score(det, Matrix(0, 3)).empty());
    CHECK_THROWS_AS(score(det, Matrix(2, 4)), ShapeError);
  }
}

TEST_CASE("a far probe scores below the median training score") {
  Rng rng(12);
  // A tight cluster on the diagonal, so one component leaves a residual.
  Matrix train(50, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    const double t = 0.5 + 0.01 * rng.normal();
    train(i, 0) = t;
    train(i, 1) = t + 0.001 * rng.normal();
  }
  const Matrix probe{{0.99, 0.01}};
  for (auto v : kAll) {
    auto c = config_for(v);
    if (v == Variant::linear_recon) c.n_components = 1;
    const auto det = fit(c, train);
    auto s = score(det, train);
    std::sort(s.begin(), s.end());
    CHECK(score(det, probe)[0] < s[s.size() / 2]);
  }
}

TEST_CASE("a planted outlier is strictly minimal") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Matrix x(60, 2);
    for (std::size_t i = 0; i < 59; ++i) {
      x(i, 0) = 0.5 + 0.05 * rng.normal();
      x(i, 1) = 0.5 + 0.05 * rng.normal();
    }
    x(59, 0) = 3.0;
    x(59, 1) = -2.0;
    for (auto v : kAll) {
      const auto s = score(fit(config_for(v, seed), x), x);
      for (std::size_t i = 0; i < 59; ++i) CHECK(s[59] < s[i]);
    }
  }
}

TEST_CASE("lof oracle on a grid") {
  Matrix grid;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) grid.append_row(std::vector<double>{double(i), double(j)});
  }
  const Matrix probes{{1.0, 1.0}, {0.0, 0.0}, {100.0, 100.0}};
  const auto s = lof_brute_oracle(grid, probes, 3);
  // The center's neighbours and their neighbourhoods are symmetric, so the
  // ratio stays near one.
  CHECK(s[0] == doctest::Approx(-1.0).epsilon(0.25));
  CHECK(s[1] == doctest::Approx(-1.0).epsilon(0.25));
  CHECK(s[2] < -10.0);
  CHECK(s[2] < s[0]);
  CHECK(s[2] < s[1]);
}

TEST_CASE("lof probe inside a tight corner cluster") {
  // Four tight clusters at the corners of a unit square.
  Rng rng(13);
  Matrix x;
  const double corners[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (const auto& c : corners) {
    for (int i = 0; i < 6; ++i) {
      x.append_row(std::vector<double>{c[0] + 0.01 * rng.normal(), c[1] + 0.01 * rng.normal()});
    }
  }
  double cx = 0, cy = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    cx += x(i, 0) / 6;
    cy += x(i, 1) / 6;
  }
  const Matrix probe{{cx, cy}};
  auto c = config_for(Variant::lof);
  c.k_neighbors = 5;
  const auto det = fit(c, x);
  const auto train_scores = score(det, x);
  const auto p = score(det, probe)[0];
  CHECK(p >= *std::min_element(train_scores.begin(), train_scores.end()));
  CHECK(p == doctest::Approx(lof_brute_oracle(x, probe, 5)[0]));
}

TEST_CASE("production lof equals the exhaustive oracle") {
  Rng rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 12 + rng.index(80);
    const std::size_t d = 1 + rng.index(5);
    auto train = random_matrix(rng, n, d);
    // Duplicates exercise the zero-distance sentinel.
    if (trial % 4 == 0) {
      for (std::size_t r = 1; r < 6; ++r) {
        for (std::size_t c = 0; c < d; ++c) train(r, c) = train(0, c);
      }
    }
    const auto probe = random_matrix(rng, 30, d);
    auto c = config_for(Variant::lof);
    c.k_neighbors = 1 + rng.index(std::min<std::size_t>(10, n - 1));
    const auto det = fit(c, train);
    const auto got = score(det, probe);
    const auto want = lof_brute_oracle(train, probe, c.k_neighbors);
    CHECK(ranking(got) == ranking(want));
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]));
    const auto self = score(det, train);
    const auto self_oracle = lof_brute_oracle(train, train, c.k_neighbors);
    CHECK(ranking(self) == ranking(self_oracle));
  }
}

TEST_CASE("stochastic forest is blind to monotone rescaling") {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    auto train = random_matrix(rng, 150, 3);
    auto probe = random_matrix(rng, 40, 3);
    for (std::size_t c = 0; c < 3; ++c) probe(c, c) = 2.0;
    const auto base = score(fit(config_for(Variant::stochastic_forest, trial), train), probe);
    auto warp = [](Matrix m) {
      for (std::size_t r = 0; r < m.rows(); ++r) {
        m(r, 0) = m(r, 0) * m(r, 0) * m(r, 0);
        m(r, 1) = std::exp(5.0 * m(r, 1));
        m(r, 2) = 1000.0 * m(r, 2) - 7.0;
      }
      return m;
    };
    const auto warped = score(fit(config_for(Variant::stochastic_forest, trial), warp(train)), warp(probe));
    CHECK(ranking(warped) == ranking(base));
    CHECK(warped == base);
  }
}

TEST_CASE("stochastic forest favours the training point") {
  Matrix train(30, 2, 0.25);
  const Matrix probe{{0.25, 0.25}, {0.3, 0.25}, {0.9, 0.1}};
  const auto s = score(fit(config_for(Variant::stochastic_forest), train), probe);
  CHECK(s[0] > s[1]);
  CHECK(s[0] > s[2]);
}

TEST_CASE("stochastic forest ranks a far outlier last") {
  Rng rng(16);
  Matrix x(80, 2);
  for (std::size_t i = 0; i < 80; ++i) {
    x(i, 0) = 0.4 + 0.1 * rng.uniform();
    x(i, 1) = 0.4 + 0.1 * rng.uniform();
  }
  Matrix probe = x;
  probe.append_row(std::vector<double>{5.0, 5.0});
  const auto s = score(fit(config_for(Variant::stochastic_forest), x), probe);
  CHECK(ranking(s).front() == 80);
}

TEST_CASE("full-rank reconstruction is exact") {
  Rng rng(17);
  const auto x = random_matrix(rng, 40, 4);
  auto c = config_for(Variant::linear_recon);
  c.n_components = 4;
  const auto s = score(fit(c, x), x);
  for (double v : s) CHECK(std::fabs(v) <= 1e-9);
}

TEST_CASE("recon basis is orthonormal") {
  Rng rng(18);
  const auto x = random_matrix(rng, 100, 6);
  auto c = config_for(Variant::linear_recon);
  c.n_components = 3;
  const auto det = fit(c, x);
  const auto& m = std::get<LinearReconModel>(det.model());
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double dot = 0;
      for (std::size_t k = 0; k < 6; ++k) dot += m.basis(i, k) * m.basis(j, k);
      CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("duplicated point in a two-point isolation tree") {
  // With subsample 2 and two identical rows every tree is a root split whose
  // range is empty: the point goes right and settles at depth 1 with mass 2.
  const Matrix x{{0.3, 0.7}, {0.3, 0.7}};
  auto c = config_for(Variant::isolation_forest);
  c.subsample = 2;
  c.n_trees = 50;
  const auto det = fit(c, x);
  for (const auto& tree : std::get<IsolationForestModel>(det.model()).trees) {
    REQUIRE(tree.size() == 3);
    CHECK(tree[1].mass + tree[2].mass == 2);
  }
  const auto h = mean_path_length(det, x);
  CHECK(h[0] == doctest::Approx(1.0 + isolation_path_adjustment(2)));
}

TEST_CASE("isolation score matches the closed form") {
  Rng rng(19);
  const auto x = random_matrix(rng, 100, 2);
  auto c = config_for(Variant::isolation_forest);
  c.subsample = 64;
  const auto det = fit(c, x);
  const auto h = mean_path_length(det, x);
  const auto s = score(det, x);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    CHECK(s[i] == doctest::Approx(-std::pow(2.0, -h[i] / isolation_path_adjustment(64))));
  }
}

TEST_CASE("models round-trip through the container") {
  Rng rng(20);
  const auto x = random_matrix(rng, 60, 3);
  const auto probe = random_matrix(rng, 20, 3);
  const auto path = std::filesystem::temp_directory_path() / "occids_model_test.json";
  for (auto v : kAll) {
    const auto det = fit(config_for(v), x);
    const calibration::Threshold th{1.0, 0.5, -0.5};
    save_model(path, det, th);
    const auto [loaded, th2] = load_model(path);
    CHECK(loaded.variant() == v);
    CHECK(loaded.feature_count() == 3);
    CHECK(score(loaded, probe) == score(det, probe));
    CHECK(th2.th == th.th);
  }
  nlohmann::json j = nlohmann::json::parse(R"({"format": "occids-model", "version": 99})");
  std::ofstream(path) << j.dump();
  CHECK_THROWS_AS(load_model(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("variant names") {
  for (auto v : kAll) CHECK(variant_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(variant_from_string("ocsvm"), ArgumentError);
}
