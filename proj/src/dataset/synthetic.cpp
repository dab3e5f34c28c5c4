#include "occids/dataset.hpp"

namespace occids::dataset {

std::vector<GaussianCluster> default_demo_clusters() {
  return {
      {"", 0.0, 0.0, 1.0, 1000},
      {"a1", 0.0, 10.0, 1.0, 250},
      {"a2", 10.0, 0.0, 1.0, 250},
  };
}

Dataset generate_gaussian_demo(std::uint64_t seed) {
  return generate_gaussian_demo(seed, default_demo_clusters());
}

Dataset generate_gaussian_demo(std::uint64_t seed, const std::vector<GaussianCluster>& clusters) {
  Dataset out;
  out.feature_names = {"x1", "x2"};
  out.X = Matrix(0, 2);
  Rng rng(mix_seed(seed, 0x6a05));
  for (const auto& c : clusters) {
    for (std::size_t i = 0; i < c.count; ++i) {
      const double p[2] = {c.center_x + c.stddev * rng.normal(),
                           c.center_y + c.stddev * rng.normal()};
      out.X.append_row(p);
      out.y.push_back(c.attack_type.empty() ? kNormal : kAttack);
      out.attack_type.push_back(c.attack_type);
    }
  }
  return out;
}

Dataset generate_uniform_noise(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw ArgumentError("uniform noise needs n >= 1 and d >= 1");
  Dataset out;
  out.X = Matrix(n, d);
  Rng rng(mix_seed(seed, 0x401e));
  for (std::size_t r = 0; r < n; ++r) {
    for (double& v : out.X.row(r)) v = rng.uniform();
  }
  out.y.assign(n, kAttack);
  out.attack_type.assign(n, kNoiseTag);
  for (std::size_t f = 0; f < d; ++f) out.feature_names.push_back("f" + std::to_string(f));
  return out;
}

}  // namespace occids::dataset
