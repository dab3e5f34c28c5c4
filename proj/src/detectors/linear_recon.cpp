// Principal-subspace reconstruction detector. The basis is found by power
// iteration on the training covariance, each new direction kept orthogonal
// to the ones already found. Score is minus the squared residual.

#include <cmath>

#include "occids/detectors.hpp"

namespace occids::detectors {

namespace {

constexpr std::size_t kMaxIterations = 1000;
constexpr double kConvergence = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Removes the components along every row of `basis`; applied twice for
// numerical orthogonality.
void orthogonalize(std::vector<double>& v, const Matrix& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t b = 0; b < basis.rows(); ++b) {
      const auto row = basis.row(b);
      const double c = dot(v, row);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * row[i];
    }
  }
}

}  // namespace

LinearReconModel fit_linear_recon(const DetectorConfig& config, const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n == 0 || d == 0) throw FitError("linear-recon needs a non-empty training matrix");
  const std::size_t components = config.n_components.value_or(std::min<std::size_t>(d, 8));
  if (components < 1 || components > d) {
    throw FitError("linear-recon needs 1 <= n_components <= d (d=" + std::to_string(d) + ")");
  }

  LinearReconModel m;
  m.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += row[j];
  }
  for (double& v : m.mean) v /= static_cast<double>(n);

  Matrix cov(d, d);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) centered[j] = row[j] - m.mean[j];
    for (std::size_t a = 0; a < d; ++a) {
      const double ca = centered[a];
      if (ca == 0.0) continue;
      for (std::size_t b = a; b < d; ++b) cov(a, b) += ca * centered[b];
    }
  }
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(n);
      cov(b, a) = cov(a, b);
    }
    trace += cov(a, a);
  }
  const double negligible = 1e-12 * (trace > 0.0 ? trace : 1.0);

  m.basis = Matrix(0, d);
  std::vector<double> w(d);
  for (std::size_t c = 0; c < components; ++c) {
    Rng rng(mix_seed(config.seed, c));
    std::vector<double> v(d);
    double len = 0.0;
    while (len < 1e-8) {
      for (double& e : v) e = rng.normal();
      orthogonalize(v, m.basis);
      len = norm(v);
    }
    for (double& e : v) e /= len;

    for (std::size_t it = 0; it < kMaxIterations; ++it) {
      for (std::size_t a = 0; a < d; ++a) w[a] = dot(cov.row(a), v);
      orthogonalize(w, m.basis);
      const double lambda = norm(w);
      // Remaining spectrum is zero: any unit vector orthogonal to the basis
      // is an eigenvector, keep the current one.
      if (lambda <= negligible) break;
      double delta = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        w[a] /= lambda;
        delta += (w[a] - v[a]) * (w[a] - v[a]);
      }
      v.swap(w);
      if (delta < kConvergence) break;
    }
    orthogonalize(v, m.basis);
    len = norm(v);
    for (double& e : v) e /= len;
    m.basis.append_row(v);
  }
  return m;
}

double linear_recon_error(const LinearReconModel& m, std::span<const double> x) {
  const std::size_t d = m.mean.size();
  std::vector<double> centered(d);
  for (std::size_t j = 0; j < d; ++j) centered[j] = x[j] - m.mean[j];
  std::vector<double> residual = centered;
  for (std::size_t b = 0; b < m.basis.rows(); ++b) {
    const auto row = m.basis.row(b);
    const double c = dot(centered, row);
    for (std::size_t j = 0; j < d; ++j) residual[j] -= c * row[j];
  }
  return dot(residual, residual);
}

}  // namespace occids::detectors
