#include "occids/calibration.hpp"

#include <cmath>
#include <string>

namespace occids::calibration {

Threshold calibrate_threshold(std::span<const double> train_scores) {
  if (train_scores.empty()) throw CalibrationError("cannot calibrate on zero training scores");
  double sum = 0.0;
  for (double s : train_scores) {
    if (!std::isfinite(s)) throw CalibrationError("training scores must be finite");
    sum += s;
  }
  const double n = static_cast<double>(train_scores.size());
  const double mu = sum / n;
  double ss = 0.0;
  for (double s : train_scores) ss += (s - mu) * (s - mu);
  const double sigma = std::sqrt(ss / n);
  return {mu, sigma, mu - kSigmaMultiplier * sigma};
}

Labels classify(std::span<const double> scores, const Threshold& threshold) {
  Labels out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(s <= threshold.th ? kAttack : kNormal);
  return out;
}

}  // namespace occids::calibration
