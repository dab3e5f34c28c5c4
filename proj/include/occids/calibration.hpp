#pragma once

#include <span>

#include <json.hpp>

#include "occids/common.hpp"

namespace occids::calibration {

/// Decision threshold derived from the training-score distribution:
/// th = mu - 3 sigma, with sigma the population standard deviation.
struct Threshold {
  double mu = 0.0;
  double sigma = 0.0;
  double th = 0.0;

  nlohmann::json to_json() const { return {{"mu", mu}, {"sigma", sigma}, {"th", th}}; }
  static Threshold from_json(const nlohmann::json& j) {
    return {j.at("mu").get<double>(), j.at("sigma").get<double>(), j.at("th").get<double>()};
  }
};

inline constexpr double kSigmaMultiplier = 3.0;

Threshold calibrate_threshold(std::span<const double> train_scores);

/// 1 (attack) iff score <= th. The boundary itself counts as an attack.
Labels classify(std::span<const double> scores, const Threshold& threshold);

}  // namespace occids::calibration
