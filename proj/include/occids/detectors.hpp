#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "occids/calibration.hpp"
#include "occids/matrix.hpp"

namespace occids::detectors {

enum class Variant { isolation_forest, stochastic_forest, lof, linear_recon };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& text);

struct DetectorConfig {
  Variant variant = Variant::stochastic_forest;
  std::size_t n_trees = 100;
  std::size_t subsample = 256;
  std::size_t k_neighbors = 20;
  /// Defaults to min(d, 8) when unset.
  std::optional<std::size_t> n_components;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static DetectorConfig from_json(const nlohmann::json& j);
};

/// Normality scores, one per row; higher means more normal.
using ScoreVector = std::vector<double>;

/// c(n) = 2 H(n-1) - 2(n-1)/n with H(i) = ln(i) + Euler's constant; the
/// average path length of an unsuccessful BST search. c(0) = c(1) = 0.
double isolation_path_adjustment(std::size_t n);

/// Flat binary tree used by both forest variants.
struct TreeNode {
  std::int32_t left = -1;  // -1 marks a leaf
  std::int32_t right = -1;
  std::uint32_t dim = 0;
  double split = 0.0;
  // Range of the node's data on `dim`; only used by the stochastic forest.
  double lo = 0.0;
  double hi = 0.0;
  std::uint32_t mass = 0;

  bool is_leaf() const { return left < 0; }
};

using Tree = std::vector<TreeNode>;

struct IsolationForestModel {
  std::vector<Tree> trees;
  std::size_t subsample = 0;  // effective, after capping at row count
  std::size_t height_limit = 0;
};

struct StochasticForestModel {
  std::vector<Tree> trees;
  std::size_t subsample = 0;
  std::size_t height_limit = 0;
};

class KdIndex;

struct LofModel {
  Matrix train;
  /// Spatial index over `train`; rebuilt on load, never serialized.
  std::shared_ptr<const KdIndex> index;
  std::size_t k = 0;
  std::vector<double> k_distance;
  std::vector<double> lrd;
};

struct LinearReconModel {
  std::vector<double> mean;
  /// Orthonormal principal directions, one per row.
  Matrix basis;
};

using Model = std::variant<IsolationForestModel, StochasticForestModel, LofModel, LinearReconModel>;

/// A trained one-class model. Immutable once built; scoring is const and may
/// run from several threads.
class FittedDetector {
 public:
  FittedDetector(DetectorConfig config, std::size_t feature_count, Model model);

  const DetectorConfig& config() const { return config_; }
  Variant variant() const { return config_.variant; }
  std::size_t feature_count() const { return feature_count_; }
  const Model& model() const { return model_; }

  nlohmann::json to_json() const;
  static FittedDetector from_json(const nlohmann::json& j);

 private:
  DetectorConfig config_;
  std::size_t feature_count_;
  Model model_;
};

/// Trains on normal rows only. `threads` = 0 uses every hardware thread;
/// the result does not depend on the thread count.
FittedDetector fit(const DetectorConfig& config, const Matrix& x_normal, std::size_t threads = 1);

ScoreVector score(const FittedDetector& det, const Matrix& x, std::size_t threads = 1);

/// Mean over trees of (depth reached + c(leaf mass)). Forest variants only.
std::vector<double> mean_path_length(const FittedDetector& det, const Matrix& x);

/// Textbook local outlier factor by exhaustive O(n^2) search, negated so that
/// higher means more normal. Reference implementation for tests.
ScoreVector lof_brute_oracle(const Matrix& x_train, const Matrix& x_probe, std::size_t k);

/// Versioned JSON container holding a detector and its threshold.
inline constexpr int kModelFormatVersion = 1;

void save_model(const std::filesystem::path& path, const FittedDetector& det,
                const calibration::Threshold& threshold);
std::pair<FittedDetector, calibration::Threshold> load_model(const std::filesystem::path& path);

// Variant entry points, exposed for tests.
IsolationForestModel fit_isolation_forest(const DetectorConfig& config, const Matrix& x,
                                          std::size_t threads);
StochasticForestModel fit_stochastic_forest(const DetectorConfig& config, const Matrix& x,
                                            std::size_t threads);
LofModel fit_lof(const DetectorConfig& config, const Matrix& x, std::size_t threads);
LinearReconModel fit_linear_recon(const DetectorConfig& config, const Matrix& x);

double isolation_path_length(const IsolationForestModel& m, std::span<const double> x);
double stochastic_path_length(const StochasticForestModel& m, std::span<const double> x);
double lof_score(const LofModel& m, std::span<const double> x);
double linear_recon_error(const LinearReconModel& m, std::span<const double> x);

}  // namespace occids::detectors
