#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "occids/dataset.hpp"
#include "occids/detectors.hpp"
#include "occids/metrics.hpp"

namespace occids::supervised {

/// 1 - sum (c_i / total)^2.
double gini_impurity(std::span<const std::uint64_t> class_counts);

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_leaf = 1;
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(d))
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ForestConfig from_json(const nlohmann::json& j);
};

struct DecisionNode {
  std::int32_t left = -1;  // -1 marks a leaf; rows with x[feature] <= split go left
  std::int32_t right = -1;
  std::uint32_t feature = 0;
  double split = 0.0;
  std::uint64_t normal_count = 0;
  std::uint64_t attack_count = 0;

  bool is_leaf() const { return left < 0; }
};

using DecisionTree = std::vector<DecisionNode>;

struct ForestModel {
  ForestConfig config;
  std::size_t feature_count = 0;
  std::vector<DecisionTree> trees;

  nlohmann::json to_json() const;
  static ForestModel from_json(const nlohmann::json& j);
};

/// CART trees on bootstrap resamples with a random feature subset per node.
ForestModel rf_fit(const Matrix& x, const Labels& y, const ForestConfig& config,
                   std::size_t threads = 1);

/// Number of trees voting attack for each row.
std::vector<std::size_t> rf_attack_votes(const ForestModel& model, const Matrix& x);

/// Majority vote; a tie counts as attack.
Labels rf_predict(const ForestModel& model, const Matrix& x);

/// Appends N_n uniform-noise rows labelled attack, N_n being the number of
/// normal rows in `train`.
dataset::Dataset augment_with_noise(const dataset::Dataset& train, std::uint64_t seed);

/// All size-k subsets of `attack_types`, in lexicographic order of position.
std::vector<std::vector<std::string>> enumerate_combinations(const std::vector<std::string>& attack_types,
                                                             std::size_t k);

struct OmissionPlan {
  std::vector<std::string> attack_types;  // empty = every tag in the data
  std::vector<std::size_t> k_values;      // 0 is always added
  bool with_noise = true;
  dataset::SplitPlan split;
  /// Per-k limit on evaluated combinations; larger grids are sampled.
  std::size_t combination_cap = 20;
  std::uint64_t seed = 0;
};

enum class Arm { plain, noise, occ };
std::string to_string(Arm arm);
Arm arm_from_string(const std::string& text);

struct OmissionRecord {
  std::size_t k = 0;
  std::size_t combination_id = 0;
  std::vector<std::string> combination;
  std::size_t run = 0;
  Arm arm = Arm::plain;
  metrics::ConfusionCounts counts;
  metrics::ClassMetrics attack;
  double macro_f1 = 0.0;
  /// Attack recall restricted to test rows of the omitted types; empty for k=0.
  std::optional<double> omitted_recall;
};

struct OmissionAggregate {
  Arm arm = Arm::plain;
  std::size_t k = 0;
  std::size_t combinations_total = 0;
  std::size_t combinations_evaluated = 0;
  // mean = average over combinations of each combination's run mean;
  // std = spread of those combination means.
  metrics::Stat accuracy;
  metrics::Stat attack_precision;
  metrics::Stat attack_recall;
  metrics::Stat attack_f1;
  metrics::Stat macro_f1;
  std::optional<metrics::Stat> omitted_recall;
};

struct OmissionResult {
  std::vector<OmissionRecord> records;  // sorted by (k, combination, run, arm)
  std::vector<OmissionAggregate> aggregates;
};

/// Recomputes per-(arm, k) aggregates from records.
std::vector<OmissionAggregate> aggregate_omission(const std::vector<OmissionRecord>& records,
                                                  const std::map<std::size_t, std::size_t>& totals);

/// For each run, k and combination: stratified split, drop the combination's
/// attack rows from the training fold only, fit the forest (and optionally the
/// noise-augmented forest and a one-class detector on the remaining normals),
/// and score on the untouched test fold.
OmissionResult run_omission_experiment(const dataset::Dataset& data, const OmissionPlan& plan,
                                       const ForestConfig& rf_config,
                                       const std::optional<detectors::DetectorConfig>& occ = std::nullopt,
                                       std::size_t threads = 1);

}  // namespace occids::supervised
