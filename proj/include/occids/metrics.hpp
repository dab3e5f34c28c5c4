#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occids/common.hpp"

namespace occids::metrics {

/// Confusion counts with attack (1) as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  /// Same predictions viewed with normal as the positive class.
  ConfusionCounts swapped() const { return {tn, fn, fp, tp}; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Percent-scale metrics. Zero-denominator precision or recall is 0.
struct ClassMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

struct RunSummary {
  Stat accuracy;
  Stat precision;
  Stat recall;
  Stat f1;
  std::size_t run_count = 0;
};

ConfusionCounts confusion(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred);
ClassMetrics class_metrics(const ConfusionCounts& c);
double macro_f1(const ClassMetrics& attack, const ClassMetrics& normal);

/// Mean and population standard deviation of a non-empty sample.
Stat summarize(std::span<const double> values);
RunSummary aggregate_runs(std::span<const ClassMetrics> per_run);

}  // namespace occids::metrics
