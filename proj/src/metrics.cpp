#include "occids/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace occids::metrics {

ConfusionCounts confusion(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ArgumentError("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                        std::to_string(y_pred.size()) + " predictions");
  }
  if (y_true.empty()) throw ArgumentError("confusion: no instances");
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool truth = y_true[i] == kAttack;
    const bool pred = y_pred[i] == kAttack;
    if (truth && pred) ++c.tp;
    else if (!truth && pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ClassMetrics class_metrics(const ConfusionCounts& c) {
  const auto tp = static_cast<double>(c.tp);
  const auto fp = static_cast<double>(c.fp);
  const auto fn = static_cast<double>(c.fn);
  const auto tn = static_cast<double>(c.tn);
  const double total = tp + fp + fn + tn;
  if (total == 0.0) throw ArgumentError("class_metrics: zero instances");

  ClassMetrics m;
  m.accuracy = (tp + tn) / total * 100.0;
  const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  m.precision = precision * 100.0;
  m.recall = recall * 100.0;
  m.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) * 100.0 : 0.0;
  return m;
}

double macro_f1(const ClassMetrics& attack, const ClassMetrics& normal) {
  return (attack.f1 + normal.f1) / 2.0;
}

Stat summarize(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("summarize: no values");
  Stat s;
  double sum = 0.0;
  for (double v : values) sum += v;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  // Rounding can put the mean of identical values one ulp outside [min, max].
  s.mean = std::clamp(sum / static_cast<double>(values.size()), s.min, s.max);
  if (s.min == s.max) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

RunSummary aggregate_runs(std::span<const ClassMetrics> per_run) {
  if (per_run.empty()) throw ArgumentError("aggregate_runs: no runs");
  std::vector<double> acc, prec, rec, f1;
  for (const auto& m : per_run) {
    acc.push_back(m.accuracy);
    prec.push_back(m.precision);
    rec.push_back(m.recall);
    f1.push_back(m.f1);
  }
  return {summarize(acc), summarize(prec), summarize(rec), summarize(f1), per_run.size()};
}

}  // namespace occids::metrics
