#pragma once

// Helpers shared by the experiment commands and the report auditor: run
// directories, dataset loading, and the row <-> aggregate code that both the
// writer and the auditor must agree on.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "occids/calibration.hpp"
#include "occids/experiment.hpp"
#include "occids/metrics.hpp"

namespace occids::cli::detail {

inline constexpr double kTolerance = 1e-9;
inline constexpr const char* kReportFormat = "occids-report";

std::string utc_timestamp();
void write_text(const std::filesystem::path& path, const std::string& text);
/// Throws ReportError when the file is missing or unreadable.
std::string read_text(const std::filesystem::path& path);

/// Creates <out_root>/<experiment>/<run_id>/ and writes config.json into it.
std::filesystem::path prepare_run_dir(const ExperimentConfig& config,
                                      const std::filesystem::path& out_root);

nlohmann::json provenance(const ExperimentConfig& config, const std::string& started_at);

struct Source {
  dataset::Schema schema;
  dataset::RawTable table;
  Labels labels;
};

/// The configured CSV, or the Gaussian demo rendered as a raw table so both
/// go through the same preprocessing.
Source load_source(const ExperimentConfig& config);

nlohmann::json stat_json(const metrics::Stat& s);

// Percent metrics of one confusion table, attack and normal views.
struct RowMetrics {
  metrics::ClassMetrics attack;
  metrics::ClassMetrics normal;
  double macro_f1 = 0.0;
};
RowMetrics row_metrics(const metrics::ConfusionCounts& c);

// occ-eval per-run rows.
struct EvalRow {
  std::size_t run = 0;
  std::string model;
  std::string kind;  // "detector" or "ensemble"
  std::size_t n_models = 1;
  metrics::ConfusionCounts counts;
  std::optional<calibration::Threshold> threshold;
};

extern const std::vector<std::string> kEvalColumns;
std::string eval_csv_line(const EvalRow& row);
/// One block per model in first-appearance order.
nlohmann::json eval_models(const std::vector<EvalRow>& rows);

// omission rows.
extern const std::vector<std::string> kOmissionColumns;
std::string omission_csv_line(const supervised::OmissionRecord& r);
nlohmann::json omission_aggregates(const std::vector<supervised::OmissionAggregate>& aggs);

// demo points.
extern const std::vector<std::string> kDemoColumns;
extern const std::vector<std::string> kDemoPredictors;
struct DemoPoint {
  double x1 = 0.0;
  double x2 = 0.0;
  std::uint8_t label = kNormal;
  std::string attack_type;
  std::uint8_t pred[3] = {0, 0, 0};  // aligned with kDemoPredictors
};
std::string demo_csv_line(const DemoPoint& p);
nlohmann::json demo_predictors(const std::vector<DemoPoint>& points,
                               const std::vector<std::string>& omitted);

std::string csv_header(const std::vector<std::string>& columns);

}  // namespace occids::cli::detail
