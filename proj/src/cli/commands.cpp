#include <algorithm>
#include <fstream>
#include <set>

#include "occids/calibration.hpp"
#include "occids/ensemble.hpp"
#include "run_io.hpp"

namespace occids::cli {

namespace {

using nlohmann::json;
using namespace detail;

constexpr std::uint64_t kOmissionStream = 0x0A;
constexpr std::uint64_t kNoiseStream = 0x401;

void finish(const std::filesystem::path& dir, json report) {
  write_text(dir / "report.json", report.dump(2) + "\n");
  write_text(dir / "report.txt", render_report(report));
}

json report_head(const ExperimentConfig& config, const std::string& started_at) {
  return {{"format", kReportFormat},
          {"kind", to_string(config.kind)},
          {"experiment", config.name},
          {"run_id", run_id(config)},
          {"provenance", provenance(config, started_at)}};
}

detectors::DetectorConfig occ_detector_config(const ExperimentConfig& config,
                                              const std::string& name) {
  if (!name.empty()) return config.detector(name).config;
  if (!config.detectors.empty()) return config.detectors.front().config;
  detectors::DetectorConfig d;
  d.variant = detectors::Variant::stochastic_forest;
  d.seed = mix_seed(config.seed, fnv1a("occ"));
  return d;
}

}  // namespace

std::filesystem::path cmd_occ_eval(const ExperimentConfig& config,
                                   const std::filesystem::path& out_root) {
  const auto started = utc_timestamp();
  const auto source = load_source(config);
  const auto dir = prepare_run_dir(config, out_root);
  if (config.save_models) std::filesystem::create_directories(dir / "models");

  std::vector<std::string> members = config.ensemble_members;
  if (members.empty()) {
    for (const auto& d : config.detectors) members.push_back(d.name);
  }
  std::vector<std::size_t> levels = config.ensemble_levels;
  if (levels.empty()) {
    for (std::size_t k = 1; k <= members.size(); ++k) levels.push_back(k);
  }

  std::optional<dataset::Dataset> full;
  if (!config.fit_on_train) {
    full = dataset::apply_preprocessor(dataset::fit_preprocessor(source.table, source.schema),
                                       source.table, source.schema);
  }

  std::ofstream csv(dir / "per_run.csv", std::ios::binary | std::ios::trunc);
  if (!csv) throw Error("cannot write " + (dir / "per_run.csv").string());
  csv << csv_header(kEvalColumns);

  std::vector<EvalRow> rows;
  std::size_t run = 0;
  std::string stage = "split";
  try {
    for (; run < config.split.n_runs; ++run) {
      stage = "split";
      const auto idx = dataset::stratified_split_indices(source.labels, config.split, run);
      dataset::Dataset train;
      dataset::Dataset test;
      if (full) {
        train = full->select_rows(idx.train);
        test = full->select_rows(idx.test);
      } else {
        stage = "preprocess";
        const auto train_table = source.table.select_rows(idx.train);
        const auto state = dataset::fit_preprocessor(train_table, source.schema);
        train = dataset::apply_preprocessor(state, train_table, source.schema);
        test = dataset::apply_preprocessor(state, source.table.select_rows(idx.test), source.schema);
      }
      const auto normals = dataset::filter_normal(train);

      std::vector<EvalRow> run_rows;
      ensemble::PredictionMatrix votes;
      for (const auto& d : config.detectors) {
        stage = "detector " + d.name;
        auto cfg = d.config;
        cfg.seed = mix_seed(d.config.seed, run);
        const auto det = detectors::fit(cfg, normals.X, config.threads);
        const auto th = calibration::calibrate_threshold(detectors::score(det, normals.X, config.threads));
        const auto pred = calibration::classify(detectors::score(det, test.X, config.threads), th);
        if (config.save_models) {
          detectors::save_model(dir / "models" / ("run" + std::to_string(run) + "_" + d.name + ".json"),
                                det, th);
        }
        run_rows.push_back({run, d.name, "detector", 1, metrics::confusion(test.y, pred), th});
        if (std::find(members.begin(), members.end(), d.name) != members.end()) {
          votes.add(d.name, pred);
        }
      }
      stage = "ensemble";
      for (auto k : levels) {
        run_rows.push_back({run, "ensemble-" + std::to_string(k), "ensemble", members.size(),
                            metrics::confusion(test.y, ensemble::consensus(votes, k)), std::nullopt});
      }
      for (const auto& r : run_rows) csv << eval_csv_line(r);
      csv.flush();
      rows.insert(rows.end(), run_rows.begin(), run_rows.end());
    }
  } catch (const Error& e) {
    csv.close();
    const json diag = {{"run", run},
                       {"stage", stage},
                       {"message", e.what()},
                       {"completed_runs", run}};
    write_text(dir / "error.json", diag.dump(2) + "\n");
    throw;
  }
  csv.close();

  auto report = report_head(config, started);
  report["models"] = eval_models(rows);
  finish(dir, report);
  return dir;
}

std::filesystem::path cmd_omission(const ExperimentConfig& config,
                                   const std::filesystem::path& out_root) {
  const auto started = utc_timestamp();
  const auto source = load_source(config);
  const auto data = dataset::apply_preprocessor(
      dataset::fit_preprocessor(source.table, source.schema), source.table, source.schema);
  if (data.attack_types().empty()) {
    throw SchemaError("the omission experiment needs an attack-type column with tagged rows");
  }
  const auto dir = prepare_run_dir(config, out_root);

  supervised::OmissionPlan plan;
  plan.k_values = config.omission.k_values;
  if (plan.k_values.empty()) {
    for (std::size_t k = 0; k <= data.attack_types().size(); ++k) plan.k_values.push_back(k);
  }
  plan.with_noise = config.omission.with_noise;
  plan.split = config.split;
  plan.combination_cap = config.omission.max_combinations;
  plan.seed = mix_seed(config.seed, kOmissionStream);
  const auto occ = occ_detector_config(config, config.omission.occ_detector.value_or(""));

  supervised::OmissionResult result;
  try {
    result = supervised::run_omission_experiment(data, plan, config.forest, occ, config.threads);
  } catch (const Error& e) {
    write_text(dir / "error.json", json{{"stage", "omission"}, {"message", e.what()}}.dump(2) + "\n");
    throw;
  }

  std::string csv = csv_header(kOmissionColumns);
  for (const auto& r : result.records) csv += omission_csv_line(r);
  write_text(dir / "per_run.csv", csv);

  auto report = report_head(config, started);
  report["aggregates"] = omission_aggregates(result.aggregates);
  finish(dir, report);
  return dir;
}

std::filesystem::path cmd_demo(const ExperimentConfig& config, const std::filesystem::path& out_root) {
  const auto started = utc_timestamp();
  const auto source = load_source(config);
  const auto data = dataset::apply_preprocessor(
      dataset::fit_preprocessor(source.table, source.schema), source.table, source.schema);
  const std::set<std::string> omit(config.demo.omit.begin(), config.demo.omit.end());
  const auto train = dataset::omit_attack_types(data, omit);
  const auto dir = prepare_run_dir(config, out_root);

  Labels plain(data.size(), kNormal);
  if (train.attack_count() > 0) {
    plain = supervised::rf_predict(supervised::rf_fit(train.X, train.y, config.forest, config.threads),
                                   data.X);
  }
  const auto augmented = supervised::augment_with_noise(train, mix_seed(config.seed, kNoiseStream));
  const auto noise = supervised::rf_predict(
      supervised::rf_fit(augmented.X, augmented.y, config.forest, config.threads), data.X);

  const auto normals = dataset::filter_normal(data);
  const auto det = detectors::fit(occ_detector_config(config, config.demo.occ_detector), normals.X,
                                  config.threads);
  const auto th = calibration::calibrate_threshold(detectors::score(det, normals.X, config.threads));
  const auto occ = calibration::classify(detectors::score(det, data.X, config.threads), th);

  std::vector<DemoPoint> points(data.size());
  std::string csv = csv_header(kDemoColumns);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& p = points[i];
    // Raw coordinates, so the plot shows the generated units rather than [0, 1].
    p.x1 = std::stod(*source.table.rows[i][0]);
    p.x2 = std::stod(*source.table.rows[i][1]);
    p.label = data.y[i];
    p.attack_type = data.attack_type[i];
    p.pred[0] = plain[i];
    p.pred[1] = noise[i];
    p.pred[2] = occ[i];
    csv += demo_csv_line(p);
  }
  write_text(dir / "points.csv", csv);

  auto report = report_head(config, started);
  report["omitted"] = config.demo.omit;
  report["predictors"] = demo_predictors(points, config.demo.omit);
  finish(dir, report);
  return dir;
}

}  // namespace occids::cli
