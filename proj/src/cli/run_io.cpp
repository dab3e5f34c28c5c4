#include "run_io.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

namespace occids::cli::detail {

using nlohmann::json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReportError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path prepare_run_dir(const ExperimentConfig& config,
                                      const std::filesystem::path& out_root) {
  const auto dir = out_root / config.name / run_id(config);
  std::filesystem::create_directories(dir);
  std::filesystem::remove(dir / "error.json");
  write_text(dir / "config.json", config.to_json().dump(2) + "\n");
  return dir;
}

json provenance(const ExperimentConfig& config, const std::string& started_at) {
  return {{"config_hash", run_id(config)},
          {"seed", config.seed},
          {"artifact_version", kArtifactVersion},
          {"threads", config.threads},
          {"started_at", started_at},
          {"finished_at", utc_timestamp()}};
}

Source load_source(const ExperimentConfig& config) {
  Source s;
  if (config.demo_source) {
    const auto demo = dataset::generate_gaussian_demo(config.seed);
    s.schema = dataset::Schema({{"x1", dataset::ColumnKind::numeric},
                                {"x2", dataset::ColumnKind::numeric},
                                {"label", dataset::ColumnKind::binary_label},
                                {"attack_type", dataset::ColumnKind::attack_type_tag}});
    s.table.header = {"x1", "x2", "label", "attack_type"};
    for (std::size_t r = 0; r < demo.size(); ++r) {
      dataset::Cell tag;
      if (!demo.attack_type[r].empty()) tag = demo.attack_type[r];
      s.table.rows.push_back({format_double(demo.X(r, 0)), format_double(demo.X(r, 1)),
                              std::string(demo.y[r] == kAttack ? "1" : "0"), tag});
    }
  } else {
    s.schema = dataset::Schema::load(config.schema_path);
    s.table = dataset::load_csv(config.csv_path, s.schema);
  }
  if (s.table.row_count() == 0) throw ParseError("dataset has no rows");
  s.labels = dataset::raw_labels(s.table, s.schema);
  return s;
}

json stat_json(const metrics::Stat& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

RowMetrics row_metrics(const metrics::ConfusionCounts& c) {
  RowMetrics m;
  m.attack = metrics::class_metrics(c);
  m.normal = metrics::class_metrics(c.swapped());
  m.macro_f1 = metrics::macro_f1(m.attack, m.normal);
  return m;
}

std::string csv_header(const std::vector<std::string>& columns) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  return out + '\n';
}

namespace {

std::string counts_cells(const metrics::ConfusionCounts& c) {
  return std::to_string(c.tp) + ',' + std::to_string(c.fp) + ',' + std::to_string(c.fn) + ',' +
         std::to_string(c.tn);
}

}  // namespace

const std::vector<std::string> kEvalColumns = {
    "run",          "model",           "kind",          "n_models",
    "tp",           "fp",              "fn",            "tn",
    "accuracy",     "attack_precision", "attack_recall", "attack_f1",
    "normal_precision", "normal_recall", "normal_f1",   "macro_f1",
    "mu",           "sigma",           "th"};

std::string eval_csv_line(const EvalRow& row) {
  const auto m = row_metrics(row.counts);
  std::string line = std::to_string(row.run) + ',' + dataset::csv_quote(row.model) + ',' + row.kind +
                     ',' + std::to_string(row.n_models) + ',' + counts_cells(row.counts);
  for (double v : {m.attack.accuracy, m.attack.precision, m.attack.recall, m.attack.f1,
                   m.normal.precision, m.normal.recall, m.normal.f1, m.macro_f1}) {
    line += ',' + format_double(v);
  }
  if (row.threshold) {
    line += ',' + format_double(row.threshold->mu) + ',' + format_double(row.threshold->sigma) + ',' +
            format_double(row.threshold->th);
  } else {
    line += ",,,";
  }
  return line + '\n';
}

json eval_models(const std::vector<EvalRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const EvalRow*>> groups;
  for (const auto& r : rows) {
    if (!groups.contains(r.model)) order.push_back(r.model);
    groups[r.model].push_back(&r);
  }
  json out = json::array();
  for (const auto& name : order) {
    const auto& g = groups[name];
    std::vector<double> cols[8];
    for (const auto* r : g) {
      const auto m = row_metrics(r->counts);
      const double vals[8] = {m.attack.accuracy, m.attack.precision, m.attack.recall, m.attack.f1,
                              m.normal.precision, m.normal.recall, m.normal.f1, m.macro_f1};
      for (int i = 0; i < 8; ++i) cols[i].push_back(vals[i]);
    }
    json block = {{"name", name},
                  {"kind", g.front()->kind},
                  {"n_models", g.front()->n_models},
                  {"runs", g.size()}};
    for (int i = 0; i < 8; ++i) block[kEvalColumns[8 + i]] = stat_json(metrics::summarize(cols[i]));
    out.push_back(block);
  }
  return out;
}

const std::vector<std::string> kOmissionColumns = {
    "k",  "combination_id", "combination_tags", "run", "arm", "accuracy", "attack_precision",
    "attack_recall", "attack_f1", "macro_f1", "tp", "fp", "fn", "tn", "omitted_recall"};

std::string omission_csv_line(const supervised::OmissionRecord& r) {
  std::string tags;
  for (std::size_t i = 0; i < r.combination.size(); ++i) {
    if (i) tags += '+';
    tags += r.combination[i];
  }
  std::string line = std::to_string(r.k) + ',' + std::to_string(r.combination_id) + ',' +
                     dataset::csv_quote(tags) + ',' + std::to_string(r.run) + ',' +
                     supervised::to_string(r.arm);
  for (double v : {r.attack.accuracy, r.attack.precision, r.attack.recall, r.attack.f1, r.macro_f1}) {
    line += ',' + format_double(v);
  }
  line += ',' + counts_cells(r.counts) + ',';
  if (r.omitted_recall) line += format_double(*r.omitted_recall);
  return line + '\n';
}

json omission_aggregates(const std::vector<supervised::OmissionAggregate>& aggs) {
  json out = json::array();
  for (const auto& a : aggs) {
    json block = {{"arm", supervised::to_string(a.arm)},
                  {"k", a.k},
                  {"combinations_total", a.combinations_total},
                  {"combinations_evaluated", a.combinations_evaluated},
                  {"accuracy", stat_json(a.accuracy)},
                  {"attack_precision", stat_json(a.attack_precision)},
                  {"attack_recall", stat_json(a.attack_recall)},
                  {"attack_f1", stat_json(a.attack_f1)},
                  {"macro_f1", stat_json(a.macro_f1)}};
    block["omitted_recall"] = a.omitted_recall ? stat_json(*a.omitted_recall) : json(nullptr);
    out.push_back(block);
  }
  return out;
}

const std::vector<std::string> kDemoColumns = {"x1",     "x2",       "true_label", "attack_type",
                                               "rf_plain", "rf_noise", "occ"};
const std::vector<std::string> kDemoPredictors = {"rf_plain", "rf_noise", "occ"};

std::string demo_csv_line(const DemoPoint& p) {
  return format_double(p.x1) + ',' + format_double(p.x2) + ',' + std::to_string(p.label) + ',' +
         dataset::csv_quote(p.attack_type) + ',' + std::to_string(p.pred[0]) + ',' +
         std::to_string(p.pred[1]) + ',' + std::to_string(p.pred[2]) + '\n';
}

json demo_predictors(const std::vector<DemoPoint>& points, const std::vector<std::string>& omitted) {
  json out = json::array();
  for (std::size_t c = 0; c < kDemoPredictors.size(); ++c) {
    Labels truth;
    Labels pred;
    std::size_t omitted_total = 0;
    std::size_t omitted_hit = 0;
    for (const auto& p : points) {
      truth.push_back(p.label);
      pred.push_back(p.pred[c]);
      if (std::find(omitted.begin(), omitted.end(), p.attack_type) != omitted.end()) {
        ++omitted_total;
        omitted_hit += p.pred[c];
      }
    }
    const auto counts = metrics::confusion(truth, pred);
    const auto m = row_metrics(counts);
    out.push_back({{"name", kDemoPredictors[c]},
                   {"tp", counts.tp},
                   {"fp", counts.fp},
                   {"fn", counts.fn},
                   {"tn", counts.tn},
                   {"accuracy", m.attack.accuracy},
                   {"attack_precision", m.attack.precision},
                   {"attack_recall", m.attack.recall},
                   {"attack_f1", m.attack.f1},
                   {"macro_f1", m.macro_f1},
                   {"omitted_recall", omitted_total == 0
                                          ? 0.0
                                          : 100.0 * static_cast<double>(omitted_hit) /
                                                static_cast<double>(omitted_total)}});
  }
  return out;
}

}  // namespace occids::cli::detail
