#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "run_io.hpp"

namespace occids::cli {

namespace {

using nlohmann::json;
using namespace detail;

// Parsed rows of a tidy CSV with a fixed header.
struct Table {
  std::string file;
  std::vector<std::vector<dataset::Cell>> rows;

  std::string where(std::size_t r, const std::string& column) const {
    return file + " row " + std::to_string(r + 1) + " column '" + column + "'";
  }
};

Table read_table(const std::filesystem::path& path, const std::vector<std::string>& columns) {
  Table t;
  t.file = path.filename().string();
  std::vector<std::vector<dataset::Cell>> records;
  try {
    records = dataset::parse_csv_rows(read_text(path));
  } catch (const ParseError& e) {
    throw ReportError(t.file + ": " + e.what());
  }
  if (records.empty()) throw ReportError(t.file + " is empty");
  std::vector<std::string> header;
  for (const auto& c : records.front()) header.push_back(c.value_or(""));
  if (header != columns) throw ReportError(t.file + " has an unexpected header");
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != columns.size()) {
      throw ReportError(t.file + " row " + std::to_string(r) + " has " +
                        std::to_string(records[r].size()) + " fields, expected " +
                        std::to_string(columns.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  if (t.rows.empty()) throw ReportError(t.file + " has no data rows");
  return t;
}

std::string text_cell(const Table& t, std::size_t r, std::size_t c) {
  return t.rows[r][c].value_or("");
}

std::uint64_t uint_cell(const Table& t, std::size_t r, std::size_t c,
                        const std::vector<std::string>& columns) {
  const auto& cell = t.rows[r][c];
  std::uint64_t v = 0;
  if (!cell) throw ReportError(t.where(r, columns[c]) + " is empty");
  const auto* end = cell->data() + cell->size();
  const auto res = std::from_chars(cell->data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ReportError(t.where(r, columns[c]) + " is not a non-negative integer");
  }
  return v;
}

std::optional<double> opt_double_cell(const Table& t, std::size_t r, std::size_t c,
                                      const std::vector<std::string>& columns) {
  const auto& cell = t.rows[r][c];
  if (!cell) return std::nullopt;
  double v = 0.0;
  const auto* end = cell->data() + cell->size();
  const auto res = std::from_chars(cell->data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw ReportError(t.where(r, columns[c]) + " is not a finite number");
  }
  return v;
}

double double_cell(const Table& t, std::size_t r, std::size_t c,
                   const std::vector<std::string>& columns) {
  const auto v = opt_double_cell(t, r, c, columns);
  if (!v) throw ReportError(t.where(r, columns[c]) + " is empty");
  return *v;
}

void expect_close(double stored, double recomputed, const std::string& where) {
  if (std::fabs(stored - recomputed) > kTolerance) {
    char buf[128];
    std::snprintf(buf, sizeof buf, ": stored %.17g, recomputed %.17g", stored, recomputed);
    throw ConsistencyError(where + buf);
  }
}

// Stored and recomputed JSON must agree structurally, with numbers equal to
// within the tolerance.
void compare_json(const json& stored, const json& fresh, const std::string& path) {
  if (stored.is_number() && fresh.is_number()) {
    expect_close(stored.get<double>(), fresh.get<double>(), "report.json " + path);
    return;
  }
  if (stored.type() != fresh.type()) {
    throw ConsistencyError("report.json " + path + " does not match the recomputed value");
  }
  if (stored.is_object()) {
    if (stored.size() != fresh.size()) {
      throw ConsistencyError("report.json " + path + " has a different set of fields");
    }
    for (const auto& [key, value] : fresh.items()) {
      if (!stored.contains(key)) throw ConsistencyError("report.json " + path + "." + key + " is missing");
      compare_json(stored.at(key), value, path + "." + key);
    }
  } else if (stored.is_array()) {
    if (stored.size() != fresh.size()) {
      throw ConsistencyError("report.json " + path + " has " + std::to_string(stored.size()) +
                             " entries, recomputed " + std::to_string(fresh.size()));
    }
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      compare_json(stored[i], fresh[i], path + "[" + std::to_string(i) + "]");
    }
  } else if (stored != fresh) {
    throw ConsistencyError("report.json " + path + " does not match the recomputed value");
  }
}

metrics::ConfusionCounts counts_at(const Table& t, std::size_t r, std::size_t first,
                                   const std::vector<std::string>& columns) {
  return {uint_cell(t, r, first, columns), uint_cell(t, r, first + 1, columns),
          uint_cell(t, r, first + 2, columns), uint_cell(t, r, first + 3, columns)};
}

json audit_occ_eval(const std::filesystem::path& dir, std::size_t& row_count) {
  const auto& cols = kEvalColumns;
  const auto t = read_table(dir / "per_run.csv", cols);
  std::vector<EvalRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EvalRow row;
    row.run = uint_cell(t, r, 0, cols);
    row.model = text_cell(t, r, 1);
    row.kind = text_cell(t, r, 2);
    row.n_models = uint_cell(t, r, 3, cols);
    row.counts = counts_at(t, r, 4, cols);
    if (row.counts.total() == 0) throw ConsistencyError(t.where(r, "tp") + ": empty confusion table");
    const auto m = row_metrics(row.counts);
    const double fresh[8] = {m.attack.accuracy, m.attack.precision, m.attack.recall, m.attack.f1,
                             m.normal.precision, m.normal.recall, m.normal.f1, m.macro_f1};
    for (std::size_t i = 0; i < 8; ++i) {
      expect_close(double_cell(t, r, 8 + i, cols), fresh[i], t.where(r, cols[8 + i]));
    }
    const auto mu = opt_double_cell(t, r, 16, cols);
    const auto sigma = opt_double_cell(t, r, 17, cols);
    const auto th = opt_double_cell(t, r, 18, cols);
    if (mu && sigma && th) {
      expect_close(*th, *mu - calibration::kSigmaMultiplier * *sigma, t.where(r, "th"));
      row.threshold = calibration::Threshold{*mu, *sigma, *th};
    } else if (mu || sigma || th) {
      throw ReportError(t.where(r, "mu") + ": threshold cells are partially filled");
    }
    rows.push_back(std::move(row));
  }
  row_count = rows.size();
  return eval_models(rows);
}

json audit_omission(const std::filesystem::path& dir, const json& stored, std::size_t& row_count) {
  const auto& cols = kOmissionColumns;
  const auto t = read_table(dir / "per_run.csv", cols);
  std::vector<supervised::OmissionRecord> records;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    supervised::OmissionRecord rec;
    rec.k = uint_cell(t, r, 0, cols);
    rec.combination_id = uint_cell(t, r, 1, cols);
    rec.run = uint_cell(t, r, 3, cols);
    try {
      rec.arm = supervised::arm_from_string(text_cell(t, r, 4));
    } catch (const ArgumentError& e) {
      throw ReportError(t.where(r, "arm") + ": " + e.what());
    }
    rec.counts = counts_at(t, r, 10, cols);
    if (rec.counts.total() == 0) throw ConsistencyError(t.where(r, "tp") + ": empty confusion table");
    const auto m = row_metrics(rec.counts);
    rec.attack = m.attack;
    rec.macro_f1 = m.macro_f1;
    const double fresh[5] = {m.attack.accuracy, m.attack.precision, m.attack.recall, m.attack.f1,
                             m.macro_f1};
    for (std::size_t i = 0; i < 5; ++i) {
      expect_close(double_cell(t, r, 5 + i, cols), fresh[i], t.where(r, cols[5 + i]));
    }
    rec.omitted_recall = opt_double_cell(t, r, 14, cols);
    if (rec.omitted_recall.has_value() != (rec.k > 0)) {
      throw ConsistencyError(t.where(r, "omitted_recall") + " must be filled exactly when k > 0");
    }
    records.push_back(std::move(rec));
  }
  // Grid sizes are not derivable from the rows; take them from the report.
  std::map<std::size_t, std::size_t> totals;
  if (stored.contains("aggregates") && stored.at("aggregates").is_array()) {
    for (const auto& a : stored.at("aggregates")) {
      if (a.contains("k") && a.contains("combinations_total")) {
        totals[a.at("k").get<std::size_t>()] = a.at("combinations_total").get<std::size_t>();
      }
    }
  }
  row_count = records.size();
  return omission_aggregates(supervised::aggregate_omission(records, totals));
}

json audit_demo(const std::filesystem::path& dir, const json& stored, std::size_t& row_count) {
  const auto& cols = kDemoColumns;
  const auto t = read_table(dir / "points.csv", cols);
  std::vector<DemoPoint> points;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    DemoPoint p;
    p.x1 = double_cell(t, r, 0, cols);
    p.x2 = double_cell(t, r, 1, cols);
    const auto flag = [&](std::size_t c) {
      const auto v = uint_cell(t, r, c, cols);
      if (v > 1) throw ReportError(t.where(r, cols[c]) + " must be 0 or 1");
      return static_cast<std::uint8_t>(v);
    };
    p.label = flag(2);
    p.attack_type = text_cell(t, r, 3);
    for (std::size_t i = 0; i < 3; ++i) p.pred[i] = flag(4 + i);
    points.push_back(std::move(p));
  }
  std::vector<std::string> omitted;
  if (stored.contains("omitted")) omitted = stored.at("omitted").get<std::vector<std::string>>();
  row_count = points.size();
  return demo_predictors(points, omitted);
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string mean_std(const json& stat) {
  return fixed(stat.at("mean").get<double>()) + " (" + fixed(stat.at("std").get<double>()) + ")";
}

std::string render_table(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const auto& s = cells[r][c];
      const std::string pad(width[c] - s.size(), ' ');
      // Names left-aligned, numbers right-aligned.
      line += c == 0 ? s + pad : pad + s;
      if (c + 1 < cells[r].size()) line += "  ";
    }
    out += line + '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out += std::string(total - 2, '-') + '\n';
    }
  }
  return out;
}

}  // namespace

nlohmann::json cmd_report(const std::filesystem::path& run_dir) {
  if (!std::filesystem::is_directory(run_dir)) {
    throw ReportError(run_dir.string() + " is not a directory");
  }
  if (std::filesystem::is_empty(run_dir)) throw ReportError(run_dir.string() + " is empty");

  json stored;
  try {
    stored = json::parse(read_text(run_dir / "report.json"));
  } catch (const json::exception& e) {
    throw ReportError(std::string("report.json is not valid JSON: ") + e.what());
  }
  if (!stored.is_object() || stored.value("format", "") != kReportFormat) {
    throw ReportError("report.json is not an occids report");
  }
  const auto kind = stored.value("kind", "");

  json fresh = stored;
  std::size_t rows = 0;
  std::string section;
  if (kind == "occ-eval") {
    section = "models";
    fresh[section] = audit_occ_eval(run_dir, rows);
  } else if (kind == "omission") {
    section = "aggregates";
    fresh[section] = audit_omission(run_dir, stored, rows);
  } else if (kind == "demo") {
    section = "predictors";
    fresh[section] = audit_demo(run_dir, stored, rows);
  } else {
    throw ReportError("report.json has unknown kind '" + kind + "'");
  }
  if (!stored.contains(section)) throw ConsistencyError("report.json has no '" + section + "' section");
  compare_json(stored.at(section), fresh.at(section), section);
  fresh["audit"] = {{"rows", rows}, {"tolerance", kTolerance}, {"status", "consistent"}};
  return fresh;
}

std::string render_report(const nlohmann::json& report) {
  std::string out = "experiment " + report.value("experiment", "") + "  kind " +
                    report.value("kind", "") + "  run " + report.value("run_id", "") + "\n";
  if (report.contains("provenance")) {
    const auto& p = report.at("provenance");
    out += "seed " + std::to_string(p.value("seed", std::uint64_t{0})) + "  version " +
           p.value("artifact_version", "") + "  finished " + p.value("finished_at", "") + "\n";
  }
  out += '\n';

  std::vector<std::vector<std::string>> cells;
  const auto kind = report.value("kind", "");
  if (kind == "occ-eval" && report.contains("models")) {
    cells.push_back({"model", "runs", "accuracy", "attack P", "attack R", "attack F1", "macro F1"});
    for (const auto& m : report.at("models")) {
      cells.push_back({m.at("name").get<std::string>(), std::to_string(m.at("runs").get<std::size_t>()),
                       mean_std(m.at("accuracy")), mean_std(m.at("attack_precision")),
                       mean_std(m.at("attack_recall")), mean_std(m.at("attack_f1")),
                       mean_std(m.at("macro_f1"))});
    }
  } else if (kind == "omission" && report.contains("aggregates")) {
    cells.push_back({"arm", "k", "combos", "accuracy", "attack R", "attack F1", "macro F1",
                     "omitted R"});
    for (const auto& a : report.at("aggregates")) {
      cells.push_back(
          {a.at("arm").get<std::string>(), std::to_string(a.at("k").get<std::size_t>()),
           std::to_string(a.at("combinations_evaluated").get<std::size_t>()) + "/" +
               std::to_string(a.at("combinations_total").get<std::size_t>()),
           mean_std(a.at("accuracy")), mean_std(a.at("attack_recall")), mean_std(a.at("attack_f1")),
           mean_std(a.at("macro_f1")),
           a.at("omitted_recall").is_null() ? "-" : mean_std(a.at("omitted_recall"))});
    }
  } else if (kind == "demo" && report.contains("predictors")) {
    cells.push_back({"predictor", "accuracy", "attack P", "attack R", "attack F1", "macro F1",
                     "omitted R"});
    for (const auto& p : report.at("predictors")) {
      cells.push_back({p.at("name").get<std::string>(), fixed(p.at("accuracy").get<double>()),
                       fixed(p.at("attack_precision").get<double>()),
                       fixed(p.at("attack_recall").get<double>()),
                       fixed(p.at("attack_f1").get<double>()), fixed(p.at("macro_f1").get<double>()),
                       fixed(p.at("omitted_recall").get<double>())});
    }
  }
  out += render_table(cells);
  if (kind == "occ-eval" || kind == "omission") out += "\nvalues are mean (population std) in percent\n";
  return out;
}

}  // namespace occids::cli
