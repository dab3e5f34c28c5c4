#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "occids/dataset.hpp"

namespace occids::dataset {

namespace {

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  std::size_t b = 0;
  std::size_t e = cell.size();
  while (b < e && std::isspace(static_cast<unsigned char>(cell[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(cell[e - 1]))) --e;
  if (b < e && cell[b] == '+') ++b;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e, v);
  if (ec != std::errc() || ptr != cell.data() + e || !std::isfinite(v)) {
    throw ParseError("row " + std::to_string(row + 1) + ", column '" + column +
                     "': not a finite number: '" + cell + "'");
  }
  return v;
}

// Appends the imputed, one-hot encoded (unscaled) features of one row.
void encode_row(const PreprocessorState& state, const Schema& schema,
                const std::vector<Cell>& row, std::size_t row_index, std::vector<double>& out) {
  const auto& cols = schema.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto& col = cols[c];
    if (col.kind == ColumnKind::numeric) {
      const auto& cell = row[c];
      out.push_back(cell ? parse_number(*cell, row_index, col.name)
                         : state.imputation_means.at(col.name));
    } else if (col.kind == ColumnKind::categorical) {
      const auto& cats = state.category_maps.at(col.name);
      const std::size_t base = out.size();
      out.resize(base + cats.size(), 0.0);
      if (row[c]) {
        const auto it = std::lower_bound(cats.begin(), cats.end(), *row[c]);
        if (it != cats.end() && *it == *row[c]) out[base + (it - cats.begin())] = 1.0;
      }
    }
  }
}

}  // namespace

nlohmann::json PreprocessorState::to_json() const {
  nlohmann::json mm = nlohmann::json::array();
  for (const auto& [lo, hi] : minmax) mm.push_back({lo, hi});
  return {{"imputation_means", imputation_means},
          {"category_maps", category_maps},
          {"feature_names", feature_names},
          {"minmax", mm}};
}

PreprocessorState PreprocessorState::from_json(const nlohmann::json& j) {
  PreprocessorState s;
  s.imputation_means = j.at("imputation_means").get<std::map<std::string, double>>();
  s.category_maps = j.at("category_maps").get<std::map<std::string, std::vector<std::string>>>();
  s.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  for (const auto& p : j.at("minmax")) s.minmax.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return s;
}

PreprocessorState fit_preprocessor(const RawTable& table, const Schema& schema) {
  const Schema ordered = schema.reordered_to(table.header);
  const auto& cols = ordered.columns();

  PreprocessorState state;
  bool any_feature = false;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto& col = cols[c];
    if (col.kind == ColumnKind::numeric) {
      any_feature = true;
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t r = 0; r < table.row_count(); ++r) {
        if (const auto& cell = table.rows[r][c]) {
          sum += parse_number(*cell, r, col.name);
          ++n;
        }
      }
      if (n == 0) {
        if (table.row_count() == 0) throw FitError("cannot fit preprocessor on an empty table");
        throw FitError("numeric column '" + col.name + "' has no non-missing values");
      }
      state.imputation_means[col.name] = sum / static_cast<double>(n);
      state.feature_names.push_back(col.name);
    } else if (col.kind == ColumnKind::categorical) {
      any_feature = true;
      std::set<std::string> values;
      for (const auto& row : table.rows) {
        if (row[c]) values.insert(*row[c]);
      }
      std::vector<std::string> cats(values.begin(), values.end());
      for (const auto& v : cats) state.feature_names.push_back(col.name + "=" + v);
      state.category_maps[col.name] = std::move(cats);
    }
  }
  if (!any_feature) throw SchemaError("schema has no numeric or categorical feature columns");
  if (table.row_count() == 0) throw FitError("cannot fit preprocessor on an empty table");

  const std::size_t d = state.feature_names.size();
  state.minmax.assign(d, {std::numeric_limits<double>::infinity(),
                          -std::numeric_limits<double>::infinity()});
  std::vector<double> buf;
  buf.reserve(d);
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    buf.clear();
    encode_row(state, ordered, table.rows[r], r, buf);
    for (std::size_t f = 0; f < d; ++f) {
      state.minmax[f].first = std::min(state.minmax[f].first, buf[f]);
      state.minmax[f].second = std::max(state.minmax[f].second, buf[f]);
    }
  }
  return state;
}

Dataset apply_preprocessor(const PreprocessorState& state, const RawTable& table,
                           const Schema& schema) {
  const Schema ordered = schema.reordered_to(table.header);
  for (const auto& col : ordered.columns()) {
    const bool known = col.kind == ColumnKind::numeric
                           ? state.imputation_means.contains(col.name)
                           : col.kind != ColumnKind::categorical || state.category_maps.contains(col.name);
    if (!known) throw SchemaError("column '" + col.name + "' was not seen when fitting");
  }

  const std::size_t d = state.feature_names.size();
  Dataset out;
  out.feature_names = state.feature_names;
  out.X = Matrix(table.row_count(), d);
  out.y = raw_labels(table, ordered);
  out.attack_type.resize(table.row_count());

  const auto tag = ordered.tag_index();
  std::vector<double> buf;
  buf.reserve(d);
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    buf.clear();
    encode_row(state, ordered, table.rows[r], r, buf);
    if (buf.size() != d) throw SchemaError("encoded width does not match fitted feature count");
    auto dst = out.X.row(r);
    for (std::size_t f = 0; f < d; ++f) {
      const auto [lo, hi] = state.minmax[f];
      dst[f] = hi > lo ? (buf[f] - lo) / (hi - lo) : 0.0;
    }
    if (out.y[r] == kAttack && tag) {
      const auto& cell = table.rows[r][*tag];
      out.attack_type[r] = cell ? *cell : "unknown";
    }
  }
  return out;
}

}  // namespace occids::dataset
