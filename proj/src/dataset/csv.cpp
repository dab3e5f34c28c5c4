#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "occids/dataset.hpp"

namespace occids::dataset {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// One parsed record plus the physical line it started on.
struct Record {
  std::vector<Cell> cells;
  std::size_t line = 0;
};

std::vector<Record> parse_records(const std::string& text) {
  std::vector<Record> out;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  bool record_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    if (field.empty()) {
      current.cells.emplace_back(std::nullopt);
    } else {
      current.cells.emplace_back(field);
    }
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    // A physically empty line is skipped rather than read as a 1-cell row.
    const bool blank = current.cells.size() == 1 && !current.cells[0] && !record_started;
    if (!blank) out.push_back(std::move(current));
    current = Record{};
    record_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) {
          throw ParseError("line " + std::to_string(current.line) +
                           ": quote inside unquoted field");
        }
        in_quotes = true;
        field_quoted = true;
        record_started = true;
        break;
      case ',':
        end_field();
        record_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        current.line = line;
        break;
      default:
        field.push_back(c);
        record_started = true;
    }
  }
  if (in_quotes) {
    throw ParseError("line " + std::to_string(current.line) + ": unterminated quoted field");
  }
  if (record_started || !field.empty() || field_quoted) end_record();
  return out;
}

}  // namespace

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::binary_label: return "binary-label";
    case ColumnKind::attack_type_tag: return "attack-type-tag";
    case ColumnKind::ignored: return "ignored";
  }
  return "unknown";
}

ColumnKind column_kind_from_string(const std::string& text) {
  if (text == "numeric") return ColumnKind::numeric;
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "binary-label") return ColumnKind::binary_label;
  if (text == "attack-type-tag") return ColumnKind::attack_type_tag;
  if (text == "ignored") return ColumnKind::ignored;
  throw SchemaError("unknown column kind '" + text + "'");
}

Schema::Schema(std::vector<Column> columns, std::vector<std::string> normal_labels,
               std::vector<std::string> missing_tokens)
    : columns_(std::move(columns)),
      normal_labels_(std::move(normal_labels)),
      missing_tokens_(std::move(missing_tokens)) {
  for (auto& l : normal_labels_) l = lower(l);
  std::set<std::string> names;
  std::optional<std::size_t> label;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (!names.insert(columns_[i].name).second) {
      throw SchemaError("duplicate column name '" + columns_[i].name + "'");
    }
    if (columns_[i].kind == ColumnKind::binary_label) {
      if (label) throw SchemaError("schema has more than one binary-label column");
      label = i;
    } else if (columns_[i].kind == ColumnKind::attack_type_tag) {
      if (tag_index_) throw SchemaError("schema has more than one attack-type-tag column");
      tag_index_ = i;
    }
  }
  if (!label) throw SchemaError("schema has no binary-label column");
  label_index_ = *label;
}

std::vector<std::string> Schema::default_normal_labels() {
  return {"0", "normal", "benign"};
}

Schema Schema::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("columns")) {
    throw SchemaError("schema JSON must be an object with a 'columns' entry");
  }
  std::vector<Column> columns;
  const auto& cols = j.at("columns");
  try {
    if (cols.is_object()) {
      for (const auto& [name, kind] : cols.items()) {
        columns.push_back({name, column_kind_from_string(kind.get<std::string>())});
      }
    } else if (cols.is_array()) {
      for (const auto& c : cols) {
        columns.push_back({c.at("name").get<std::string>(),
                           column_kind_from_string(c.at("kind").get<std::string>())});
      }
    } else {
      throw SchemaError("'columns' must be an object or an array");
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
  auto normal = default_normal_labels();
  if (j.contains("normal_labels")) normal = j.at("normal_labels").get<std::vector<std::string>>();
  std::vector<std::string> missing;
  if (j.contains("missing_values")) missing = j.at("missing_values").get<std::vector<std::string>>();
  return Schema(std::move(columns), std::move(normal), std::move(missing));
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json Schema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns_) cols.push_back({{"name", c.name}, {"kind", to_string(c.kind)}});
  return {{"columns", cols}, {"normal_labels", normal_labels_}, {"missing_values", missing_tokens_}};
}

std::optional<std::size_t> Schema::find(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

bool Schema::is_missing_token(const std::string& cell) const {
  return cell.empty() ||
         std::find(missing_tokens_.begin(), missing_tokens_.end(), cell) != missing_tokens_.end();
}

std::uint8_t Schema::parse_label(const std::string& cell) const {
  const auto l = lower(cell);
  return std::find(normal_labels_.begin(), normal_labels_.end(), l) != normal_labels_.end()
             ? kNormal
             : kAttack;
}

Schema Schema::reordered_to(const std::vector<std::string>& header) const {
  std::vector<Column> ordered;
  ordered.reserve(header.size());
  for (const auto& name : header) {
    const auto idx = find(name);
    if (!idx) throw SchemaError("CSV column '" + name + "' is not in the schema");
    ordered.push_back(columns_[*idx]);
  }
  if (ordered.size() != columns_.size()) {
    for (const auto& c : columns_) {
      if (std::find(header.begin(), header.end(), c.name) == header.end()) {
        throw SchemaError("schema column '" + c.name + "' is missing from the CSV header");
      }
    }
  }
  return Schema(std::move(ordered), normal_labels_, missing_tokens_);
}

RawTable RawTable::select_rows(std::span<const std::size_t> indices) const {
  RawTable out;
  out.header = header;
  out.rows.reserve(indices.size());
  for (auto i : indices) out.rows.push_back(rows[i]);
  return out;
}

std::vector<std::vector<Cell>> parse_csv_rows(const std::string& text) {
  std::vector<std::vector<Cell>> out;
  for (auto& rec : parse_records(text)) out.push_back(std::move(rec.cells));
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

RawTable parse_csv(const std::string& text, const Schema& schema) {
  auto records = parse_records(text);
  if (records.empty()) throw ParseError("CSV has no header row");

  RawTable table;
  for (auto& cell : records.front().cells) table.header.push_back(cell.value_or(""));
  {
    std::set<std::string> seen;
    for (const auto& h : table.header) {
      if (!seen.insert(h).second) throw SchemaError("duplicate CSV column '" + h + "'");
    }
  }
  const Schema ordered = schema.reordered_to(table.header);

  table.rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.cells.size() != table.header.size()) {
      throw ParseError("line " + std::to_string(rec.line) + ": expected " +
                       std::to_string(table.header.size()) + " fields, found " +
                       std::to_string(rec.cells.size()));
    }
    for (auto& cell : rec.cells) {
      if (cell && ordered.is_missing_token(*cell)) cell.reset();
    }
    table.rows.push_back(std::move(rec.cells));
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open CSV file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

Labels raw_labels(const RawTable& table, const Schema& schema) {
  const Schema ordered = schema.reordered_to(table.header);
  const auto li = ordered.label_index();
  Labels y;
  y.reserve(table.row_count());
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    const auto& cell = table.rows[r][li];
    if (!cell) {
      throw ParseError("row " + std::to_string(r + 1) + ": missing value in label column '" +
                       table.header[li] + "'");
    }
    y.push_back(ordered.parse_label(*cell));
  }
  return y;
}

void write_dataset(const Dataset& data, const std::filesystem::path& csv_path,
                   const std::filesystem::path& manifest_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw Error("cannot write " + csv_path.string());
  for (const auto& name : data.feature_names) csv << csv_quote(name) << ',';
  csv << "label,attack_type\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (double v : data.X.row(r)) csv << format_double(v) << ',';
    csv << static_cast<int>(data.y[r]) << ',' << csv_quote(data.attack_type[r]) << '\n';
  }

  nlohmann::json manifest = {
      {"feature_names", data.feature_names},
      {"label_column", "label"},
      {"attack_type_column", "attack_type"},
      {"row_count", data.size()},
      {"normal_count", data.normal_count()},
      {"attack_count", data.attack_count()},
      {"feature_count", data.X.cols()},
  };
  std::ofstream m(manifest_path);
  if (!m) throw Error("cannot write " + manifest_path.string());
  m << manifest.dump(2) << '\n';
}

}  // namespace occids::dataset
