#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "occids/common.hpp"
#include "occids/matrix.hpp"

namespace occids::dataset {

enum class ColumnKind { numeric, categorical, binary_label, attack_type_tag, ignored };

std::string to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& text);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
};

/// Ordered column roles of an input table.
///
/// Exactly one binary-label column and at most one attack-type-tag column.
/// Label cells whose lower-cased text appears in `normal_labels` map to 0,
/// anything else to 1. Cells equal to one of `missing_tokens` (or empty) are
/// treated as missing.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Column> columns,
                  std::vector<std::string> normal_labels = default_normal_labels(),
                  std::vector<std::string> missing_tokens = {});

  /// Accepts {"columns": {"name": "kind", ...}} or
  /// {"columns": [{"name": ..., "kind": ...}, ...]}, plus optional
  /// "normal_labels" and "missing_values" arrays.
  static Schema from_json(const nlohmann::json& j);
  static Schema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  static std::vector<std::string> default_normal_labels();

  const std::vector<Column>& columns() const { return columns_; }
  std::size_t label_index() const { return label_index_; }
  std::optional<std::size_t> tag_index() const { return tag_index_; }
  std::optional<std::size_t> find(const std::string& name) const;

  bool is_missing_token(const std::string& cell) const;
  std::uint8_t parse_label(const std::string& cell) const;

  /// Same columns reordered to match `header`. Throws SchemaError when the
  /// header names a column the schema does not know or omits one it does.
  Schema reordered_to(const std::vector<std::string>& header) const;

 private:
  std::vector<Column> columns_;
  std::vector<std::string> normal_labels_;
  std::vector<std::string> missing_tokens_;
  std::size_t label_index_ = 0;
  std::optional<std::size_t> tag_index_;
};

using Cell = std::optional<std::string>;

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  std::size_t row_count() const { return rows.size(); }
  std::size_t col_count() const { return header.size(); }
  RawTable select_rows(std::span<const std::size_t> indices) const;
};

/// Schema-free RFC-4180 parse: every record, header included. Empty cells
/// come back as nullopt.
std::vector<std::vector<Cell>> parse_csv_rows(const std::string& text);

/// Quotes a field when it holds a comma, quote or line break.
std::string csv_quote(const std::string& s);

/// Parses RFC-4180 CSV text. The header must match the schema's column names
/// (in any order); the returned table keeps the file's column order.
RawTable parse_csv(const std::string& text, const Schema& schema);
RawTable load_csv(const std::filesystem::path& path, const Schema& schema);

/// Binary labels of a raw table (0 normal, 1 attack).
Labels raw_labels(const RawTable& table, const Schema& schema);

struct PreprocessorState {
  std::map<std::string, double> imputation_means;
  std::map<std::string, std::vector<std::string>> category_maps;
  std::vector<std::string> feature_names;
  /// One (min, max) pair per output feature, aligned with feature_names.
  std::vector<std::pair<double, double>> minmax;

  nlohmann::json to_json() const;
  static PreprocessorState from_json(const nlohmann::json& j);
  friend bool operator==(const PreprocessorState&, const PreprocessorState&) = default;
};

struct Dataset {
  Matrix X;
  Labels y;
  std::vector<std::string> attack_type;
  std::vector<std::string> feature_names;

  std::size_t size() const { return y.size(); }
  std::size_t normal_count() const;
  std::size_t attack_count() const { return size() - normal_count(); }
  Dataset select_rows(std::span<const std::size_t> indices) const;
  /// Distinct non-empty attack tags in lexicographic order.
  std::vector<std::string> attack_types() const;
  /// Rows of `other` appended; feature counts must match.
  void append(const Dataset& other);
};

PreprocessorState fit_preprocessor(const RawTable& table, const Schema& schema);
Dataset apply_preprocessor(const PreprocessorState& state, const RawTable& table,
                           const Schema& schema);

struct SplitPlan {
  double ratio = 0.8;
  std::size_t n_runs = 10;
  std::uint64_t base_seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class seeded shuffle followed by a prefix cut. Indices are returned in
/// ascending order.
SplitIndices stratified_split_indices(const Labels& labels, const SplitPlan& plan,
                                      std::size_t run_index);
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, const SplitPlan& plan,
                                             std::size_t run_index);

Dataset filter_normal(const Dataset& data);

/// Drops every row whose attack tag is in `combo`. Throws ArgumentError for a
/// tag that does not occur in `data`.
Dataset omit_attack_types(const Dataset& data, const std::set<std::string>& combo);

/// As omit_attack_types but tags absent from `data` are ignored. Used on
/// training folds, which may lack a rare tag present in the full dataset.
Dataset remove_attack_types(const Dataset& data, const std::set<std::string>& combo);

struct GaussianCluster {
  std::string attack_type;  // empty for the normal cluster
  double center_x = 0.0;
  double center_y = 0.0;
  double stddev = 1.0;
  std::size_t count = 0;
};

/// Cluster layout of the two-feature demo: a normal cluster at the origin, an
/// attack cluster "a1" straight above it and "a2" straight to its right. The
/// centers are 10 standard deviations apart.
std::vector<GaussianCluster> default_demo_clusters();

Dataset generate_gaussian_demo(std::uint64_t seed);
Dataset generate_gaussian_demo(std::uint64_t seed, const std::vector<GaussianCluster>& clusters);

inline constexpr const char* kNoiseTag = "synthetic-noise";

/// n rows of independent U[0,1] features, all labeled attack.
Dataset generate_uniform_noise(std::size_t n, std::size_t d, std::uint64_t seed);

/// Writes `data` as CSV (feature columns, then label and attack_type) plus a
/// JSON manifest describing the columns and row counts.
void write_dataset(const Dataset& data, const std::filesystem::path& csv_path,
                   const std::filesystem::path& manifest_path);

}  // namespace occids::dataset
