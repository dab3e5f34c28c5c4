#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "occids/dataset.hpp"
#include "occids/detectors.hpp"
#include "occids/supervised.hpp"

namespace occids::cli {

inline constexpr const char* kArtifactVersion = "1.0.0";

enum class ExperimentKind { occ_eval, omission, demo };
std::string to_string(ExperimentKind kind);

struct NamedDetector {
  std::string name;
  detectors::DetectorConfig config;
};

struct OmissionSettings {
  std::vector<std::size_t> k_values;  // empty = 0..number of attack types
  std::size_t max_combinations = 20;
  bool with_noise = true;
  std::optional<std::string> occ_detector;
};

struct DemoSettings {
  std::vector<std::string> omit = {"a1"};
  std::string occ_detector;  // empty = first detector, or a default stochastic forest
};

/// Parsed experiment file. Relative paths are resolved against the file's
/// directory. Per-detector seeds are derived from `seed` and the detector
/// name, so overriding `seed` reseeds the whole experiment.
struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::occ_eval;

  bool demo_source = true;
  std::filesystem::path csv_path;
  std::filesystem::path schema_path;

  dataset::SplitPlan split;
  bool fit_on_train = false;

  std::vector<NamedDetector> detectors;
  std::vector<std::string> ensemble_members;  // empty = every detector
  std::vector<std::size_t> ensemble_levels;   // empty = 1..members

  supervised::ForestConfig forest;
  OmissionSettings omission;
  DemoSettings demo;

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool save_models = false;

  /// Throws ConfigError on unknown keys, missing seed or dangling names.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  /// Canonical form with every default filled in; hashed into the run id.
  nlohmann::json to_json() const;

  const NamedDetector& detector(const std::string& name) const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Hex FNV-1a of the canonical config; the directory name of a run.
std::string run_id(const ExperimentConfig& config);

/// Every command writes into <out_root>/<experiment>/<run_id>/ and returns that
/// directory.
std::filesystem::path cmd_occ_eval(const ExperimentConfig& config,
                                   const std::filesystem::path& out_root);
std::filesystem::path cmd_omission(const ExperimentConfig& config,
                                   const std::filesystem::path& out_root);
std::filesystem::path cmd_demo(const ExperimentConfig& config,
                               const std::filesystem::path& out_root);

/// Recomputes every aggregate of a run directory from its persisted rows.
/// Throws ReportError for missing or unreadable files and ConsistencyError
/// when a stored number differs from its recomputation by more than 1e-9.
/// Returns the recomputed report.
nlohmann::json cmd_report(const std::filesystem::path& run_dir);

/// Aligned-column text rendering of a report.
std::string render_report(const nlohmann::json& report);

}  // namespace occids::cli
