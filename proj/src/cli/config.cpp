#include <cstdio>
#include <fstream>
#include <set>

#include "occids/experiment.hpp"

namespace occids::cli {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

ExperimentKind kind_from_string(const std::string& text) {
  if (text == "occ-eval") return ExperimentKind::occ_eval;
  if (text == "omission") return ExperimentKind::omission;
  if (text == "demo") return ExperimentKind::demo;
  throw ConfigError("unknown experiment kind '" + text + "'");
}

// Stream id of the forest seed derived from the global seed.
constexpr std::uint64_t kForestStream = 0xF0;

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::occ_eval: return "occ-eval";
    case ExperimentKind::omission: return "omission";
    case ExperimentKind::demo: return "demo";
  }
  return "unknown";
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  require_keys(j, "config",
               {"experiment", "kind", "seed", "threads", "dataset", "split", "preprocess",
                "detectors", "ensemble", "random_forest", "omission", "demo", "save_models"});
  ExperimentConfig c;
  if (!j.contains("seed") || !j.at("seed").is_number_integer() ||
      (!j.at("seed").is_number_unsigned() && j.at("seed").get<std::int64_t>() < 0)) {
    throw ConfigError("config.seed is mandatory and must be a non-negative integer");
  }
  c.seed = j.at("seed").is_number_unsigned() ? j.at("seed").get<std::uint64_t>()
                                               : static_cast<std::uint64_t>(j.at("seed").get<std::int64_t>());
  c.name = get_or<std::string>(j, "experiment", "", "config");
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos || c.name == "." ||
      c.name == "..") {
    throw ConfigError("config.experiment must be a non-empty plain name");
  }
  c.kind = kind_from_string(get_or<std::string>(j, "kind", "occ-eval", "config"));
  c.threads = get_or<std::size_t>(j, "threads", 1, "config");
  c.save_models = get_or<bool>(j, "save_models", false, "config");

  const json ds = j.value("dataset", json{{"source", "gaussian-demo"}});
  require_keys(ds, "dataset", {"source", "path", "schema"});
  const auto source = get_or<std::string>(ds, "source", "gaussian-demo", "dataset");
  if (source == "csv") {
    c.demo_source = false;
    if (!ds.contains("path") || !ds.contains("schema")) {
      throw ConfigError("dataset.source 'csv' needs 'path' and 'schema'");
    }
    c.csv_path = resolve(base_dir, get_or<std::string>(ds, "path", "", "dataset"));
    c.schema_path = resolve(base_dir, get_or<std::string>(ds, "schema", "", "dataset"));
  } else if (source != "gaussian-demo") {
    throw ConfigError("dataset.source must be 'csv' or 'gaussian-demo'");
  }
  if (c.kind == ExperimentKind::demo && !c.demo_source) {
    throw ConfigError("the demo experiment only runs on the gaussian-demo source");
  }

  const json split = j.value("split", json::object());
  require_keys(split, "split", {"ratio", "n_runs"});
  c.split.ratio = get_or<double>(split, "ratio", 0.8, "split");
  c.split.n_runs = get_or<std::size_t>(split, "n_runs", 10, "split");
  c.split.base_seed = c.seed;
  if (!(c.split.ratio > 0.0 && c.split.ratio < 1.0)) throw ConfigError("split.ratio must be in (0, 1)");
  if (c.split.n_runs == 0) throw ConfigError("split.n_runs must be positive");

  const json pre = j.value("preprocess", json::object());
  require_keys(pre, "preprocess", {"fit_on"});
  const auto fit_on = get_or<std::string>(pre, "fit_on", "full", "preprocess");
  if (fit_on != "full" && fit_on != "train") {
    throw ConfigError("preprocess.fit_on must be 'full' or 'train'");
  }
  c.fit_on_train = fit_on == "train";
  if (c.fit_on_train && c.kind != ExperimentKind::occ_eval) {
    throw ConfigError("preprocess.fit_on 'train' is only supported by occ-eval");
  }

  const json dets = j.value("detectors", json::array());
  if (!dets.is_array()) throw ConfigError("config.detectors must be an array");
  std::set<std::string> names;
  for (const auto& d : dets) {
    require_keys(d, "detector", {"name", "variant", "n_trees", "subsample", "k_neighbors",
                                 "n_components"});
    NamedDetector nd;
    nd.name = get_or<std::string>(d, "name", "", "detector");
    if (nd.name.empty()) throw ConfigError("every detector needs a name");
    if (!names.insert(nd.name).second) throw ConfigError("duplicate detector name '" + nd.name + "'");
    try {
      nd.config = detectors::DetectorConfig::from_json(d);
    } catch (const json::exception& e) {
      throw ConfigError("detector '" + nd.name + "': " + e.what());
    } catch (const ArgumentError& e) {
      throw ConfigError("detector '" + nd.name + "': " + e.what());
    }
    nd.config.seed = mix_seed(c.seed, fnv1a(nd.name));
    c.detectors.push_back(std::move(nd));
  }
  if (c.kind == ExperimentKind::occ_eval && c.detectors.empty()) {
    throw ConfigError("occ-eval needs at least one detector");
  }

  const json ens = j.value("ensemble", json::object());
  require_keys(ens, "ensemble", {"members", "levels"});
  c.ensemble_members = get_or<std::vector<std::string>>(ens, "members", {}, "ensemble");
  c.ensemble_levels = get_or<std::vector<std::size_t>>(ens, "levels", {}, "ensemble");
  for (const auto& m : c.ensemble_members) {
    if (!names.contains(m)) throw ConfigError("ensemble member '" + m + "' is not a defined detector");
  }
  const std::size_t members = c.ensemble_members.empty() ? c.detectors.size() : c.ensemble_members.size();
  for (auto k : c.ensemble_levels) {
    if (k < 1 || k > members) {
      throw ConfigError("ensemble level " + std::to_string(k) + " outside 1.." + std::to_string(members));
    }
  }

  const json rf = j.value("random_forest", json::object());
  require_keys(rf, "random_forest", {"n_trees", "max_depth", "min_leaf", "features_per_split"});
  try {
    c.forest = supervised::ForestConfig::from_json(rf);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("random_forest: ") + e.what());
  }
  if (c.forest.n_trees == 0) throw ConfigError("random_forest.n_trees must be positive");
  if (c.forest.min_leaf == 0) throw ConfigError("random_forest.min_leaf must be positive");
  c.forest.seed = mix_seed(c.seed, kForestStream);

  const json om = j.value("omission", json::object());
  require_keys(om, "omission", {"k_values", "max_combinations", "with_noise", "occ_detector"});
  c.omission.k_values = get_or<std::vector<std::size_t>>(om, "k_values", {}, "omission");
  c.omission.max_combinations = get_or<std::size_t>(om, "max_combinations", 20, "omission");
  c.omission.with_noise = get_or<bool>(om, "with_noise", true, "omission");
  if (om.contains("occ_detector")) {
    c.omission.occ_detector = get_or<std::string>(om, "occ_detector", "", "omission");
    if (!names.contains(*c.omission.occ_detector)) {
      throw ConfigError("omission.occ_detector '" + *c.omission.occ_detector + "' is not defined");
    }
  }

  const json demo = j.value("demo", json::object());
  require_keys(demo, "demo", {"omit", "occ_detector"});
  c.demo.omit = get_or<std::vector<std::string>>(demo, "omit", c.demo.omit, "demo");
  c.demo.occ_detector = get_or<std::string>(demo, "occ_detector", "", "demo");
  if (!c.demo.occ_detector.empty() && !names.contains(c.demo.occ_detector)) {
    throw ConfigError("demo.occ_detector '" + c.demo.occ_detector + "' is not defined");
  }
  return c;
}

json ExperimentConfig::to_json() const {
  json dets = json::array();
  for (const auto& d : detectors) {
    auto e = d.config.to_json();
    e.erase("seed");
    e["name"] = d.name;
    dets.push_back(e);
  }
  json ds = demo_source ? json{{"source", "gaussian-demo"}}
                        : json{{"source", "csv"},
                               {"path", csv_path.generic_string()},
                               {"schema", schema_path.generic_string()}};
  auto rf = forest.to_json();
  rf.erase("seed");
  json om = {{"k_values", omission.k_values},
             {"max_combinations", omission.max_combinations},
             {"with_noise", omission.with_noise}};
  if (omission.occ_detector) om["occ_detector"] = *omission.occ_detector;
  return {
      {"experiment", name},
      {"kind", to_string(kind)},
      {"seed", seed},
      {"threads", threads},
      {"dataset", ds},
      {"split", {{"ratio", split.ratio}, {"n_runs", split.n_runs}}},
      {"preprocess", {{"fit_on", fit_on_train ? "train" : "full"}}},
      {"detectors", dets},
      {"ensemble", {{"members", ensemble_members}, {"levels", ensemble_levels}}},
      {"random_forest", rf},
      {"omission", om},
      {"demo", {{"omit", demo.omit}, {"occ_detector", demo.occ_detector}}},
      {"save_models", save_models},
  };
}

const NamedDetector& ExperimentConfig::detector(const std::string& name) const {
  for (const auto& d : detectors) {
    if (d.name == name) return d;
  }
  throw ConfigError("no detector named '" + name + "'");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j, path.parent_path());
}

std::string run_id(const ExperimentConfig& config) {
  auto canonical = config.to_json();
  canonical.erase("threads");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical.dump())));
  return buf;
}

}  // namespace occids::cli
