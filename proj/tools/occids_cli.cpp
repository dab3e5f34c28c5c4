// occids: run one-class intrusion-detection experiments from a JSON config.
//
//   occids occ-eval --config exp.json --out out/
//   occids omission --config exp.json --out out/ [--seed N] [--threads N]
//   occids demo     --config exp.json --out out/
//   occids report   out/<experiment>/<run_id> [--out dir]
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 consistency failure.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "occids/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitConsistency = 4;

occids::cli::ExperimentConfig read_config(const std::string& path, std::optional<std::uint64_t> seed,
                                          std::optional<std::size_t> threads,
                                          occids::cli::ExperimentKind kind) {
  std::ifstream in(path);
  if (!in) throw occids::ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw occids::ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw occids::ConfigError("config must be a JSON object");
  if (seed) j["seed"] = *seed;
  if (threads) j["threads"] = *threads;
  const auto wanted = occids::cli::to_string(kind);
  if (j.contains("kind") && j["kind"] != wanted) {
    throw occids::ConfigError("config kind " + j["kind"].dump() + " does not match subcommand " + wanted);
  }
  j["kind"] = wanted;
  return occids::cli::ExperimentConfig::from_json(j, std::filesystem::path(path).parent_path());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-class classification toolkit for intrusion detection experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;

  auto add_experiment = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output root directory")->capture_default_str();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
    return sub;
  };
  auto* occ_eval = add_experiment("occ-eval", "Train detectors on normal traffic and evaluate");
  auto* omission = add_experiment("omission", "Attack-omission grid: RF, noise-augmented RF and OCC");
  auto* demo = add_experiment("demo", "Gaussian demo with point-level predictions");

  std::string run_dir;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Audit a run directory and print its report");
  report->add_option("run_dir", run_dir, "Directory written by an experiment command")->required();
  report->add_option("--out", report_out, "Also write the audited report.json and report.txt here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    using occids::cli::ExperimentKind;
    if (report->parsed()) {
      const auto audited = occids::cli::cmd_report(run_dir);
      const auto text = occids::cli::render_report(audited);
      if (!report_out.empty()) {
        std::filesystem::create_directories(report_out);
        std::ofstream(std::filesystem::path(report_out) / "report.json") << audited.dump(2) << '\n';
        std::ofstream(std::filesystem::path(report_out) / "report.txt") << text;
      }
      std::cout << text << "audit: consistent (" << audited["audit"]["rows"].get<std::size_t>()
                << " rows)\n";
      return 0;
    }
    std::filesystem::path dir;
    if (occ_eval->parsed()) {
      dir = occids::cli::cmd_occ_eval(read_config(config_path, seed, threads, ExperimentKind::occ_eval),
                                      out_dir);
    } else if (omission->parsed()) {
      dir = occids::cli::cmd_omission(read_config(config_path, seed, threads, ExperimentKind::omission),
                                      out_dir);
    } else if (demo->parsed()) {
      dir = occids::cli::cmd_demo(read_config(config_path, seed, threads, ExperimentKind::demo), out_dir);
    }
    std::ifstream txt(dir / "report.txt");
    std::cout << txt.rdbuf() << "wrote " << dir.string() << '\n';
    return 0;
  } catch (const occids::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const occids::ConsistencyError& e) {
    std::cerr << "consistency error: " << e.what() << '\n';
    return kExitConsistency;
  } catch (const occids::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
