#include <fstream>

#include "kd_index.hpp"
#include "occids/detectors.hpp"

namespace occids::detectors {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

nlohmann::json trees_to_json(const std::vector<Tree>& trees) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : trees) {
    nlohmann::json left, right, dim, split, lo, hi, mass;
    for (const auto& n : t) {
      left.push_back(n.left);
      right.push_back(n.right);
      dim.push_back(n.dim);
      split.push_back(n.split);
      lo.push_back(n.lo);
      hi.push_back(n.hi);
      mass.push_back(n.mass);
    }
    out.push_back({{"left", left}, {"right", right}, {"dim", dim}, {"split", split},
                   {"lo", lo}, {"hi", hi}, {"mass", mass}});
  }
  return out;
}

std::vector<Tree> trees_from_json(const nlohmann::json& j) {
  std::vector<Tree> trees;
  for (const auto& t : j) {
    const auto size = t.at("left").size();
    Tree tree(size);
    for (std::size_t i = 0; i < size; ++i) {
      tree[i].left = t.at("left")[i].get<std::int32_t>();
      tree[i].right = t.at("right")[i].get<std::int32_t>();
      tree[i].dim = t.at("dim")[i].get<std::uint32_t>();
      tree[i].split = t.at("split")[i].get<double>();
      tree[i].lo = t.at("lo")[i].get<double>();
      tree[i].hi = t.at("hi")[i].get<double>();
      tree[i].mass = t.at("mass")[i].get<std::uint32_t>();
    }
    trees.push_back(std::move(tree));
  }
  return trees;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw ParseError("model matrix has inconsistent size");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(r * cols), cols, m.row(r).begin());
  }
  return m;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::isolation_forest: return "isolation-forest";
    case Variant::stochastic_forest: return "stochastic-forest";
    case Variant::lof: return "lof";
    case Variant::linear_recon: return "linear-recon";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& text) {
  if (text == "isolation-forest") return Variant::isolation_forest;
  if (text == "stochastic-forest") return Variant::stochastic_forest;
  if (text == "lof") return Variant::lof;
  if (text == "linear-recon") return Variant::linear_recon;
  throw ArgumentError("unknown detector variant '" + text + "'");
}

nlohmann::json DetectorConfig::to_json() const {
  nlohmann::json j = {{"variant", to_string(variant)},
                      {"n_trees", n_trees},
                      {"subsample", subsample},
                      {"k_neighbors", k_neighbors},
                      {"seed", seed}};
  if (n_components) j["n_components"] = *n_components;
  return j;
}

DetectorConfig DetectorConfig::from_json(const nlohmann::json& j) {
  DetectorConfig c;
  c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.n_trees = j.value("n_trees", c.n_trees);
  c.subsample = j.value("subsample", c.subsample);
  c.k_neighbors = j.value("k_neighbors", c.k_neighbors);
  if (j.contains("n_components") && !j.at("n_components").is_null()) {
    c.n_components = j.at("n_components").get<std::size_t>();
  }
  c.seed = j.value("seed", c.seed);
  return c;
}

FittedDetector::FittedDetector(DetectorConfig config, std::size_t feature_count, Model model)
    : config_(std::move(config)), feature_count_(feature_count), model_(std::move(model)) {}

FittedDetector fit(const DetectorConfig& config, const Matrix& x_normal, std::size_t threads) {
  if (x_normal.rows() == 0) throw FitError("cannot fit a detector on zero rows");
  if (x_normal.cols() == 0) throw FitError("cannot fit a detector on zero features");
  switch (config.variant) {
    case Variant::isolation_forest:
      return {config, x_normal.cols(), fit_isolation_forest(config, x_normal, threads)};
    case Variant::stochastic_forest:
      return {config, x_normal.cols(), fit_stochastic_forest(config, x_normal, threads)};
    case Variant::lof:
      return {config, x_normal.cols(), fit_lof(config, x_normal, threads)};
    case Variant::linear_recon:
      return {config, x_normal.cols(), fit_linear_recon(config, x_normal)};
  }
  throw ArgumentError("unknown detector variant");
}

ScoreVector score(const FittedDetector& det, const Matrix& x, std::size_t threads) {
  if (x.rows() > 0 && x.cols() != det.feature_count()) {
    throw ShapeError("detector expects " + std::to_string(det.feature_count()) +
                     " features, got " + std::to_string(x.cols()));
  }
  ScoreVector out(x.rows());
  std::visit(
      overloaded{
          [&](const IsolationForestModel& m) {
            const double c = isolation_path_adjustment(m.subsample);
            parallel_for(x.rows(), threads, [&](std::size_t i) {
              out[i] = -std::exp2(-isolation_path_length(m, x.row(i)) / c);
            });
          },
          [&](const StochasticForestModel& m) {
            parallel_for(x.rows(), threads,
                         [&](std::size_t i) { out[i] = stochastic_path_length(m, x.row(i)); });
          },
          [&](const LofModel& m) {
            parallel_for(x.rows(), threads, [&](std::size_t i) { out[i] = lof_score(m, x.row(i)); });
          },
          [&](const LinearReconModel& m) {
            parallel_for(x.rows(), threads,
                         [&](std::size_t i) { out[i] = -linear_recon_error(m, x.row(i)); });
          },
      },
      det.model());
  return out;
}

std::vector<double> mean_path_length(const FittedDetector& det, const Matrix& x) {
  std::vector<double> out;
  out.reserve(x.rows());
  if (const auto* m = std::get_if<IsolationForestModel>(&det.model())) {
    for (std::size_t i = 0; i < x.rows(); ++i) out.push_back(isolation_path_length(*m, x.row(i)));
  } else if (const auto* s = std::get_if<StochasticForestModel>(&det.model())) {
    for (std::size_t i = 0; i < x.rows(); ++i) out.push_back(stochastic_path_length(*s, x.row(i)));
  } else {
    throw ArgumentError("mean_path_length applies to forest detectors only");
  }
  return out;
}

nlohmann::json FittedDetector::to_json() const {
  nlohmann::json state = std::visit(
      overloaded{
          [](const IsolationForestModel& m) -> nlohmann::json {
            return {{"subsample", m.subsample},
                    {"height_limit", m.height_limit},
                    {"trees", trees_to_json(m.trees)}};
          },
          [](const StochasticForestModel& m) -> nlohmann::json {
            return {{"subsample", m.subsample},
                    {"height_limit", m.height_limit},
                    {"trees", trees_to_json(m.trees)}};
          },
          [](const LofModel& m) -> nlohmann::json {
            return {{"k", m.k},
                    {"train", matrix_to_json(m.train)},
                    {"k_distance", m.k_distance},
                    {"lrd", m.lrd}};
          },
          [](const LinearReconModel& m) -> nlohmann::json {
            return {{"mean", m.mean}, {"basis", matrix_to_json(m.basis)}};
          },
      },
      model_);
  return {{"variant", to_string(config_.variant)},
          {"config", config_.to_json()},
          {"feature_count", feature_count_},
          {"state", state}};
}

FittedDetector FittedDetector::from_json(const nlohmann::json& j) {
  try {
    auto config = DetectorConfig::from_json(j.at("config"));
    const auto features = j.at("feature_count").get<std::size_t>();
    const auto& s = j.at("state");
    switch (config.variant) {
      case Variant::isolation_forest: {
        IsolationForestModel m;
        m.subsample = s.at("subsample").get<std::size_t>();
        m.height_limit = s.at("height_limit").get<std::size_t>();
        m.trees = trees_from_json(s.at("trees"));
        return {config, features, std::move(m)};
      }
      case Variant::stochastic_forest: {
        StochasticForestModel m;
        m.subsample = s.at("subsample").get<std::size_t>();
        m.height_limit = s.at("height_limit").get<std::size_t>();
        m.trees = trees_from_json(s.at("trees"));
        return {config, features, std::move(m)};
      }
      case Variant::lof: {
        LofModel m;
        m.k = s.at("k").get<std::size_t>();
        m.train = matrix_from_json(s.at("train"));
        m.k_distance = s.at("k_distance").get<std::vector<double>>();
        m.lrd = s.at("lrd").get<std::vector<double>>();
        m.index = std::make_shared<const KdIndex>(m.train);
        return {config, features, std::move(m)};
      }
      case Variant::linear_recon: {
        LinearReconModel m;
        m.mean = s.at("mean").get<std::vector<double>>();
        m.basis = matrix_from_json(s.at("basis"));
        return {config, features, std::move(m)};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed detector JSON: ") + e.what());
  }
  throw ParseError("malformed detector JSON");
}

void save_model(const std::filesystem::path& path, const FittedDetector& det,
                const calibration::Threshold& threshold) {
  const nlohmann::json j = {{"format", "occids-model"},
                            {"version", kModelFormatVersion},
                            {"detector", det.to_json()},
                            {"threshold", threshold.to_json()}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file " + path.string());
  out << j.dump() << '\n';
}

std::pair<FittedDetector, calibration::Threshold> load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model file " + path.string() + ": " + e.what());
  }
  if (!j.contains("version")) throw ParseError("model file has no version field");
  if (j.at("version").get<int>() != kModelFormatVersion) {
    throw ParseError("unsupported model format version " + j.at("version").dump());
  }
  try {
    return {FittedDetector::from_json(j.at("detector")),
            calibration::Threshold::from_json(j.at("threshold"))};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace occids::detectors
