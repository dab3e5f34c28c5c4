#include "occids/ensemble.hpp"

namespace occids::ensemble {

PredictionMatrix::PredictionMatrix(std::vector<Labels> preds, std::vector<std::string> model_names) {
  if (preds.size() != model_names.size()) {
    throw ArgumentError("prediction matrix: one name per model row required");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) add(std::move(model_names[i]), std::move(preds[i]));
}

void PredictionMatrix::add(std::string name, Labels preds) {
  if (!preds_.empty() && preds.size() != instance_count()) {
    throw ShapeError("prediction row for '" + name + "' has " + std::to_string(preds.size()) +
                     " instances, expected " + std::to_string(instance_count()));
  }
  preds_.push_back(std::move(preds));
  names_.push_back(std::move(name));
}

Labels consensus(const PredictionMatrix& matrix, std::size_t k) {
  if (k < 1 || k > matrix.model_count()) {
    throw ArgumentError("consensus level " + std::to_string(k) + " outside 1.." +
                        std::to_string(matrix.model_count()));
  }
  const std::size_t m = matrix.instance_count();
  std::vector<std::size_t> votes(m, 0);
  for (const auto& row : matrix.rows()) {
    for (std::size_t j = 0; j < m; ++j) votes[j] += row[j];
  }
  Labels out(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = votes[j] >= k ? kAttack : kNormal;
  return out;
}

std::map<std::size_t, Labels> all_levels(const PredictionMatrix& matrix) {
  std::map<std::size_t, Labels> out;
  for (std::size_t k = 1; k <= matrix.model_count(); ++k) out.emplace(k, consensus(matrix, k));
  return out;
}

}  // namespace occids::ensemble
