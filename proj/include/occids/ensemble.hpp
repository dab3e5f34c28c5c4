#pragma once

#include <map>
#include <string>
#include <vector>

#include "occids/common.hpp"

namespace occids::ensemble {

/// Binary attack predictions: one row per model, one column per instance.
class PredictionMatrix {
 public:
  PredictionMatrix() = default;
  PredictionMatrix(std::vector<Labels> preds, std::vector<std::string> model_names);

  void add(std::string name, Labels preds);

  std::size_t model_count() const { return preds_.size(); }
  std::size_t instance_count() const { return preds_.empty() ? 0 : preds_.front().size(); }
  const std::vector<Labels>& rows() const { return preds_; }
  const std::vector<std::string>& model_names() const { return names_; }

 private:
  std::vector<Labels> preds_;
  std::vector<std::string> names_;
};

/// Any-k rule: an instance is an attack when at least k models flag it.
Labels consensus(const PredictionMatrix& matrix, std::size_t k);

/// consensus() for every k in 1..model_count.
std::map<std::size_t, Labels> all_levels(const PredictionMatrix& matrix);

}  // namespace occids::ensemble
