#include <algorithm>
#include <cmath>

#include "occids/dataset.hpp"

namespace occids::dataset {

std::size_t Dataset::normal_count() const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), kNormal));
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
  Dataset out;
  out.feature_names = feature_names;
  out.X = X.select_rows(indices);
  out.y.reserve(indices.size());
  out.attack_type.reserve(indices.size());
  for (auto i : indices) {
    out.y.push_back(y[i]);
    out.attack_type.push_back(attack_type[i]);
  }
  return out;
}

std::vector<std::string> Dataset::attack_types() const {
  std::set<std::string> tags;
  for (const auto& t : attack_type) {
    if (!t.empty()) tags.insert(t);
  }
  return {tags.begin(), tags.end()};
}

void Dataset::append(const Dataset& other) {
  if (size() == 0 && X.cols() == 0) {
    *this = other;
    return;
  }
  if (other.X.cols() != X.cols()) throw ShapeError("Dataset::append: feature count mismatch");
  for (std::size_t r = 0; r < other.size(); ++r) X.append_row(other.X.row(r));
  y.insert(y.end(), other.y.begin(), other.y.end());
  attack_type.insert(attack_type.end(), other.attack_type.begin(), other.attack_type.end());
}

SplitIndices stratified_split_indices(const Labels& labels, const SplitPlan& plan,
                                      std::size_t run_index) {
  if (!(plan.ratio > 0.0 && plan.ratio < 1.0)) throw ArgumentError("split ratio must be in (0,1)");
  if (plan.n_runs == 0) throw ArgumentError("split plan needs at least one run");
  if (run_index >= plan.n_runs) {
    throw ArgumentError("run index " + std::to_string(run_index) + " out of range for " +
                        std::to_string(plan.n_runs) + " runs");
  }

  SplitIndices out;
  Rng rng(mix_seed(plan.base_seed, run_index));
  for (std::uint8_t cls : {kNormal, kAttack}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    if (members.size() < 2) {
      throw SplitError(std::string("class '") + (cls == kNormal ? "normal" : "attack") +
                       "' has " + std::to_string(members.size()) +
                       " rows; stratified split needs at least 2");
    }
    rng.shuffle(members);
    auto n_train = static_cast<std::size_t>(
        std::llround(plan.ratio * static_cast<double>(members.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    out.train.insert(out.train.end(), members.begin(), members.begin() + n_train);
    out.test.insert(out.test.end(), members.begin() + n_train, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, const SplitPlan& plan,
                                             std::size_t run_index) {
  const auto idx = stratified_split_indices(data.y, plan, run_index);
  return {data.select_rows(idx.train), data.select_rows(idx.test)};
}

Dataset filter_normal(const Dataset& data) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.y[i] == kNormal) keep.push_back(i);
  }
  if (keep.empty()) throw FitError("no normal rows to train on");
  return data.select_rows(keep);
}

Dataset remove_attack_types(const Dataset& data, const std::set<std::string>& combo) {
  if (combo.empty()) return data;
  std::vector<std::size_t> keep;
  keep.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.y[i] == kNormal || !combo.contains(data.attack_type[i])) keep.push_back(i);
  }
  return data.select_rows(keep);
}

Dataset omit_attack_types(const Dataset& data, const std::set<std::string>& combo) {
  const auto present = data.attack_types();
  for (const auto& tag : combo) {
    if (!std::binary_search(present.begin(), present.end(), tag)) {
      throw ArgumentError("attack type '" + tag + "' does not occur in the dataset");
    }
  }
  return remove_attack_types(data, combo);
}

}  // namespace occids::dataset
