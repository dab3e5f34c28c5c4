#include <algorithm>
#include <iostream>
#include <tuple>

#include "occids/calibration.hpp"
#include "occids/supervised.hpp"

namespace occids::supervised {

namespace {

struct Cell {
  std::size_t run;
  std::size_t k;
  std::size_t combination_id;
  std::vector<std::string> combination;
};

double omitted_recall_of(const dataset::Dataset& test, const Labels& pred,
                         const std::set<std::string>& omitted) {
  std::size_t hit = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test.y[i] == kAttack && omitted.contains(test.attack_type[i])) {
      ++total;
      hit += pred[i];
    }
  }
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

OmissionRecord make_record(const Cell& cell, Arm arm, const dataset::Dataset& test,
                           const Labels& pred) {
  OmissionRecord rec;
  rec.k = cell.k;
  rec.combination_id = cell.combination_id;
  rec.combination = cell.combination;
  rec.run = cell.run;
  rec.arm = arm;
  rec.counts = metrics::confusion(test.y, pred);
  rec.attack = metrics::class_metrics(rec.counts);
  rec.macro_f1 = metrics::macro_f1(rec.attack, metrics::class_metrics(rec.counts.swapped()));
  if (cell.k > 0) {
    const std::set<std::string> omitted(cell.combination.begin(), cell.combination.end());
    rec.omitted_recall = omitted_recall_of(test, pred, omitted);
  }
  return rec;
}

}  // namespace

std::string to_string(Arm arm) {
  switch (arm) {
    case Arm::plain: return "plain";
    case Arm::noise: return "noise";
    case Arm::occ: return "occ";
  }
  return "unknown";
}

Arm arm_from_string(const std::string& text) {
  if (text == "plain") return Arm::plain;
  if (text == "noise") return Arm::noise;
  if (text == "occ") return Arm::occ;
  throw ArgumentError("unknown arm '" + text + "'");
}

dataset::Dataset augment_with_noise(const dataset::Dataset& train, std::uint64_t seed) {
  const std::size_t normals = train.normal_count();
  dataset::Dataset out = train;
  if (normals == 0) return out;
  out.append(dataset::generate_uniform_noise(normals, train.X.cols(), seed));
  return out;
}

std::vector<std::vector<std::string>> enumerate_combinations(const std::vector<std::string>& attack_types,
                                                             std::size_t k) {
  const std::size_t m = attack_types.size();
  if (k > m) {
    throw ArgumentError("cannot choose " + std::to_string(k) + " of " + std::to_string(m) +
                        " attack types");
  }
  std::vector<std::vector<std::string>> out;
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  for (;;) {
    std::vector<std::string> combo;
    for (auto i : pick) combo.push_back(attack_types[i]);
    out.push_back(std::move(combo));
    // Advance to the next index tuple in lexicographic order.
    std::size_t pos = k;
    while (pos > 0 && pick[pos - 1] == m - k + pos - 1) --pos;
    if (pos == 0) break;
    ++pick[pos - 1];
    for (std::size_t i = pos; i < k; ++i) pick[i] = pick[i - 1] + 1;
  }
  return out;
}

std::vector<OmissionAggregate> aggregate_omission(const std::vector<OmissionRecord>& records,
                                                  const std::map<std::size_t, std::size_t>& totals) {
  // (arm, k) -> combination id -> per-run records
  std::map<std::pair<Arm, std::size_t>, std::map<std::size_t, std::vector<const OmissionRecord*>>> groups;
  for (const auto& r : records) groups[{r.arm, r.k}][r.combination_id].push_back(&r);

  std::vector<OmissionAggregate> out;
  for (const auto& [key, combos] : groups) {
    std::vector<double> acc, prec, rec, f1, macro, omitted;
    for (const auto& [id, runs] : combos) {
      double a = 0, p = 0, r = 0, f = 0, mf = 0, o = 0;
      bool has_omitted = true;
      for (const auto* x : runs) {
        a += x->attack.accuracy;
        p += x->attack.precision;
        r += x->attack.recall;
        f += x->attack.f1;
        mf += x->macro_f1;
        if (x->omitted_recall) o += *x->omitted_recall;
        else has_omitted = false;
      }
      const auto n = static_cast<double>(runs.size());
      acc.push_back(a / n);
      prec.push_back(p / n);
      rec.push_back(r / n);
      f1.push_back(f / n);
      macro.push_back(mf / n);
      if (has_omitted) omitted.push_back(o / n);
    }
    OmissionAggregate agg;
    agg.arm = key.first;
    agg.k = key.second;
    const auto t = totals.find(key.second);
    agg.combinations_total = t == totals.end() ? combos.size() : t->second;
    agg.combinations_evaluated = combos.size();
    agg.accuracy = metrics::summarize(acc);
    agg.attack_precision = metrics::summarize(prec);
    agg.attack_recall = metrics::summarize(rec);
    agg.attack_f1 = metrics::summarize(f1);
    agg.macro_f1 = metrics::summarize(macro);
    if (!omitted.empty() && omitted.size() == combos.size()) {
      agg.omitted_recall = metrics::summarize(omitted);
    }
    out.push_back(agg);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.k, a.arm) < std::tie(b.k, b.arm);
  });
  return out;
}

OmissionResult run_omission_experiment(const dataset::Dataset& data, const OmissionPlan& plan,
                                       const ForestConfig& rf_config,
                                       const std::optional<detectors::DetectorConfig>& occ,
                                       std::size_t threads) {
  const auto present = data.attack_types();
  if (present.empty()) throw ArgumentError("omission experiment needs tagged attack rows");
  const auto tags = plan.attack_types.empty() ? present : plan.attack_types;
  for (const auto& t : tags) {
    if (!std::binary_search(present.begin(), present.end(), t)) {
      throw ArgumentError("attack type '" + t + "' does not occur in the dataset");
    }
  }

  std::set<std::size_t> ks(plan.k_values.begin(), plan.k_values.end());
  ks.insert(0);
  for (auto k : ks) {
    if (k > tags.size()) {
      throw ArgumentError("k=" + std::to_string(k) + " exceeds the " + std::to_string(tags.size()) +
                          " attack types");
    }
  }

  std::map<std::size_t, std::size_t> totals;
  std::map<std::size_t, std::vector<std::pair<std::size_t, std::vector<std::string>>>> grid;
  for (auto k : ks) {
    auto combos = enumerate_combinations(tags, k);
    totals[k] = combos.size();
    std::vector<std::size_t> ids(combos.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    if (plan.combination_cap > 0 && ids.size() > plan.combination_cap) {
      Rng rng(mix_seed(plan.seed, 0xC0B0 + k));
      rng.shuffle(ids);
      ids.resize(plan.combination_cap);
      std::sort(ids.begin(), ids.end());
    }
    for (auto id : ids) grid[k].emplace_back(id, combos[id]);
  }

  std::vector<std::pair<dataset::Dataset, dataset::Dataset>> folds;
  for (std::size_t run = 0; run < plan.split.n_runs; ++run) {
    folds.push_back(dataset::stratified_split(data, plan.split, run));
    const auto test_types = folds.back().second.attack_types();
    for (const auto& t : tags) {
      if (!std::binary_search(test_types.begin(), test_types.end(), t)) {
        std::cerr << "warning: run " << run << ": attack type '" << t
                  << "' has no rows in the test fold\n";
      }
    }
  }

  std::vector<Cell> cells;
  for (std::size_t run = 0; run < plan.split.n_runs; ++run) {
    for (const auto& [k, combos] : grid) {
      for (const auto& [id, combo] : combos) cells.push_back({run, k, id, combo});
    }
  }

  const std::size_t arms = 1 + (plan.with_noise ? 1 : 0) + (occ ? 1 : 0);
  std::vector<OmissionRecord> records(cells.size() * arms);
  parallel_for(cells.size(), threads, [&](std::size_t c) {
    const auto& cell = cells[c];
    const auto& [train_full, test] = folds[cell.run];
    const std::set<std::string> omit(cell.combination.begin(), cell.combination.end());
    const auto train = dataset::remove_attack_types(train_full, omit);

    ForestConfig rf = rf_config;
    rf.seed = mix_seed(rf_config.seed, cell.run);
    std::size_t slot = c * arms;

    // With every attack type omitted the forest sees a single class and, like
    // any classifier trained on one label, predicts it everywhere.
    Labels plain_pred(test.size(), kNormal);
    if (train.attack_count() > 0) plain_pred = rf_predict(rf_fit(train.X, train.y, rf), test.X);
    records[slot++] = make_record(cell, Arm::plain, test, plain_pred);

    if (plan.with_noise) {
      const auto augmented = augment_with_noise(train, mix_seed(plan.seed, cell.run));
      const auto pred = rf_predict(rf_fit(augmented.X, augmented.y, rf), test.X);
      records[slot++] = make_record(cell, Arm::noise, test, pred);
    }

    if (occ) {
      auto cfg = *occ;
      cfg.seed = mix_seed(occ->seed, cell.run);
      const auto normals = dataset::filter_normal(train);
      const auto det = detectors::fit(cfg, normals.X);
      const auto th = calibration::calibrate_threshold(detectors::score(det, normals.X));
      records[slot++] = make_record(cell, Arm::occ, test,
                                    calibration::classify(detectors::score(det, test.X), th));
    }
  });

  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.k, a.combination_id, a.run, a.arm) <
           std::tie(b.k, b.combination_id, b.run, b.arm);
  });

  OmissionResult result;
  result.aggregates = aggregate_omission(records, totals);
  result.records = std::move(records);
  return result;
}

}  // namespace occids::supervised
