#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <doctest.h>

#include "occids/dataset.hpp"

using namespace occids;
using namespace occids::dataset;

namespace {

Schema net_schema() {
  return Schema({{"dur", ColumnKind::numeric},
                 {"proto", ColumnKind::categorical},
                 {"note", ColumnKind::ignored},
                 {"label", ColumnKind::binary_label},
                 {"attack_cat", ColumnKind::attack_type_tag}});
}

Schema one_numeric() {
  return Schema({{"v", ColumnKind::numeric}, {"label", ColumnKind::binary_label}});
}

// Dataset with the given per-class counts, one feature holding the row index.
Dataset labelled(std::size_t normals, std::size_t attacks) {
  Dataset d;
  d.feature_names = {"i"};
  for (std::size_t i = 0; i < normals + attacks; ++i) {
    d.X.append_row(std::vector<double>{static_cast<double>(i)});
    const bool attack = i >= normals;
    d.y.push_back(attack ? kAttack : kNormal);
    d.attack_type.push_back(attack ? (i % 2 ? "a1" : "a2") : "");
  }
  return d;
}

}  // namespace

TEST_CASE("csv basics") {
  const std::string text =
      "dur,proto,note,label,attack_cat\n"
      "1.5,tcp,x,normal,\n"
      ",udp,,attack,dos\n"
      "3,\"icmp\",\"a, b\",attack,probe\n";
  const auto t = parse_csv(text, net_schema());
  CHECK(t.row_count() == 3);
  CHECK(t.col_count() == 5);
  CHECK_FALSE(t.rows[1][0].has_value());
  CHECK_FALSE(t.rows[0][4].has_value());
  CHECK(*t.rows[2][1] == "icmp");
  CHECK(*t.rows[2][2] == "a, b");
  CHECK(raw_labels(t, net_schema()) == Labels{0, 1, 1});
}

TEST_CASE("quoted fields may contain quotes and line breaks") {
  const auto rows = parse_csv_rows("a,b\n\"x\"\"y\",\"two\r\nlines\"\n");
  REQUIRE(rows.size() == 2);
  CHECK(*rows[1][0] == "x\"y");
  CHECK(*rows[1][1] == "two\r\nlines");
  CHECK(csv_quote("plain") == "plain");
  CHECK(csv_quote("a,\"b\"") == "\"a,\"\"b\"\"\"");
}

TEST_CASE("width errors cite the physical line") {
  std::string text = "v,label\n";
  for (int i = 2; i <= 6; ++i) text += std::to_string(i) + ",0\n";
  text += "7,0,\n";
  try {
    parse_csv(text, one_numeric());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
}

TEST_CASE("header and schema must agree") {
  CHECK_THROWS_AS(parse_csv("v,label,extra\n1,0,2\n", one_numeric()), SchemaError);
  CHECK_THROWS_AS(parse_csv("v\n1\n", one_numeric()), SchemaError);
  // Column order in the file is free.
  const auto t = parse_csv("label,v\n0,4\n", one_numeric());
  CHECK(t.header == std::vector<std::string>{"label", "v"});
}

TEST_CASE("schema invariants") {
  CHECK_THROWS_AS(Schema({{"a", ColumnKind::numeric}}), SchemaError);
  CHECK_THROWS_AS(Schema({{"a", ColumnKind::binary_label}, {"a", ColumnKind::numeric}}), SchemaError);
  CHECK_THROWS_AS(Schema({{"a", ColumnKind::binary_label}, {"b", ColumnKind::binary_label}}), SchemaError);
  CHECK_THROWS_AS(Schema({{"l", ColumnKind::binary_label},
                          {"t1", ColumnKind::attack_type_tag},
                          {"t2", ColumnKind::attack_type_tag}}),
                  SchemaError);
}

TEST_CASE("schema json forms agree") {
  const auto a = Schema::from_json(nlohmann::json::parse(
      R"({"columns": [{"name": "v", "kind": "numeric"}, {"name": "label", "kind": "binary-label"}],
          "normal_labels": ["BENIGN"], "missing_values": ["?"]})"));
  const auto b = Schema::from_json(a.to_json());
  CHECK(b.columns().size() == 2);
  CHECK(b.label_index() == 1);
  CHECK(b.parse_label("benign") == kNormal);
  CHECK(b.parse_label("0") == kAttack);
  CHECK(b.is_missing_token("?"));
  const auto c = Schema::from_json(nlohmann::json::parse(R"({"columns": {"label": "binary-label", "v": "numeric"}})"));
  CHECK(c.find("v").has_value());
  CHECK(c.parse_label("Normal") == kNormal);
}

TEST_CASE("imputation mean") {
  const auto t = parse_csv("v,label\n1,0\n,0\n3,1\n", one_numeric());
  const auto s = fit_preprocessor(t, one_numeric());
  CHECK(s.imputation_means.at("v") == doctest::Approx(2.0));
  const auto d = apply_preprocessor(s, t, one_numeric());
  // 2.0 before scaling on the fitted range (1, 3).
  CHECK(d.X(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("entirely missing numeric column cannot be fit") {
  const auto t = parse_csv("v,label\n,0\n,1\n", one_numeric());
  CHECK_THROWS_AS(fit_preprocessor(t, one_numeric()), FitError);
}

TEST_CASE("no feature columns is a schema error") {
  const Schema s({{"label", ColumnKind::binary_label}, {"x", ColumnKind::ignored}});
  const auto t = parse_csv("label,x\n0,1\n", s);
  CHECK_THROWS_AS(fit_preprocessor(t, s), SchemaError);
}

TEST_CASE("one-hot categories are lexicographic") {
  const auto t = parse_csv(
      "dur,proto,note,label,attack_cat\n1,tcp,,0,\n2,udp,,0,\n3,icmp,,1,dos\n4,tcp,,1,dos\n", net_schema());
  const auto s = fit_preprocessor(t, net_schema());
  CHECK(s.category_maps.at("proto") == std::vector<std::string>{"icmp", "tcp", "udp"});
  CHECK(s.feature_names.size() == 4);
  const auto d = apply_preprocessor(s, t, net_schema());
  CHECK(d.X.cols() == 4);
  CHECK(d.X(2, 1) == 1.0);  // icmp
  CHECK(d.X(2, 2) == 0.0);
  CHECK(d.attack_type[2] == "dos");
  CHECK(d.attack_type[0].empty());

  const auto unseen = parse_csv("dur,proto,note,label,attack_cat\n2,sctp,,0,\n", net_schema());
  const auto u = apply_preprocessor(s, unseen, net_schema());
  CHECK(u.X(0, 1) == 0.0);
  CHECK(u.X(0, 2) == 0.0);
  CHECK(u.X(0, 3) == 0.0);
}

TEST_CASE("min-max scaling without clipping") {
  const auto t = parse_csv("v,label\n2,0\n4,0\n6,1\n", one_numeric());
  const auto s = fit_preprocessor(t, one_numeric());
  CHECK(s.minmax.at(0) == std::pair<double, double>{2.0, 6.0});
  const auto d = apply_preprocessor(s, t, one_numeric());
  CHECK(d.X(0, 0) == 0.0);
  CHECK(d.X(1, 0) == 0.5);
  CHECK(d.X(2, 0) == 1.0);
  const auto probe = apply_preprocessor(s, parse_csv("v,label\n8,0\n", one_numeric()), one_numeric());
  CHECK(probe.X(0, 0) == doctest::Approx(1.5));
}

TEST_CASE("constant features scale to zero") {
  const auto t = parse_csv("v,label\n5,0\n5,1\n", one_numeric());
  const auto d = apply_preprocessor(fit_preprocessor(t, one_numeric()), t, one_numeric());
  CHECK(d.X(0, 0) == 0.0);
  CHECK(d.X(1, 0) == 0.0);
}

TEST_CASE("fit-time rows land in the unit interval") {
  Rng rng(21);
  const char* protos[] = {"tcp", "udp", "icmp", "gre"};
  for (int trial = 0; trial < 30; ++trial) {
    std::string text = "dur,proto,note,label,attack_cat\n";
    const std::size_t n = 2 + rng.index(60);
    for (std::size_t i = 0; i < n; ++i) {
      const bool missing = rng.uniform() < 0.1 && i > 0;
      text += (missing ? std::string() : format_double(rng.normal() * 1e3)) + ',' +
              (rng.uniform() < 0.1 ? "" : protos[rng.index(4)]) + ",," + std::to_string(rng.index(2)) +
              ",t\n";
    }
    const auto t = parse_csv(text, net_schema());
    const auto s = fit_preprocessor(t, net_schema());
    for (const auto& [lo, hi] : s.minmax) CHECK(lo <= hi);
    const auto d = apply_preprocessor(s, t, net_schema());
    for (std::size_t r = 0; r < d.X.rows(); ++r) {
      for (double v : d.X.row(r)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("preprocessor state survives json") {
  const auto t = parse_csv("dur,proto,note,label,attack_cat\n1,tcp,,0,\n,udp,,1,x\n", net_schema());
  const auto s = fit_preprocessor(t, net_schema());
  CHECK(PreprocessorState::from_json(nlohmann::json::parse(s.to_json().dump())) == s);
}

TEST_CASE("train-only fitting never reads test rows") {
  Rng rng(31);
  std::string text = "v,label\n";
  for (int i = 0; i < 100; ++i) text += format_double(rng.uniform(0, 10)) + ',' + std::to_string(i % 4 == 0) + '\n';
  auto table = parse_csv(text, one_numeric());
  const auto labels = raw_labels(table, one_numeric());
  const SplitPlan plan{0.8, 10, 5};
  const auto idx = stratified_split_indices(labels, plan, 0);
  const auto before = fit_preprocessor(table.select_rows(idx.train), one_numeric());
  for (auto r : idx.test) table.rows[r][0] = std::string("1e6");
  CHECK(raw_labels(table, one_numeric()) == labels);
  const auto after = fit_preprocessor(table.select_rows(stratified_split_indices(labels, plan, 0).train),
                                      one_numeric());
  CHECK(after == before);
  // Fitting on everything does see the perturbation.
  CHECK_FALSE(fit_preprocessor(table, one_numeric()) == before);
}

TEST_CASE("stratified split proportions") {
  const auto data = labelled(900, 100);
  const auto [train, test] = stratified_split(data, {0.8, 10, 1}, 0);
  CHECK(train.size() == 800);
  CHECK(train.normal_count() == 720);
  CHECK(train.attack_count() == 80);
  CHECK(test.normal_count() == 180);
  CHECK(test.attack_count() == 20);
}

TEST_CASE("split is a seeded partition") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t normals = 2 + rng.index(80);
    const std::size_t attacks = 2 + rng.index(40);
    Labels y(normals, kNormal);
    y.insert(y.end(), attacks, kAttack);
    rng.shuffle(y);
    const SplitPlan plan{rng.uniform(0.05, 0.95), 3, rng.next()};
    const auto a = stratified_split_indices(y, plan, trial % 3);
    const auto b = stratified_split_indices(y, plan, trial % 3);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    std::vector<std::size_t> all = a.train;
    all.insert(all.end(), a.test.begin(), a.test.end());
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    CHECK(all.size() == y.size());
    for (std::uint8_t cls : {kNormal, kAttack}) {
      const double total = static_cast<double>(std::count(y.begin(), y.end(), cls));
      const double got = static_cast<double>(
          std::count_if(a.train.begin(), a.train.end(), [&](auto i) { return y[i] == cls; }));
      CHECK(std::fabs(got - plan.ratio * total) < 1.0);
    }
  }
}

TEST_CASE("different runs give different splits") {
  const auto data = labelled(80, 20);
  const SplitPlan plan{0.8, 10, 123};
  const auto a = stratified_split_indices(data.y, plan, 0);
  const auto b = stratified_split_indices(data.y, plan, 1);
  CHECK(a.train != b.train);
}

TEST_CASE("split rejects tiny classes") {
  CHECK_THROWS_AS(stratified_split_indices(Labels{0, 0, 0, 1}, {0.8, 1, 0}, 0), SplitError);
}

TEST_CASE("filter_normal") {
  const auto d = labelled(5, 3);
  const auto n = filter_normal(d);
  CHECK(n.size() == 5);
  CHECK(std::all_of(n.y.begin(), n.y.end(), [](auto v) { return v == kNormal; }));
  const auto normals = labelled(4, 0);
  CHECK(filter_normal(normals).X == normals.X);
  Dataset attacks = labelled(0, 3);
  CHECK_THROWS_AS(filter_normal(attacks), FitError);
}

TEST_CASE("omit attack types") {
  Dataset d = labelled(6, 0);
  for (int i = 0; i < 15; ++i) {
    d.X.append_row(std::vector<double>{100.0 + i});
    d.y.push_back(kAttack);
    d.attack_type.push_back(i < 10 ? "a1" : "a2");
  }
  const auto without_a1 = omit_attack_types(d, {"a1"});
  CHECK(without_a1.attack_count() == 5);
  CHECK(without_a1.normal_count() == 6);
  CHECK(omit_attack_types(d, {}).X == d.X);
  const auto normals_only = omit_attack_types(d, {"a1", "a2"});
  CHECK(normals_only.attack_count() == 0);
  CHECK(normals_only.normal_count() == 6);
  CHECK_THROWS_AS(omit_attack_types(d, {"zz"}), ArgumentError);
  CHECK(remove_attack_types(d, {"zz"}).size() == d.size());
}

TEST_CASE("gaussian demo") {
  const auto a = generate_gaussian_demo(1);
  const auto b = generate_gaussian_demo(1);
  CHECK(a.X == b.X);
  CHECK(a.attack_type == b.attack_type);
  CHECK_FALSE(generate_gaussian_demo(2).X == a.X);

  std::set<std::pair<int, std::string>> groups;
  for (std::size_t i = 0; i < a.size(); ++i) groups.insert({a.y[i], a.attack_type[i]});
  CHECK(groups.size() == 3);

  const auto clusters = default_demo_clusters();
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    for (std::size_t j = i + 1; j < clusters.size(); ++j) {
      const double dist = std::hypot(clusters[i].center_x - clusters[j].center_x,
                                     clusters[i].center_y - clusters[j].center_y);
      const double pooled = std::sqrt((clusters[i].stddev * clusters[i].stddev +
                                       clusters[j].stddev * clusters[j].stddev) / 2.0);
      CHECK(dist >= 6.0 * pooled);
    }
  }

  // Nearest sample centroid recovers the generating cluster.
  std::map<std::string, std::pair<double, double>> centroid;
  std::map<std::string, double> count;
  for (std::size_t i = 0; i < a.size(); ++i) {
    centroid[a.attack_type[i]].first += a.X(i, 0);
    centroid[a.attack_type[i]].second += a.X(i, 1);
    count[a.attack_type[i]] += 1;
  }
  for (auto& [tag, c] : centroid) {
    c.first /= count[tag];
    c.second /= count[tag];
  }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::string best;
    double best_d = INFINITY;
    for (const auto& [tag, c] : centroid) {
      const double dd = std::hypot(a.X(i, 0) - c.first, a.X(i, 1) - c.second);
      if (dd < best_d) {
        best_d = dd;
        best = tag;
      }
    }
    agree += best == a.attack_type[i];
  }
  CHECK(static_cast<double>(agree) >= 0.99 * static_cast<double>(a.size()));
}

TEST_CASE("uniform noise") {
  const auto small = generate_uniform_noise(4, 2, 9);
  CHECK(small.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(small.y[r] == kAttack);
    CHECK(small.attack_type[r] == kNoiseTag);
    for (double v : small.X.row(r)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(generate_uniform_noise(4, 2, 9).X == small.X);
  const auto big = generate_uniform_noise(10000, 1, 10);
  double sum = 0;
  for (std::size_t r = 0; r < big.size(); ++r) sum += big.X(r, 0);
  CHECK(sum / 10000.0 >= 0.47);
  CHECK(sum / 10000.0 <= 0.53);
  CHECK_THROWS_AS(generate_uniform_noise(0, 1, 1), ArgumentError);
}

TEST_CASE("written datasets load back") {
  const auto dir = std::filesystem::temp_directory_path() / "occids_dataset_test";
  std::filesystem::create_directories(dir);
  const auto d = generate_gaussian_demo(3);
  write_dataset(d, dir / "d.csv", dir / "d.json");
  const Schema s({{"x1", ColumnKind::numeric},
                  {"x2", ColumnKind::numeric},
                  {"label", ColumnKind::binary_label},
                  {"attack_type", ColumnKind::attack_type_tag}});
  const auto t = load_csv(dir / "d.csv", s);
  CHECK(t.row_count() == d.size());
  CHECK(raw_labels(t, s) == d.y);
  CHECK(std::stod(*t.rows[7][0]) == d.X(7, 0));
  std::filesystem::remove_all(dir);
}
