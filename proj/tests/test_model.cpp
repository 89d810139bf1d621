#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "cafa/model.hpp"
#include "helpers.hpp"

using namespace cafa;

namespace {

// 200 rows, label = [x0 + x1 > 1].
Dataset separable(std::uint64_t seed) {
  FeatureSchema s({th::cont("x0"), th::cont("x1")});
  Rng rng(seed);
  std::vector<Instance> rows;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    const double a = uniform01(rng), b = uniform01(rng);
    rows.push_back({a, b});
    labels.push_back(a + b > 1.0 ? 1 : 0);
  }
  return Dataset(s, rows, labels, {"0", "1"});
}

RandomForest stump() {
  DecisionTree t;
  t.nodes = {{0, 0.5, 1, 2, -1, false}, {-1, 0, -1, -1, 0, false}, {-1, 0, -1, -1, 1, false}};
  t.leaf_counts = {{3, 1}, {1, 4}};
  return RandomForest(FeatureSchema({th::cont("a"), th::cont("b")}), {"0", "1"}, ForestParams{},
                      {t});
}

}  // namespace

TEST(Forest, LinearlySeparableTrainingAccuracy) {
  const auto d = separable(1);
  const auto f = train_forest(d, th::small_forest(5, 50));
  EXPECT_GE(accuracy(f, d), 0.95);
}

TEST(Forest, RejectsSingleClassAndTinyData) {
  FeatureSchema s({th::cont("x")});
  std::vector<Instance> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({i / 20.0});
  EXPECT_THROW(train_forest(Dataset(s, rows, std::vector<int>(20, 1), {"0", "1"}), ForestParams{}),
               ModelError);
  std::vector<Instance> few(rows.begin(), rows.begin() + 5);
  EXPECT_THROW(train_forest(Dataset(s, few, {0, 1, 0, 1, 0}, {"0", "1"}), ForestParams{}),
               ModelError);
}

TEST(Forest, HandBuiltStump) {
  const auto f = stump();
  const auto p = predict(f, Instance{0.2, 0.9});
  EXPECT_EQ(p.label, 0);
  EXPECT_DOUBLE_EQ(p.proba[0], 0.75);
  EXPECT_DOUBLE_EQ(p.proba[1], 0.25);
  const auto q = predict(f, Instance{0.7, 0.1});
  EXPECT_EQ(q.label, 1);
  EXPECT_DOUBLE_EQ(q.proba[1], 0.8);
  EXPECT_DOUBLE_EQ(f.positive_proba(Instance{0.5, 0.0}), 0.25);  // <= goes left
}

TEST(Forest, PureLeafGivesCertainty) {
  DecisionTree t;
  t.nodes = {{-1, 0, -1, -1, 0, false}};
  t.leaf_counts = {{0, 7}};
  RandomForest f(FeatureSchema({th::cont("a")}), {"0", "1"}, ForestParams{}, {t});
  EXPECT_DOUBLE_EQ(predict(f, Instance{0.3}).proba[1], 1.0);
}

TEST(Forest, TiesGoToLowestClass) {
  DecisionTree t;
  t.nodes = {{-1, 0, -1, -1, 0, false}};
  t.leaf_counts = {{2, 2}};
  RandomForest f(FeatureSchema({th::cont("a")}), {"0", "1"}, ForestParams{}, {t});
  EXPECT_EQ(predict(f, Instance{0.3}).label, 0);
}

TEST(Forest, RejectsMalformedStructure) {
  DecisionTree t;
  t.nodes = {{3, 0.5, 1, 2, -1, false}, {-1, 0, -1, -1, 0, false}, {-1, 0, -1, -1, 1, false}};
  t.leaf_counts = {{1, 0}, {0, 1}};
  EXPECT_THROW(RandomForest(FeatureSchema({th::cont("a")}), {"0", "1"}, ForestParams{}, {t}),
               ModelError);
  t.nodes[0].feature = 0;
  t.leaf_counts = {{0, 0}, {0, 1}};
  EXPECT_THROW(RandomForest(FeatureSchema({th::cont("a")}), {"0", "1"}, ForestParams{}, {t}),
               ModelError);
}

TEST(Forest, ProbabilitiesSumToOne) {
  const auto d = generate_synth(th::mixed_spec(6, 2, 300, 4));
  const auto f = train_forest(d, th::small_forest(9));
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto x = th::random_instance(d.schema(), rng);
    const auto p = predict(f, x);
    EXPECT_NEAR(std::accumulate(p.proba.begin(), p.proba.end(), 0.0), 1.0, 1e-9);
    for (double v : p.proba) EXPECT_GE(v, 0.0);
    EXPECT_EQ(p.label, static_cast<int>(std::max_element(p.proba.begin(), p.proba.end()) -
                                        p.proba.begin()));
  }
}

TEST(Forest, PredictValidatesInput) {
  const auto f = stump();
  EXPECT_THROW(predict(f, Instance{0.2}), DataError);
  EXPECT_THROW(predict(f, Instance{0.2, 1.4}), DataError);
}

TEST(Forest, DeterministicGivenSeed) {
  const auto d = generate_synth(th::mixed_spec(6, 2, 300, 4));
  const auto a = train_forest(d, th::small_forest(9));
  const auto b = train_forest(d, th::small_forest(9));
  const auto c = train_forest(d, th::small_forest(10));
  Rng rng(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = th::random_instance(d.schema(), rng);
    EXPECT_EQ(a.positive_proba(x), b.positive_proba(x));
    differs |= a.positive_proba(x) != c.positive_proba(x);
  }
  EXPECT_TRUE(differs);
}

TEST(Forest, RowOrderDoesNotMatter) {
  const auto d = generate_synth(th::mixed_spec(5, 1, 250, 12));
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng shuffle_rng(77);
  std::shuffle(idx.begin(), idx.end(), shuffle_rng);
  const auto shuffled = d.subset(idx);
  const auto a = train_forest(d, th::small_forest(3));
  const auto b = train_forest(shuffled, th::small_forest(3));
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto x = th::random_instance(d.schema(), rng);
    EXPECT_EQ(a.positive_proba(x), b.positive_proba(x));
  }
}

// A single depth-1 tree trained on corner data labelled by x0 must be the
// stump "x0 > 0.5" on every corner of the cube.
TEST(Forest, DepthOneTreeMatchesStumpOnCorners) {
  for (std::size_t k = 1; k <= 4; ++k) {
    std::vector<Feature> fs;
    for (std::size_t j = 0; j < k; ++j) fs.push_back(th::cont("x" + std::to_string(j)));
    FeatureSchema s(fs);
    std::vector<Instance> rows;
    std::vector<int> labels;
    for (int rep = 0; rep < 10; ++rep) {
      for (unsigned c = 0; c < (1u << k); ++c) {
        Instance x(k);
        for (std::size_t j = 0; j < k; ++j) x[j] = c >> j & 1u;
        rows.push_back(x);
        labels.push_back(static_cast<int>(c & 1u));
      }
    }
    ForestParams p;
    p.n_trees = 1;
    p.max_depth = 1;
    p.min_leaf = 1;
    p.features_per_split = k;
    p.seed = 4;
    const auto f = train_forest(Dataset(s, rows, labels, {"0", "1"}), p);
    for (unsigned c = 0; c < (1u << k); ++c) {
      Instance x(k);
      for (std::size_t j = 0; j < k; ++j) x[j] = c >> j & 1u;
      EXPECT_DOUBLE_EQ(f.positive_proba(x), (c & 1u) ? 1.0 : 0.0) << "k=" << k << " corner " << c;
    }
  }
}

TEST(Forest, CategoricalOneVsRestSplit) {
  FeatureSchema s({th::cat("c", 4), th::cont("noise")});
  std::vector<Instance> rows;
  std::vector<int> labels;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto c = static_cast<double>(i % 4);
    rows.push_back({c, uniform01(rng)});
    labels.push_back(c == 2.0 ? 1 : 0);  // not separable by any single "<=" threshold
  }
  const Dataset d(s, rows, labels, {"0", "1"});
  const auto f = train_forest(d, th::small_forest(2));
  EXPECT_DOUBLE_EQ(accuracy(f, d), 1.0);
}

TEST(Forest, JsonRoundTripPreservesPredictions) {
  const auto d = generate_synth(th::mixed_spec(6, 2, 300, 4));
  const auto f = train_forest(d, th::small_forest(9));
  const auto path = std::filesystem::temp_directory_path() / "cafa_test_model.json";
  f.save(path);
  const auto g = RandomForest::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(g.schema(), f.schema());
  EXPECT_EQ(g.class_names(), f.class_names());
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto x = th::random_instance(d.schema(), rng);
    EXPECT_EQ(f.positive_proba(x), g.positive_proba(x));
  }
}

TEST(Forest, LoadRejectsForeignDocuments) {
  EXPECT_THROW(RandomForest::from_json(nlohmann::json{{"format", "other"}}), ModelError);
  EXPECT_THROW(RandomForest::load("/nonexistent/model.json"), Error);
}

TEST(FunctionModel, ClampsProbabilities) {
  FunctionModel f(FeatureSchema({th::cont("a")}), [](std::span<const double> x) { return 3 * x[0]; });
  EXPECT_DOUBLE_EQ(f.positive_proba(Instance{0.5}), 1.5);
  const auto p = predict(f, Instance{0.5});
  EXPECT_DOUBLE_EQ(p.proba[1], 1.0);
  EXPECT_EQ(p.label, 1);
}
