#include <gtest/gtest.h>

#include <sstream>

#include "cafa/explain.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cafa;

namespace {

FeatureSchema unit_schema(std::size_t m) {
  std::vector<Feature> fs;
  for (std::size_t j = 0; j < m; ++j) fs.push_back(th::cont("x" + std::to_string(j)));
  return FeatureSchema(fs);
}

FunctionModel additive(std::size_t m) {
  return FunctionModel(unit_schema(m), [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  });
}

std::vector<Instance> random_rows(const FeatureSchema& s, std::size_t n, Rng& rng) {
  std::vector<Instance> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back(th::random_instance(s, rng));
  return rows;
}

}  // namespace

TEST(Coalition, Examples) {
  const auto f = additive(2);
  const Background bg({{0.0, 0.0}});
  const Instance x{0.4, 0.6};
  const std::vector<std::size_t> all{0, 1}, none{}, first{0};
  EXPECT_DOUBLE_EQ(coalition_value(f, x, all, bg), 1.0);
  EXPECT_DOUBLE_EQ(coalition_value(f, x, none, bg), 0.0);
  EXPECT_DOUBLE_EQ(coalition_value(f, x, first, bg), 0.4);

  const Background bg2({{0.2, 0.2}, {0.6, 0.0}});
  EXPECT_DOUBLE_EQ(coalition_value(f, x, none, bg2), 0.5);
}

TEST(Background, MustBeNonEmpty) {
  EXPECT_THROW(Background({}), ExplanationError);
  EXPECT_THROW(Background({{0.1}, {0.1, 0.2}}), ExplanationError);
}

TEST(ShapleyExact, LinearClosedForm) {
  const auto f = additive(2);
  const auto a = shapley_exact(f, Instance{0.4, 0.6}, Background({{0.0, 0.0}}));
  EXPECT_NEAR(a.phi[0], 0.4, 1e-12);
  EXPECT_NEAR(a.phi[1], 0.6, 1e-12);
  EXPECT_NEAR(a.phi0, 0.0, 1e-12);
  EXPECT_EQ(a.method, Method::kExactShap);
}

TEST(ShapleyExact, DummyFeatureIsExactlyZero) {
  FunctionModel f(unit_schema(4), [](std::span<const double> x) { return x[0] * x[2] + x[3]; });
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Background bg(random_rows(f.schema(), 10, rng));
    const auto a = shapley_exact(f, th::random_instance(f.schema(), rng), bg);
    EXPECT_EQ(a.phi[1], 0.0);
  }
}

TEST(ShapleyExact, ConstantFeatureIsExactlyZero) {
  const auto d = generate_synth(th::mixed_spec(6, 2, 300, 2));
  const auto f = train_forest(d, th::small_forest(1));
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    auto x = th::random_instance(d.schema(), rng);
    auto rows = random_rows(d.schema(), 20, rng);
    for (auto& r : rows) r[3] = x[3];
    const auto a = shapley_exact(f, x, Background(rows));
    EXPECT_EQ(a.phi[3], 0.0);
  }
}

TEST(ShapleyExact, MatchesBruteForce) {
  for (std::size_t m : {4u, 6u}) {
    const auto d = generate_synth(th::mixed_spec(m, 1, 300, m));
    const auto f = train_forest(d, th::small_forest(m, 10));
    Rng rng(m);
    for (int i = 0; i < 10; ++i) {
      const auto x = th::random_instance(d.schema(), rng);
      const auto rows = random_rows(d.schema(), 8, rng);
      const auto a = shapley_exact(f, x, Background(rows));
      const auto truth = oracle::brute_force_shapley(f, x, rows);
      for (std::size_t j = 0; j < m; ++j) EXPECT_NEAR(a.phi[j], truth[j], 1e-9);
    }
  }
}

TEST(ShapleyExact, Efficiency) {
  const auto d = generate_synth(th::mixed_spec(7, 2, 300, 8));
  const auto f = train_forest(d, th::small_forest(8));
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto x = th::random_instance(d.schema(), rng);
    const auto a = shapley_exact(f, x, Background(random_rows(d.schema(), 10, rng)));
    EXPECT_NEAR(a.phi0 + a.sum(), f.positive_proba(x), 1e-6);
    EXPECT_EQ(a.prediction, f.positive_proba(x));
  }
}

// f is symmetric in (x0, x1); with x0 == x1 and a swap-closed background the
// two features must share one value.
TEST(ShapleyExact, Symmetry) {
  FunctionModel f(unit_schema(4), [](std::span<const double> x) {
    return 0.3 * x[0] * x[1] + 0.2 * (x[0] + x[1]) * x[2] + 0.1 * x[3];
  });
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    auto x = th::random_instance(f.schema(), rng);
    x[1] = x[0];
    std::vector<Instance> rows;
    for (int k = 0; k < 5; ++k) {
      auto r = th::random_instance(f.schema(), rng);
      rows.push_back(r);
      std::swap(r[0], r[1]);
      rows.push_back(r);
    }
    const auto a = shapley_exact(f, x, Background(rows));
    EXPECT_NEAR(a.phi[0], a.phi[1], 1e-9);
  }
}

TEST(ShapleyExact, SizeLimit) {
  const auto f = additive(16);
  EXPECT_THROW(shapley_exact(f, Instance(16, 0.5), Background({Instance(16, 0.0)})),
               ShapleySizeError);
  EXPECT_NO_THROW(shapley_exact(f, Instance(16, 0.5), Background({Instance(16, 0.0)}), 16));
}

TEST(ShapleyMc, CloseToExact) {
  const auto d = generate_synth(th::mixed_spec(6, 1, 400, 6));
  const auto f = train_forest(d, th::small_forest(6));
  Rng rng(6);
  const auto rows = random_rows(d.schema(), 50, rng);
  for (int i = 0; i < 5; ++i) {
    const auto x = th::random_instance(d.schema(), rng);
    const auto exact = shapley_exact(f, x, Background(rows));
    const auto mc = shapley_mc(f, x, Background(rows), 2000, i);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(mc.phi[j], exact.phi[j], 0.02);
  }
}

TEST(ShapleyMc, DummyAndEfficiency) {
  FunctionModel f(unit_schema(5), [](std::span<const double> x) { return x[0] * x[1] + 0.5 * x[4]; });
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto x = th::random_instance(f.schema(), rng);
    const auto a = shapley_mc(f, x, Background(random_rows(f.schema(), 30, rng)), 2000, i);
    EXPECT_LE(std::abs(a.phi[2]), 0.02);
    EXPECT_LE(std::abs(a.phi[3]), 0.02);
    EXPECT_NEAR(a.phi0 + a.sum(), f.positive_proba(x), 1e-6);
  }
}

TEST(ShapleyMc, Deterministic) {
  const auto f = additive(5);
  Rng rng(1);
  const Background bg(random_rows(f.schema(), 20, rng));
  const auto x = th::random_instance(f.schema(), rng);
  const auto a = shapley_mc(f, x, bg, 300, 5);
  const auto b = shapley_mc(f, x, bg, 300, 5);
  EXPECT_EQ(a.phi, b.phi);
  EXPECT_EQ(a.phi0, b.phi0);
  EXPECT_THROW(shapley_mc(f, x, bg, 0, 5), UsageError);
}

TEST(ShapleyMc, ErrorShrinksWithPermutations) {
  const auto d = generate_synth(th::mixed_spec(6, 1, 400, 16));
  const auto f = train_forest(d, th::small_forest(16));
  Rng rng(16);
  const Background bg(random_rows(d.schema(), 100, rng));
  const auto x = th::random_instance(d.schema(), rng);
  const auto exact = shapley_exact(f, x, bg);
  std::vector<double> err;
  for (std::size_t n : {100u, 400u, 1600u}) {
    const auto mc = shapley_mc(f, x, bg, n, 1);
    double e = 0.0;
    for (std::size_t j = 0; j < 6; ++j) e = std::max(e, std::abs(mc.phi[j] - exact.phi[j]));
    err.push_back(e);
  }
  const int inversions = (err[1] > err[0]) + (err[2] > err[1]);
  EXPECT_LE(inversions, 1);
  EXPECT_LT(err[2], err[0]);
}

TEST(Lime, ConstantModelHasZeroCoefficients) {
  FeatureSchema s({th::cont("a"), th::cat("b", 3), th::cont("c")});
  FunctionModel f(s, [](std::span<const double>) { return 0.3; });
  const auto a = lime_explain(f, Instance{0.2, 1, 0.8}, s, {}, 1);
  for (double v : a.phi) EXPECT_NEAR(v, 0.0, 1e-6);
  EXPECT_NEAR(a.phi0, 0.3, 1e-9);
}

TEST(Lime, RecoversLinearCoefficient) {
  FeatureSchema s({th::cont("a")});
  FunctionModel f(s, [](std::span<const double> x) { return 3 * x[0]; });
  LimeOptions o;
  o.n_samples = 1000;
  const auto a = lime_explain(f, Instance{0.5}, s, o, 2);
  EXPECT_NEAR(a.phi[0], 3.0, 0.1);
  EXPECT_EQ(a.method, Method::kLime);
}

TEST(Lime, DeterministicAndChecked) {
  FeatureSchema s({th::cont("a"), th::cat("b", 3)});
  FunctionModel f(s, [](std::span<const double> x) { return x[0] * (x[1] + 1) / 3; });
  LimeOptions o;
  o.n_samples = 500;
  const auto a = lime_explain(f, Instance{0.4, 2}, s, o, 9);
  const auto b = lime_explain(f, Instance{0.4, 2}, s, o, 9);
  EXPECT_EQ(a.phi, b.phi);
  EXPECT_EQ(a.phi0, b.phi0);
  o.n_samples = 3;
  EXPECT_THROW(lime_explain(f, Instance{0.4, 2}, s, o, 9), UsageError);
}

TEST(Lime, DegenerateDesignIsAFitError) {
  FeatureSchema s({th::cont("a"), th::cat("b", 1)});
  FunctionModel f(s, [](std::span<const double> x) { return x[0]; });
  EXPECT_THROW(lime_explain(f, Instance{0.4, 0}, s, {}, 1), ExplanationError);
}

TEST(Global, Examples) {
  Attribution a, b;
  a.phi = {1, -1};
  b.phi = {3, 1};
  const auto g = global_explanation(std::vector<Attribution>{a, b});
  EXPECT_EQ(g.mean_phi, (std::vector<double>{2, 0}));
  EXPECT_EQ(g.mean_abs_phi, (std::vector<double>{2, 1}));
  const auto single = global_explanation(std::vector<Attribution>{a});
  EXPECT_EQ(single.mean_phi, a.phi);
  EXPECT_THROW(global_explanation(std::vector<Attribution>{}), ExplanationError);
  Attribution c;
  c.phi = {1};
  EXPECT_THROW(global_explanation(std::vector<Attribution>{a, c}), ExplanationError);
}

TEST(Global, MatchesResummation) {
  Rng rng(5);
  std::vector<Attribution> as(100);
  for (auto& a : as) {
    for (int j = 0; j < 7; ++j) a.phi.push_back(uniform01(rng) - 0.5);
  }
  const auto g = global_explanation(as);
  for (std::size_t j = 0; j < 7; ++j) {
    long double s = 0, sa = 0;
    for (const auto& a : as) {
      s += a.phi[j];
      sa += std::abs(a.phi[j]);
    }
    EXPECT_NEAR(g.mean_phi[j], static_cast<double>(s / 100), 1e-12);
    EXPECT_NEAR(g.mean_abs_phi[j], static_cast<double>(sa / 100), 1e-12);
  }
}

TEST(Global, RankingByMeanAbs) {
  GlobalExplanation g;
  g.mean_abs_phi = {0.1, 0.3, 0.1, 0.2};
  EXPECT_EQ(g.ranking(), (std::vector<std::size_t>{1, 3, 0, 2}));
}

TEST(Pearson, Basics) {
  const std::vector<double> a{1, 2, 3, 5};
  EXPECT_NEAR(pearson(a, a), 1.0, 1e-15);
  const std::vector<double> neg{-1, -2, -3, -5};
  EXPECT_NEAR(pearson(a, neg), -1.0, 1e-15);
  const std::vector<double> flat{2, 2, 2, 2};
  EXPECT_THROW(pearson(a, flat), ExplanationError);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), ExplanationError);
}

TEST(AttributionOutput, CsvSortedByMagnitude) {
  FeatureSchema s({th::cont("a"), th::cont("b"), th::cont("c")});
  Attribution a;
  a.phi = {0.1, -0.5, 0.1};
  std::ostringstream out;
  write_attribution_csv(a, s, out);
  EXPECT_EQ(out.str(), "feature,phi,abs_phi\nb,-0.5,0.5\na,0.1,0.1\nc,0.1,0.1\n");
}

TEST(AttributionOutput, Json) {
  FeatureSchema s({th::cont("a"), th::cont("b")});
  Attribution a;
  a.phi = {0.25, -0.5};
  a.phi0 = 0.1;
  a.method = Method::kMcShap;
  a.seed = 3;
  const auto j = a.to_json(s);
  EXPECT_EQ(j.at("method"), "mc-shap");
  EXPECT_EQ(j.at("phi").at(1).at("feature"), "b");
  EXPECT_EQ(j.at("phi").at(1).at("value"), -0.5);
  EXPECT_EQ(j.at("seed"), 3);
}
