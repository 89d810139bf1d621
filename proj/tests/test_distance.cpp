#include <gtest/gtest.h>

#include "cafa/distance.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cafa;

TEST(FeatureDistance, Examples) {
  EXPECT_EQ(feature_distance(FeatureKind::kCategorical, 3, 3), 0.0);
  EXPECT_EQ(feature_distance(FeatureKind::kCategorical, 3, 5), 1.0);
  EXPECT_DOUBLE_EQ(feature_distance(FeatureKind::kContinuous, 0.2, 0.7), 0.5);
}

TEST(FeatureDistance, KindMismatch) {
  EXPECT_THROW(feature_distance(FeatureKind::kCategorical, 0.5, 1), DataError);
  EXPECT_THROW(feature_distance(FeatureKind::kContinuous, 2, 1), DataError);
}

TEST(Delta, Examples) {
  FeatureSchema four({th::cat("a", 3), th::cat("b", 3), th::cont("c"), th::cont("d")});
  const DistanceParams p4(four);
  const Instance x{1, 2, 0.3, 0.9};
  EXPECT_EQ(delta(x, x, p4), 0.0);
  EXPECT_DOUBLE_EQ(delta(x, Instance{0, 2, 0.3, 0.9}, p4), 0.25);

  FeatureSchema two({th::cont("a", true, 1.0), th::cont("b", true, 3.0)});
  EXPECT_DOUBLE_EQ(delta(Instance{0.4, 0.2}, Instance{0.0, 0.2}, DistanceParams(two)), 0.1);
}

TEST(Delta, ArityMismatch) {
  const DistanceParams p(FeatureSchema({th::cont("a"), th::cont("b")}));
  EXPECT_THROW(delta(Instance{0.1}, Instance{0.1, 0.2}, p), DataError);
}

TEST(Delta, MetricProperties) {
  FeatureSchema s({th::cat("a", 4, true, 2.0), th::cont("b", true, 0.5), th::cont("c"),
                   th::cat("d", 2, false, 1.5), th::cont("e", false, 3.0)});
  const DistanceParams p(s);
  Rng rng(42);
  for (int i = 0; i < 10000; ++i) {
    const auto a = th::random_instance(s, rng);
    const auto b = th::random_instance(s, rng);
    const auto c = th::random_instance(s, rng);
    const double ab = delta(a, b, p), ba = delta(b, a, p);
    EXPECT_EQ(ab, ba);
    EXPECT_EQ(delta(a, a, p), 0.0);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_LE(ab, delta(a, c, p) + delta(c, b, p) + 1e-12);
    EXPECT_NEAR(ab, oracle::distance(s, a, b), 1e-12);
  }
}

TEST(Delta, ZeroDistanceMeansAgreementOnWeightedFeatures) {
  FeatureSchema s({th::cont("a"), th::cat("b", 3), th::cont("z", true, 0.0)});
  const DistanceParams p(s);
  EXPECT_EQ(delta(Instance{0.3, 1, 0.0}, Instance{0.3, 1, 1.0}, p), 0.0);
  EXPECT_GT(delta(Instance{0.3, 1, 0.0}, Instance{0.3, 2, 0.0}, p), 0.0);
}

TEST(Delta, ZeroWeightFeaturesNeverMatter) {
  FeatureSchema s({th::cont("a"), th::cat("z1", 5, true, 0.0), th::cont("z2", false, 0.0)});
  const DistanceParams p(s);
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    auto a = th::random_instance(s, rng);
    auto b = th::random_instance(s, rng);
    const double before = delta(a, b, p);
    a[1] = static_cast<double>(uniform_index(rng, 5));
    b[2] = uniform01(rng);
    EXPECT_EQ(delta(a, b, p), before);
  }
}

TEST(Delta, AllZeroWeightsRejectedAtSchema) {
  EXPECT_THROW(FeatureSchema({th::cont("a", true, 0.0)}), DataError);
}

TEST(Proximity, Examples) {
  FeatureSchema s({th::cont("a")});
  EXPECT_EQ(estimate_proximity(Dataset(s, {{0.4}, {0.4}}, {0, 1}, {"0", "1"}), DistanceParams(s)),
            0.0);
  EXPECT_EQ(estimate_proximity(Dataset(s, {{0.0}, {1.0}}, {0, 1}, {"0", "1"}), DistanceParams(s)),
            1.0);
  EXPECT_THROW(estimate_proximity(Dataset(s, {{0.0}}, {0}, {"0", "1"}), DistanceParams(s)),
               DataError);
}

TEST(Proximity, MatchesAllPairsOracle) {
  const auto d = generate_synth(th::mixed_spec(6, 2, 100, 3));
  const DistanceParams p(d.schema());
  const double truth = oracle::all_pairs_mean(d);
  // 4,950 pairs <= 10,000: exhaustive path.
  EXPECT_NEAR(estimate_proximity(d, p), truth, 1e-12);
  // Sampled path.
  EXPECT_NEAR(estimate_proximity(d, p, 1000, 5), truth, 0.02);
}

TEST(Proximity, DeterministicGivenSeed) {
  const auto d = generate_synth(th::mixed_spec(6, 2, 500, 3));
  const DistanceParams p(d.schema());
  EXPECT_EQ(estimate_proximity(d, p, 2000, 1), estimate_proximity(d, p, 2000, 1));
  EXPECT_NE(estimate_proximity(d, p, 2000, 1), estimate_proximity(d, p, 2000, 2));
}
