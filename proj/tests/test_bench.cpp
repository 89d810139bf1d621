#include <gtest/gtest.h>

#include <filesystem>

#include "cafa/bench.hpp"
#include "helpers.hpp"

using namespace cafa;
namespace fs = std::filesystem;

TEST(Synth, NoiselessTwoFeatureRuleIsLearnable) {
  auto spec = SynthSpec::simple(2, 0, 2, 1000, 0.0, 1);
  const auto data = generate_synth(spec);
  const auto [train, test] = train_test_split(data, 0.3, 1);
  const auto f = train_forest(train, th::small_forest(1, 50));
  EXPECT_GE(accuracy(f, test), 0.95);
}

TEST(Synth, Validation) {
  auto spec = SynthSpec::simple(2, 1, 1, 100, 0.0, 1);
  spec.n_rows = 0;
  EXPECT_THROW(generate_synth(spec), UsageError);
  spec = SynthSpec::simple(2, 1, 1, 100, 0.5, 1);
  EXPECT_THROW(generate_synth(spec), UsageError);
  spec = SynthSpec::simple(2, 1, 1, 100, 0.0, 1);
  spec.features[0].proxy_of = 1;
  EXPECT_THROW(generate_synth(spec), UsageError);
}

TEST(Synth, DeterministicAndSchemaShaped) {
  const auto spec = th::mixed_spec(5, 2, 200, 9);
  const auto a = generate_synth(spec), b = generate_synth(spec);
  EXPECT_EQ(a.rows(), b.rows());
  EXPECT_EQ(a.labels(), b.labels());
  EXPECT_EQ(a.schema().uncontrollable(), (std::vector<std::size_t>{0, 1}));
  auto other = spec;
  other.seed = 10;
  EXPECT_NE(generate_synth(other).rows(), a.rows());
  EXPECT_EQ(SynthSpec::from_json(spec.to_json()).to_json(), spec.to_json());
}

TEST(Covid, ShapeAndSignal) {
  const auto d = covid_preset(0);
  EXPECT_EQ(d.size(), kCovidRows);
  EXPECT_EQ(d.schema().size(), 17u);
  EXPECT_EQ(d.schema().controllable().size(), 10u);
  EXPECT_EQ(d.schema().uncontrollable().size(), 7u);
  const auto [train, test] = train_test_split(d, 0.3, 0);
  const auto f = train_forest(train, ForestParams{});
  EXPECT_GE(accuracy(f, test), 0.85);

  const double mi_cr = mutual_information(d, d.schema().index_of("CR"));
  for (auto j : d.schema().uncontrollable()) {
    EXPECT_GT(mi_cr, mutual_information(d, j)) << d.schema()[j].name;
  }
  EXPECT_EQ(covid_measures().size(), 10u);
  EXPECT_EQ(covid_duration_codes().size(), 5u);
}

TEST(Lung, Shape) {
  const auto d = lung_preset(0);
  EXPECT_EQ(d.size(), 2242u);
  EXPECT_EQ(d.schema().size(), 28u);
  EXPECT_EQ(d.schema().uncontrollable().size(), 4u);
  EXPECT_EQ(d.schema().controllable().size(), 24u);
}

TEST(MutualInformation, Extremes) {
  FeatureSchema s({th::cat("c", 2), th::cat("r", 2)});
  std::vector<Instance> rows;
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) {
    rows.push_back({static_cast<double>(i % 2), static_cast<double>((i / 2) % 2)});
    labels.push_back(i % 2);
  }
  const Dataset d(s, rows, labels, {"0", "1"});
  EXPECT_NEAR(mutual_information(d, 0), std::log(2.0), 1e-12);
  EXPECT_NEAR(mutual_information(d, 1), 0.0, 1e-12);
}

TEST(Split, SizesAndDisjointness) {
  const auto d = generate_synth(th::mixed_spec(4, 1, 101, 2));
  const auto [train, test] = train_test_split(d, 0.3, 5);
  EXPECT_EQ(test.size(), 30u);
  EXPECT_EQ(train.size(), 71u);
  EXPECT_THROW(train_test_split(d, 1.0, 5), UsageError);
  const auto again = train_test_split(d, 0.3, 5);
  EXPECT_EQ(again.first.rows(), train.rows());
}

TEST(LoadDataset, Blocks) {
  const auto csv = load_dataset({{"type", "csv"}, {"path", "breast_cancer.csv"},
                                 {"config", "breast_cancer.json"}},
                                CAFA_TEST_DATA);
  EXPECT_EQ(csv.size(), 286u);
  const auto synth = load_dataset(
      {{"type", "synth"}, {"spec", SynthSpec::simple(3, 1, 2, 50, 0.0, 1).to_json()}}, ".");
  EXPECT_EQ(synth.size(), 50u);
  EXPECT_THROW(load_dataset({{"type", "parquet"}}, "."), UsageError);
  EXPECT_THROW(load_dataset({{"path", "x"}}, "."), UsageError);
}

TEST(Experiment, MissingKeysAreListed) {
  try {
    run_experiment(nlohmann::json::object(), ".");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("dataset, output"), std::string::npos) << e.what();
  }
}

TEST(Experiment, SmallRunWritesReports) {
  const auto dir = fs::temp_directory_path() / "cafa_test_experiment";
  fs::remove_all(dir);
  nlohmann::json cfg = {
      {"dataset", {{"type", "synth"}, {"spec", th::mixed_spec(5, 2, 300, 4).to_json()}}},
      {"output", dir.string()},
      {"model", {{"n_trees", 20}, {"max_depth", 6}}},
      {"cafa", {{"k", 60}, {"n_locals", 20}, {"explainer", {{"kind", "mc"}, {"n_perms", 100}}}}},
      {"shap", {{"background", 30}}},
      {"sample", 4},
      {"seed", 2}};
  const auto rep = run_experiment(cfg, ".", ExperimentOptions{false});
  for (const char* name : {"attribution.csv", "shap_local.csv", "global.csv", "attribution.json",
                           "run_meta.json", "bars.svg", "summary.svg"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  EXPECT_EQ(rep.sample.size(), 4u);
  EXPECT_GT(rep.pi, 0.0);
  for (auto j : std::vector<std::size_t>{0, 1}) EXPECT_EQ(rep.cafa_local.attribution.phi[j], 0.0);
  fs::remove_all(dir);
}
