#ifndef CAFA_BENCH_HPP
#define CAFA_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cafa/cafa.hpp"
#include "cafa/model.hpp"
#include "cafa/schema.hpp"
#include "json.hpp"

namespace cafa {

// One generated column. Values are drawn directly on the scaled [0, 1] axis
// (continuous) or as uniform category codes (categorical).
struct SynthFeature {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  std::size_t categories = 0;  // categorical only, >= 2
  bool controllable = true;
  double coef = 0.0;  // weight in the linear label rule

  // Optional correlation: with probability proxy_strength the feature copies
  // the scaled value of feature `proxy_of` (which must come earlier), else
  // it is drawn independently.
  std::optional<std::size_t> proxy_of;
  double proxy_strength = 0.0;
};

// Label rule: y = [sum_j coef_j * u_j > threshold], then flipped with
// probability `noise`. u_j is the continuous value, or code / (categories - 1)
// for a categorical feature. threshold defaults to the median score, which
// gives balanced classes.
struct SynthSpec {
  std::vector<SynthFeature> features;
  std::optional<double> threshold;
  double noise = 0.0;  // epsilon in [0, 0.5)
  std::size_t n_rows = 1000;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);

  // m_c controllable then m_u uncontrollable continuous features named c0..,
  // u0..; the rule reads the first `informative` controllable features with
  // coefficient 1.
  static SynthSpec simple(std::size_t m_controllable, std::size_t m_uncontrollable,
                          std::size_t informative, std::size_t n_rows, double noise,
                          std::uint64_t seed);
};

Dataset generate_synth(const SynthSpec& spec);

// Per-region daily panel: 12 regions x 328 days = 3,936 rows. Ten
// controllable control measures coded by how long they have been in force
// (0: off, then 1-5, 6-15, 16-30, >30 days) and seven uncontrollable
// covariates (cases, cum_cases, deaths, tests, temperature, humidity,
// region). The label stands in for R_t > 1 and is driven mostly by CR and PB.
Dataset covid_preset(std::uint64_t seed = 0);

inline constexpr std::size_t kCovidRows = 3936;
const std::vector<std::string>& covid_measures();    // SC, MInd, ... NS
const std::vector<std::string>& covid_duration_codes();  // "0", "1-5", ...

// Lung-cancer shaped table: 2,242 rows, 4 uncontrollable + 24 controllable
// mixed-kind features.
Dataset lung_preset(std::uint64_t seed = 0);

// Mutual information (nats) between the label and one categorical feature,
// or a continuous feature discretised into `bins` equal-width bins.
double mutual_information(const Dataset& data, std::size_t feature, std::size_t bins = 10);

// Seeded split: returns (train, test) with round(test_fraction * n) test rows.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed);

// Loads the dataset named by an experiment/CLI "dataset" block:
//   {"type": "csv", "path": ..., "config": <ingest path or object>}
//   {"type": "synth", "spec": {...}}
//   {"type": "covid_preset" | "lung_preset", "seed": n}
// Relative paths resolve against `base`.
Dataset load_dataset(const nlohmann::json& block, const std::filesystem::path& base);

// Reads one instance from a headered CSV (first data row). Columns are matched
// to `data`'s features by name; extra columns are ignored.
Instance read_instance_csv(const std::filesystem::path& path, const Dataset& data);

struct ExperimentOptions {
  bool timestamp = true;  // embed generation time in SVG metadata
};

struct ExperimentReport {
  std::filesystem::path out_dir;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
  double pi = 0.0;
  Attribution shap_local;
  CafaResult cafa_local;
  double pearson_local = 0.0;  // signed, over F_c; NaN when undefined
  GlobalExplanation shap_global;
  CafaGlobalResult cafa_global;
  std::vector<std::size_t> sample;  // row indices of the global sample
};

// Runs the full study described by an experiment config and writes its
// reports. Required keys: dataset, output. Optional: model (forest params),
// cafa (CafaConfig), split {test_fraction, seed}, instance (row index or
// {"file": csv}), sample (global sample size, default 100), shap
// {background, n_perms}, seed.
ExperimentReport run_experiment(const std::filesystem::path& config_path,
                                const ExperimentOptions& options = {});
ExperimentReport run_experiment(const nlohmann::json& config, const std::filesystem::path& base,
                                const ExperimentOptions& options = {});

// Keys run_experiment requires, in the order the usage error lists them.
const std::vector<std::string>& experiment_required_keys();

}  // namespace cafa

#endif  // CAFA_BENCH_HPP
