#include "cafa/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "cafa/chart.hpp"
#include "cafa/distance.hpp"
#include "cafa/random.hpp"

namespace cafa {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// synthetic tables

void SynthSpec::validate() const {
  if (n_rows == 0) throw UsageError("n_rows must be >= 1");
  if (features.empty()) throw UsageError("synthetic spec needs at least one feature");
  if (!(noise >= 0.0 && noise < 0.5)) throw UsageError("noise must lie in [0, 0.5)");
  for (std::size_t j = 0; j < features.size(); ++j) {
    const auto& f = features[j];
    if (f.kind == FeatureKind::kCategorical && f.categories < 2) {
      throw UsageError("categorical feature '" + f.name + "' needs >= 2 categories");
    }
    if (f.proxy_of && *f.proxy_of >= j) {
      throw UsageError("feature '" + f.name + "' can only proxy an earlier feature");
    }
    if (!(f.proxy_strength >= 0.0 && f.proxy_strength <= 1.0)) {
      throw UsageError("proxy_strength must lie in [0, 1]");
    }
  }
}

nlohmann::json SynthSpec::to_json() const {
  nlohmann::json fs_ = nlohmann::json::array();
  for (const auto& f : features) {
    nlohmann::json jf = {{"name", f.name},
                         {"kind", f.kind == FeatureKind::kCategorical ? "cat" : "cont"},
                         {"controllable", f.controllable},
                         {"coef", f.coef}};
    if (f.kind == FeatureKind::kCategorical) jf["categories"] = f.categories;
    if (f.proxy_of) {
      jf["proxy_of"] = *f.proxy_of;
      jf["proxy_strength"] = f.proxy_strength;
    }
    fs_.push_back(jf);
  }
  nlohmann::json j = {{"features", fs_}, {"noise", noise}, {"n_rows", n_rows}, {"seed", seed}};
  j["threshold"] = threshold ? nlohmann::json(*threshold) : nlohmann::json("median");
  return j;
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    if (j.contains("m_controllable") || j.contains("m_uncontrollable")) {
      s = simple(j.value("m_controllable", std::size_t{0}), j.value("m_uncontrollable", std::size_t{0}),
                 j.value("informative", std::size_t{2}), j.value("n_rows", s.n_rows),
                 j.value("noise", 0.0), j.value("seed", std::uint64_t{0}));
    }
    if (j.contains("features")) {
      s.features.clear();
      for (const auto& jf : j.at("features")) {
        SynthFeature f;
        f.name = jf.at("name").get<std::string>();
        const std::string kind = jf.value("kind", std::string("cont"));
        if (kind == "cat") {
          f.kind = FeatureKind::kCategorical;
          f.categories = jf.at("categories").get<std::size_t>();
        } else if (kind != "cont") {
          throw UsageError("feature kind must be \"cat\" or \"cont\"");
        }
        f.controllable = jf.value("controllable", true);
        f.coef = jf.value("coef", 0.0);
        if (jf.contains("proxy_of")) {
          f.proxy_of = jf.at("proxy_of").get<std::size_t>();
          f.proxy_strength = jf.value("proxy_strength", 0.0);
        }
        s.features.push_back(std::move(f));
      }
    }
    if (j.contains("threshold") && j.at("threshold").is_number()) {
      s.threshold = j.at("threshold").get<double>();
    }
    s.noise = j.value("noise", s.noise);
    s.n_rows = j.value("n_rows", s.n_rows);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

SynthSpec SynthSpec::simple(std::size_t m_controllable, std::size_t m_uncontrollable,
                            std::size_t informative, std::size_t n_rows, double noise,
                            std::uint64_t seed) {
  SynthSpec s;
  for (std::size_t i = 0; i < m_controllable; ++i) {
    s.features.push_back({"c" + std::to_string(i), FeatureKind::kContinuous, 0, true,
                          i < informative ? 1.0 : 0.0, std::nullopt, 0.0});
  }
  for (std::size_t i = 0; i < m_uncontrollable; ++i) {
    s.features.push_back(
        {"u" + std::to_string(i), FeatureKind::kContinuous, 0, false, 0.0, std::nullopt, 0.0});
  }
  s.n_rows = n_rows;
  s.noise = noise;
  s.seed = seed;
  return s;
}

namespace {

FeatureSchema synth_schema(const SynthSpec& spec) {
  std::vector<Feature> fs;
  for (const auto& f : spec.features) {
    Feature out;
    out.name = f.name;
    out.kind = f.kind;
    out.controllable = f.controllable;
    if (f.kind == FeatureKind::kCategorical) {
      for (std::size_t c = 0; c < f.categories; ++c) out.vocabulary.push_back(std::to_string(c));
    }
    fs.push_back(std::move(out));
  }
  return FeatureSchema(std::move(fs));
}

double scaled(const Feature& f, double v) {
  return f.categorical() ? v / static_cast<double>(f.vocabulary.size() - 1) : v;
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2) return hi;
  return (*std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)) + hi) / 2;
}

}  // namespace

Dataset generate_synth(const SynthSpec& spec) {
  spec.validate();
  FeatureSchema schema = synth_schema(spec);
  const std::size_t m = spec.features.size();
  Rng rng(derive_seed(spec.seed, 0x51));

  std::vector<Instance> rows(spec.n_rows, Instance(m));
  std::vector<double> scores(spec.n_rows, 0.0);
  for (std::size_t r = 0; r < spec.n_rows; ++r) {
    Instance& x = rows[r];
    for (std::size_t j = 0; j < m; ++j) {
      const auto& f = spec.features[j];
      const bool copy = f.proxy_of && uniform01(rng) < f.proxy_strength;
      if (f.kind == FeatureKind::kCategorical) {
        const double top = static_cast<double>(f.categories - 1);
        x[j] = copy ? std::round(scaled(schema[*f.proxy_of], x[*f.proxy_of]) * top)
                    : static_cast<double>(uniform_index(rng, f.categories));
      } else {
        x[j] = copy ? scaled(schema[*f.proxy_of], x[*f.proxy_of]) : uniform01(rng);
      }
      scores[r] += f.coef * scaled(schema[j], x[j]);
    }
  }

  const double threshold = spec.threshold ? *spec.threshold
                                          : (spec.n_rows ? median(scores) : 0.0);
  std::vector<int> labels(spec.n_rows);
  for (std::size_t r = 0; r < spec.n_rows; ++r) {
    int y = scores[r] > threshold ? 1 : 0;
    if (spec.noise > 0.0 && uniform01(rng) < spec.noise) y = 1 - y;
    labels[r] = y;
  }
  std::vector<std::optional<NormRange>> norm(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (!schema[j].categorical()) norm[j] = NormRange{0.0, 1.0};
  }
  return Dataset(std::move(schema), std::move(rows), std::move(labels), {"0", "1"},
                 std::move(norm));
}

// ---------------------------------------------------------------------------
// COVID-style panel

const std::vector<std::string>& covid_measures() {
  static const std::vector<std::string> names = {"SC", "MInd", "MOut", "DT", "IT",
                                                 "HV", "CR",   "PB",   "SL", "NS"};
  return names;
}

const std::vector<std::string>& covid_duration_codes() {
  static const std::vector<std::string> codes = {"0", "1-5", "6-15", "16-30", ">30"};
  return codes;
}

namespace {

const std::vector<std::string> kRegions = {
    "North East", "North West", "Yorkshire", "East Midlands", "West Midlands", "East",
    "London",     "South East", "South West", "Wales",        "Scotland",      "Northern Ireland"};

constexpr std::size_t kCovidDays = 328;

int duration_code(int days_on) {
  if (days_on <= 0) return 0;
  if (days_on <= 5) return 1;
  if (days_on <= 15) return 2;
  if (days_on <= 30) return 3;
  return 4;
}

// Suppression contributed by a measure that has been in force for a bucket.
constexpr double kRampUp[] = {0.0, 0.35, 0.7, 0.9, 1.0};

}  // namespace

Dataset covid_preset(std::uint64_t seed) {
  const auto& measures = covid_measures();
  const std::size_t n_measures = measures.size();
  const std::size_t cr = 6, pb = 7;

  std::vector<Feature> fs;
  for (const auto& name : measures) {
    fs.push_back({name, FeatureKind::kCategorical, covid_duration_codes(), true, 1.0});
  }
  for (const char* name : {"cases", "cum_cases", "deaths", "tests", "temperature", "humidity"}) {
    fs.push_back({name, FeatureKind::kContinuous, {}, false, 1.0});
  }
  fs.push_back({"region", FeatureKind::kCategorical, kRegions, false, 1.0});
  FeatureSchema schema(std::move(fs));
  const std::size_t m = schema.size();

  std::vector<Instance> rows;
  std::vector<int> labels;
  rows.reserve(kCovidRows);
  labels.reserve(kCovidRows);

  for (std::size_t r = 0; r < kRegions.size(); ++r) {
    Rng rng(derive_seed(seed, 0xc0, r));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double size = 0.5 + uniform01(rng);
    const double warm = gauss(rng);

    // Alternating off/on windows per measure: days_on[k][t] = days in force.
    std::vector<std::vector<int>> days_on(n_measures, std::vector<int>(kCovidDays, 0));
    for (std::size_t k = 0; k < n_measures; ++k) {
      std::size_t t = 0;
      bool on = uniform01(rng) < 0.3;
      while (t < kCovidDays) {
        const std::size_t len = on ? 15 + uniform_index(rng, 76) : 8 + uniform_index(rng, 53);
        for (std::size_t d = 0; d < len && t < kCovidDays; ++d, ++t) {
          days_on[k][t] = on ? static_cast<int>(d) + 1 : 0;
        }
        on = !on;
      }
    }

    double infected = 20.0 + 40.0 * uniform01(rng);
    double cum = 0.0;
    std::vector<double> history;
    for (std::size_t t = 0; t < kCovidDays; ++t) {
      Instance x(m, 0.0);
      double suppression = 0.0;
      for (std::size_t k = 0; k < n_measures; ++k) {
        const int code = duration_code(days_on[k][t]);
        x[k] = code;
        const double w = k == cr ? 1.5 : k == pb ? 1.3 : 0.08;
        suppression += w * kRampUp[code];
      }
      const double season = std::cos(2.0 * std::numbers::pi * (static_cast<double>(t) + 30.0) / 365.0);
      const double temperature = 11.0 - 7.0 * season + warm + 1.5 * gauss(rng);
      const double humidity = 76.0 + 8.0 * season + 5.0 * gauss(rng);
      // Transmission index; > 0 stands for R_t > 1.
      const double z = 1.05 - suppression + 0.25 * season + 0.15 * gauss(rng);

      const double cases = infected * size * std::exp(0.1 * gauss(rng));
      cum += cases;
      history.push_back(cases);
      const double lagged = history[t >= 14 ? t - 14 : 0];
      const double deaths = 0.02 * lagged * std::exp(0.3 * gauss(rng));
      const double tests =
          (8.0 * cases + 900.0 * size * (1.0 + static_cast<double>(t) / kCovidDays)) *
          std::exp(0.1 * gauss(rng));

      x[n_measures + 0] = cases;
      x[n_measures + 1] = cum;
      x[n_measures + 2] = deaths;
      x[n_measures + 3] = tests;
      x[n_measures + 4] = temperature;
      x[n_measures + 5] = humidity;
      x[n_measures + 6] = static_cast<double>(r);

      int y = z > 0.0 ? 1 : 0;
      if (uniform01(rng) < 0.02) y = 1 - y;
      rows.push_back(std::move(x));
      labels.push_back(y);

      infected = std::clamp(infected * std::exp(0.12 * std::clamp(z, -1.0, 1.0)), 5.0, 20000.0);
    }
  }

  // Min-max scale the raw covariates.
  std::vector<std::optional<NormRange>> norm(m);
  for (std::size_t j = n_measures; j < n_measures + 6; ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& x : rows) {
      lo = std::min(lo, x[j]);
      hi = std::max(hi, x[j]);
    }
    norm[j] = NormRange{lo, hi};
    for (auto& x : rows) x[j] = normalize(x[j], lo, hi);
  }
  return Dataset(std::move(schema), std::move(rows), std::move(labels), {"R<=1", "R>1"},
                 std::move(norm));
}

// ---------------------------------------------------------------------------
// lung-cancer shaped preset

Dataset lung_preset(std::uint64_t seed) {
  using K = FeatureKind;
  SynthSpec s;
  s.n_rows = 2242;
  s.noise = 0.05;
  s.seed = seed;
  auto add = [&](std::string name, K kind, std::size_t cats, bool ctrl, double coef,
                 std::optional<std::size_t> proxy = std::nullopt, double strength = 0.0) {
    s.features.push_back({std::move(name), kind, cats, ctrl, coef, proxy, strength});
  };
  // uncontrollable: 0..3
  add("age", K::kContinuous, 0, false, 1.2);
  add("sex", K::kCategorical, 2, false, 0.2);
  add("ethnicity", K::kCategorical, 6, false, 0.0);
  add("deprivation", K::kCategorical, 5, false, 0.3);
  // controllable: 4..27
  add("smoking_status", K::kCategorical, 3, true, 2.0);
  add("pack_years", K::kContinuous, 0, true, 1.5, 4, 0.7);
  add("years_since_quit", K::kContinuous, 0, true, -0.4);
  add("bmi", K::kContinuous, 0, true, -0.3);
  add("alcohol", K::kCategorical, 4, true, 0.3);
  add("physical_activity", K::kCategorical, 4, true, -0.4);
  add("diet_score", K::kContinuous, 0, true, -0.2);
  add("asbestos_exposure", K::kCategorical, 2, true, 0.8);
  add("radon_exposure", K::kContinuous, 0, true, 0.5);
  add("air_pollution", K::kContinuous, 0, true, 0.4, 3, 0.5);
  add("occupational_dust", K::kCategorical, 2, true, 0.3);
  add("passive_smoke", K::kCategorical, 3, true, 0.3);
  add("copd_treatment", K::kCategorical, 2, true, 0.2);
  add("statin_use", K::kCategorical, 2, true, 0.0);
  add("aspirin_use", K::kCategorical, 2, true, 0.0);
  add("fruit_veg_portions", K::kContinuous, 0, true, -0.2);
  add("sleep_hours", K::kContinuous, 0, true, 0.0);
  add("screening_uptake", K::kCategorical, 2, true, -0.3);
  add("gp_visits", K::kContinuous, 0, true, 0.0);
  add("housing_damp", K::kCategorical, 2, true, 0.1);
  add("cooking_fuel", K::kCategorical, 3, true, 0.2);
  add("vitamin_d", K::kContinuous, 0, true, -0.1);
  add("stress_score", K::kContinuous, 0, true, 0.0);
  add("oxygen_saturation", K::kContinuous, 0, true, -0.2);
  return generate_synth(s);
}

// ---------------------------------------------------------------------------
// utilities

double mutual_information(const Dataset& data, std::size_t feature, std::size_t bins) {
  const auto& f = data.schema()[feature];
  const std::size_t levels = f.categorical() ? f.vocabulary.size() : std::max<std::size_t>(bins, 1);
  const std::size_t classes = data.num_classes();
  std::vector<double> joint(levels * classes, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = data.row(i)[feature];
    const std::size_t b = f.categorical()
                              ? static_cast<std::size_t>(v)
                              : std::min(levels - 1, static_cast<std::size_t>(v * levels));
    joint[b * classes + static_cast<std::size_t>(data.label(i))] += 1.0;
  }
  const double n = static_cast<double>(data.size());
  std::vector<double> pb(levels, 0.0), pc(classes, 0.0);
  for (std::size_t b = 0; b < levels; ++b) {
    for (std::size_t c = 0; c < classes; ++c) {
      pb[b] += joint[b * classes + c] / n;
      pc[c] += joint[b * classes + c] / n;
    }
  }
  double mi = 0.0;
  for (std::size_t b = 0; b < levels; ++b) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = joint[b * classes + c] / n;
      if (p > 0.0) mi += p * std::log(p / (pb[b] * pc[c]));
    }
  }
  return mi;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError("test_fraction must lie in (0, 1)");
  }
  const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * data.size()));
  if (n_test == 0 || n_test >= data.size()) throw DataError("dataset too small to split");
  Rng rng(derive_seed(seed, 0x5e));
  const auto test = sample_without_replacement(rng, data.size(), n_test);
  std::vector<std::size_t> train;
  std::size_t t = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (t < test.size() && test[t] == i) {
      ++t;
    } else {
      train.push_back(i);
    }
  }
  return {data.subset(train), data.subset(test)};
}

Dataset load_dataset(const nlohmann::json& block, const fs::path& base) {
  try {
    const std::string type = block.at("type").get<std::string>();
    if (type == "csv") {
      const fs::path path = base / block.at("path").get<std::string>();
      const auto& cfg = block.at("config");
      const IngestConfig ic = cfg.is_string() ? IngestConfig::load(base / cfg.get<std::string>())
                                              : IngestConfig::from_json(cfg);
      return load_csv(path, ic);
    }
    if (type == "synth") return generate_synth(SynthSpec::from_json(block.at("spec")));
    if (type == "covid_preset") return covid_preset(block.value("seed", std::uint64_t{0}));
    if (type == "lung_preset") return lung_preset(block.value("seed", std::uint64_t{0}));
    throw UsageError("unknown dataset type '" + type +
                     "' (expected csv, synth, covid_preset or lung_preset)");
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed dataset block: ") + e.what());
  }
}

Instance read_instance_csv(const fs::path& path, const Dataset& data) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open instance file " + path.string());
  const auto table = parse_csv(in);
  if (table.size() < 2) throw DataError(path.string() + ": expected a header and one data row");
  const auto& header = table[0];
  const auto& cells = table[1];
  if (cells.size() != header.size()) {
    throw DataError(path.string() + ": line 2 has " + std::to_string(cells.size()) +
                    " cells, header has " + std::to_string(header.size()));
  }
  std::map<std::string, std::string> raw;
  for (std::size_t c = 0; c < header.size(); ++c) raw[header[c]] = cells[c];
  return data.encode(raw);
}

// ---------------------------------------------------------------------------
// experiment driver

const std::vector<std::string>& experiment_required_keys() {
  static const std::vector<std::string> keys = {"dataset", "output"};
  return keys;
}

namespace {

nlohmann::json global_json(const GlobalExplanation& g, const FeatureSchema& schema) {
  nlohmann::json rows = nlohmann::json::array();
  for (auto j : g.ranking()) {
    rows.push_back({{"feature", schema[j].name},
                    {"controllable", schema[j].controllable},
                    {"mean_phi", g.mean_phi[j]},
                    {"mean_abs_phi", g.mean_abs_phi[j]}});
  }
  return {{"ordering", "mean_abs_phi"}, {"phi0", g.mean_phi0}, {"features", rows}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

double shade_of(const Feature& f, double v) {
  return f.categorical() && f.vocabulary.size() > 1
             ? v / static_cast<double>(f.vocabulary.size() - 1)
             : v;
}

}  // namespace

ExperimentReport run_experiment(const fs::path& config_path, const ExperimentOptions& options) {
  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot open experiment config " + config_path.string());
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(config_path.string() + ": " + e.what());
  }
  return run_experiment(cfg, config_path.parent_path(), options);
}

ExperimentReport run_experiment(const nlohmann::json& cfg, const fs::path& base,
                                const ExperimentOptions& options) {
  std::vector<std::string> missing;
  for (const auto& k : experiment_required_keys()) {
    if (!cfg.is_object() || !cfg.contains(k)) missing.push_back(k);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& k : missing) list += (list.empty() ? "" : ", ") + k;
    throw UsageError("experiment config is missing required keys: " + list);
  }

  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(name) + ": " + e.what());
    }
  };

  const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
  const std::size_t sample_size = cfg.value("sample", std::size_t{100});
  const nlohmann::json shap_block = cfg.value("shap", nlohmann::json::object());
  const std::size_t bg_size = shap_block.value("background", std::size_t{100});

  ExperimentReport rep;
  rep.out_dir = base / cfg.at("output").get<std::string>();

  const Dataset data = stage("dataset", [&] { return load_dataset(cfg.at("dataset"), base); });
  const FeatureSchema& schema = data.schema();

  std::optional<Dataset> train_holder, test_holder;
  nlohmann::json split_json = nullptr;
  if (cfg.contains("split")) {
    const double frac = cfg["split"].value("test_fraction", 0.3);
    const std::uint64_t split_seed = cfg["split"].value("seed", seed);
    auto parts = stage("split", [&] { return train_test_split(data, frac, split_seed); });
    train_holder.emplace(std::move(parts.first));
    test_holder.emplace(std::move(parts.second));
    split_json = {{"test_fraction", frac}, {"seed", split_seed}};
  }
  const Dataset& train = train_holder ? *train_holder : data;

  ForestParams fp;
  if (cfg.contains("model")) fp = ForestParams::from_json(cfg["model"]);
  if (!cfg.contains("model") || !cfg["model"].contains("seed")) fp.seed = seed;
  const RandomForest f = stage("model", [&] { return train_forest(train, fp); });
  rep.train_accuracy = accuracy(f, train);
  if (test_holder) rep.test_accuracy = accuracy(f, *test_holder);

  CafaConfig cc = cfg.contains("cafa") ? CafaConfig::from_json(cfg["cafa"]) : CafaConfig{};
  if (!cfg.contains("cafa") || !cfg["cafa"].contains("seed")) cc.seed = seed;
  resolve_proximity(cc, train);
  rep.pi = *cc.pi;

  CafaConfig shap_cfg = cc;
  shap_cfg.explainer.n_perms = shap_block.value("n_perms", std::size_t{2000});
  const Background bg = sample_background(train, bg_size, derive_seed(seed, 21));

  // Local study on the named instance.
  Instance x;
  nlohmann::json instance_json;
  const nlohmann::json inst = cfg.value("instance", nlohmann::json(0));
  if (inst.is_object()) {
    const fs::path file = base / inst.at("file").get<std::string>();
    x = stage("instance", [&] { return read_instance_csv(file, data); });
    instance_json = {{"file", inst.at("file")}};
  } else {
    const auto idx = inst.get<std::size_t>();
    if (idx >= data.size()) {
      throw UsageError("instance index " + std::to_string(idx) + " out of range");
    }
    x = data.row(idx);
    instance_json = {{"row", idx}};
  }
  nlohmann::json values = nlohmann::json::object();
  for (std::size_t j = 0; j < schema.size(); ++j) values[schema[j].name] = data.display_value(j, x[j]);
  instance_json["values"] = values;

  rep.shap_local = stage("local shap", [&] { return standard_shap(f, x, bg, shap_cfg); });
  rep.cafa_local = stage("local cafa", [&] { return cafa_local(x, f, schema, cc); });
  rep.pearson_local = std::numeric_limits<double>::quiet_NaN();
  if (schema.controllable().size() >= 2) {
    try {
      rep.pearson_local = signed_pearson_controllable(rep.cafa_local, rep.shap_local, schema);
    } catch (const ExplanationError&) {
    }
  }

  // Global study on a seeded sample of rows.
  {
    Rng rng(derive_seed(seed, 31));
    rep.sample = sample_without_replacement(rng, data.size(), sample_size);
  }
  std::vector<Instance> xs;
  for (auto i : rep.sample) xs.push_back(data.row(i));
  std::vector<Attribution> shaps;
  stage("global shap", [&] {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      shaps.push_back(standard_shap(f, xs[i], bg, shap_cfg.for_instance(i)));
    }
    return 0;
  });
  rep.shap_global = global_explanation(shaps);
  rep.cafa_global = stage("global cafa", [&] { return cafa_global(xs, f, schema, cc); });

  // Reports.
  fs::create_directories(rep.out_dir);
  {
    std::ofstream out(rep.out_dir / "attribution.csv", std::ios::binary);
    write_attribution_csv(rep.cafa_local.attribution, schema, out);
  }
  {
    std::ofstream out(rep.out_dir / "shap_local.csv", std::ios::binary);
    write_attribution_csv(rep.shap_local, schema, out);
  }
  {
    std::ofstream out(rep.out_dir / "global.csv", std::ios::binary);
    out << "feature,controllable,shap_mean_abs_phi,cafa_mean_abs_phi,shap_mean_phi,cafa_mean_phi\n";
    for (auto j : rep.shap_global.ranking()) {
      out << schema[j].name << ',' << (schema[j].controllable ? 1 : 0) << ','
          << format_double(rep.shap_global.mean_abs_phi[j]) << ','
          << format_double(rep.cafa_global.global.mean_abs_phi[j]) << ','
          << format_double(rep.shap_global.mean_phi[j]) << ','
          << format_double(rep.cafa_global.mean_signed_phi[j]) << '\n';
    }
  }

  nlohmann::json failures = nlohmann::json::array();
  for (const auto& fl : rep.cafa_global.failures) {
    failures.push_back({{"row", rep.sample[fl.index]}, {"error", fl.message}});
  }
  nlohmann::json local = {{"instance", instance_json},
                          {"shap", rep.shap_local.to_json(schema)},
                          {"cafa", rep.cafa_local.to_json(schema)}};
  local["pearson_controllable"] =
      std::isfinite(rep.pearson_local) ? nlohmann::json(rep.pearson_local) : nlohmann::json(nullptr);
  nlohmann::json cafa_g = global_json(rep.cafa_global.global, schema);
  cafa_g["mean_signed_phi"] = rep.cafa_global.mean_signed_phi;
  cafa_g["instances_ok"] = rep.cafa_global.per_instance.size();
  cafa_g["failures"] = failures;
  const nlohmann::json report = {{"local", local},
                                 {"global",
                                  {{"sample_rows", rep.sample},
                                   {"shap", global_json(rep.shap_global, schema)},
                                   {"cafa", cafa_g}}}};
  write_text(rep.out_dir / "attribution.json", report.dump(2) + "\n");

  nlohmann::json resolved = cfg;
  resolved["model"] = fp.to_json();
  resolved["cafa"] = cc.to_json();
  resolved["shap"] = {{"background", bg_size}, {"n_perms", shap_cfg.explainer.n_perms}};
  resolved["sample"] = sample_size;
  resolved["seed"] = seed;
  resolved["split"] = split_json;
  nlohmann::json meta = {{"command", "experiment"},
                         {"config", resolved},
                         {"dataset",
                          {{"rows", data.size()},
                           {"features", schema.size()},
                           {"controllable", schema.controllable().size()},
                           {"classes", data.class_names()},
                           {"schema", schema.to_json()}}},
                         {"train_accuracy", rep.train_accuracy},
                         {"pi", rep.pi},
                         {"weights", "schema"},
                         {"ordering", "mean_abs_phi"}};
  meta["test_accuracy"] = rep.test_accuracy ? nlohmann::json(*rep.test_accuracy) : nlohmann::json(nullptr);
  write_text(rep.out_dir / "run_meta.json", meta.dump(2) + "\n");

  const std::optional<std::string> ts =
      options.timestamp ? std::optional<std::string>(utc_timestamp()) : std::nullopt;
  std::vector<std::string> labels;
  BarSeries shap_bars{"SHAP", {}}, cafa_bars{"CAFA", {}};
  std::vector<std::size_t> order = rep.shap_global.ranking();
  for (auto j : order) {
    labels.push_back(schema[j].name + (schema[j].controllable ? "" : " (u)"));
    shap_bars.values.push_back(rep.shap_global.mean_abs_phi[j]);
    cafa_bars.values.push_back(rep.cafa_global.global.mean_abs_phi[j]);
  }
  write_text(rep.out_dir / "bars.svg",
             bar_chart_svg("Global mean |phi|: SHAP vs CAFA", labels, {shap_bars, cafa_bars}, ts));

  SwarmPanel sp{"SHAP", {}, {}}, cp{"CAFA", {}, {}};
  for (auto j : order) {
    std::vector<double> sv, ss, cv, cs;
    for (std::size_t i = 0; i < shaps.size(); ++i) {
      sv.push_back(shaps[i].phi[j]);
      ss.push_back(shade_of(schema[j], xs[i][j]));
    }
    for (std::size_t k = 0; k < rep.cafa_global.per_instance.size(); ++k) {
      cv.push_back(rep.cafa_global.per_instance[k].attribution.phi[j]);
      cs.push_back(shade_of(schema[j], xs[rep.cafa_global.indices[k]][j]));
    }
    sp.points.push_back(sv);
    sp.shade.push_back(ss);
    cp.points.push_back(cv);
    cp.shade.push_back(cs);
  }
  write_text(rep.out_dir / "summary.svg", summary_svg(labels, {sp, cp}, ts));
  return rep;
}

}  // namespace cafa
