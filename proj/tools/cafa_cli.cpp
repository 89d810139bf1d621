// cafa: command-line front end.
//
//   cafa train      --data D.csv --schema S.json --model M.json
//   cafa explain    --model M.json --data ... --method shap|lime|cafa --instance 12 --out run/
//   cafa global     --model M.json --data ... --method shap|cafa --sample 100 --out run/
//   cafa compare    --model M.json --data ... --instance 12 --out run/
//   cafa synth      --preset covid --out covid.csv --schema-out covid.json
//   cafa experiment config.json
//
// Exit codes: 0 ok, 2 usage, 3 data, 4 model, 5 explanation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cafa/bench.hpp"
#include "cafa/cafa.hpp"
#include "cafa/chart.hpp"
#include "cafa/distance.hpp"
#include "cafa/explain.hpp"
#include "cafa/model.hpp"
#include "cafa/sampler.hpp"
#include "cafa/schema.hpp"

namespace fs = std::filesystem;
using namespace cafa;

namespace {

struct DataOptions {
  std::string csv;
  std::string schema;
  std::string preset;  // covid | lung
  std::uint64_t preset_seed = 0;
  std::string dump_normalized;

  void add(CLI::App* app) {
    app->add_option("--data", csv, "CSV file with a header row");
    app->add_option("--schema", schema, "ingestion config (JSON)");
    app->add_option("--preset", preset, "built-in dataset instead of --data")
        ->check(CLI::IsMember({"covid", "lung"}));
    app->add_option("--preset-seed", preset_seed, "seed for --preset");
    app->add_option("--dump-normalized", dump_normalized, "write the normalized dataset as CSV");
  }

  Dataset load() const {
    std::optional<Dataset> d;
    if (!preset.empty()) {
      if (!csv.empty()) throw UsageError("--data and --preset are mutually exclusive");
      d.emplace(preset == "covid" ? covid_preset(preset_seed) : lung_preset(preset_seed));
    } else {
      if (csv.empty() || schema.empty()) {
        throw UsageError("need --data and --schema (or --preset)");
      }
      d.emplace(load_csv(csv, IngestConfig::load(schema)));
    }
    if (!dump_normalized.empty()) {
      std::ofstream out(dump_normalized, std::ios::binary);
      if (!out) throw DataError("cannot write " + dump_normalized);
      write_csv(*d, out);
    }
    return std::move(*d);
  }

  nlohmann::json to_json() const {
    if (!preset.empty()) return {{"preset", preset}, {"seed", preset_seed}};
    return {{"csv", csv}, {"schema", schema}};
  }
};

struct CafaOptions {
  std::size_t k = 500;
  std::optional<double> pi;
  std::string explainer = "mc";
  std::size_t n_perms = 2000;
  std::optional<std::size_t> n_locals;
  std::string aggregate = "mean_abs";
  double sigma = 0.25;
  std::size_t max_attempts = 200000;
  std::string config;

  void add(CLI::App* app) {
    app->add_option("--cafa-config", config, "CAFA config JSON (flags below override it)");
    app->add_option("--k", k, "rows per class in the neighbourhood");
    app->add_option("--pi", pi, "proximity threshold (default: mean pairwise distance)");
    app->add_option("--explainer", explainer, "Shapley engine for CAFA rows")
        ->check(CLI::IsMember({"exact", "mc"}));
    app->add_option("--n-perms", n_perms, "Monte-Carlo permutations");
    app->add_option("--n-locals", n_locals, "neighbourhood rows to explain");
    app->add_option("--aggregate", aggregate, "how CAFA folds row attributions")
        ->check(CLI::IsMember({"mean_abs", "mean"}));
    app->add_option("--sigma", sigma, "continuous proposal spread");
    app->add_option("--max-attempts", max_attempts, "sampler attempt budget");
  }

  CafaConfig resolve(const CLI::App* app, const Dataset& data, std::uint64_t seed) const {
    CafaConfig c;
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw UsageError("cannot open " + config);
      try {
        c = CafaConfig::from_json(nlohmann::json::parse(in));
      } catch (const nlohmann::json::exception& e) {
        throw UsageError(config + ": " + e.what());
      }
    }
    auto given = [&](const char* name) { return config.empty() || app->count(name) > 0; };
    if (given("--k")) c.k = k;
    if (pi) c.pi = pi;
    if (given("--explainer")) {
      c.explainer.kind = explainer == "exact" ? ExplainerKind::kExact : ExplainerKind::kMonteCarlo;
    }
    if (given("--n-perms")) c.explainer.n_perms = n_perms;
    if (n_locals) c.n_locals = n_locals;
    if (given("--aggregate")) c.aggregate = aggregate == "mean" ? Aggregate::kMean : Aggregate::kMeanAbs;
    if (given("--sigma")) c.neighborhood.perturbation.sigma = sigma;
    if (given("--max-attempts")) c.neighborhood.max_attempts = max_attempts;
    c.seed = seed;
    resolve_proximity(c, data);
    return c;
  }
};

struct Common {
  std::string model;
  std::string out = "run";
  std::uint64_t seed = 0;
  std::size_t background = 100;
  bool no_timestamp = false;

  void add(CLI::App* app, bool needs_model = true) {
    if (needs_model) app->add_option("--model", model, "trained model (JSON)")->required();
    app->add_option("--out", out, "run directory");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--background", background, "SHAP background rows from the training data");
    app->add_flag("--no-timestamp", no_timestamp, "omit the generation time from SVG output");
  }

  std::optional<std::string> timestamp() const {
    return no_timestamp ? std::nullopt : std::optional<std::string>(utc_timestamp());
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

RandomForest load_model(const std::string& path, const Dataset& data) {
  RandomForest f = RandomForest::load(path);
  if (!(f.schema() == data.schema())) {
    throw ModelError("model " + path + " was trained on a different schema");
  }
  return f;
}

// "--instance 12" selects a dataset row; anything else is read as a CSV file.
Instance resolve_instance(const std::string& spec, const Dataset& data, nlohmann::json& meta) {
  if (!spec.empty() && spec.find_first_not_of("0123456789") == std::string::npos) {
    const std::size_t idx = std::stoul(spec);
    if (idx >= data.size()) {
      throw UsageError("instance row " + spec + " out of range (dataset has " +
                       std::to_string(data.size()) + " rows)");
    }
    meta = {{"row", idx}};
    return data.row(idx);
  }
  meta = {{"file", spec}};
  return read_instance_csv(spec, data);
}

nlohmann::json dataset_meta(const Dataset& data) {
  return {{"rows", data.size()},
          {"features", data.schema().size()},
          {"controllable", data.schema().controllable().size()},
          {"classes", data.class_names()}};
}

// attribution.csv, bars.svg and summary.svg for one explanation.
void write_single(const fs::path& dir, const Attribution& a, const FeatureSchema& schema,
                  const std::vector<Attribution>& spread, const std::vector<Instance>& rows,
                  const std::optional<std::string>& ts) {
  {
    std::ofstream out(dir / "attribution.csv", std::ios::binary);
    write_attribution_csv(a, schema, out);
  }
  std::vector<std::size_t> order(schema.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) {
    return std::abs(a.phi[l]) > std::abs(a.phi[r]);
  });
  std::vector<std::string> labels;
  BarSeries bars{method_name(a.method), {}};
  for (auto j : order) {
    labels.push_back(schema[j].name + (schema[j].controllable ? "" : " (u)"));
    bars.values.push_back(a.phi[j]);
  }
  write_text(dir / "bars.svg", bar_chart_svg("Attribution", labels, {bars}, ts));

  SwarmPanel panel{method_name(a.method), {}, {}};
  for (auto j : order) {
    std::vector<double> pts, shade;
    const double top = schema[j].categorical() && schema[j].vocabulary.size() > 1
                           ? static_cast<double>(schema[j].vocabulary.size() - 1)
                           : 1.0;
    for (std::size_t i = 0; i < spread.size(); ++i) {
      pts.push_back(spread[i].phi[j]);
      shade.push_back(rows[i][j] / top);
    }
    panel.points.push_back(pts);
    panel.shade.push_back(shade);
  }
  write_text(dir / "summary.svg", summary_svg(labels, {panel}, ts));
}

void print_top(const Attribution& a, const FeatureSchema& schema, std::size_t n = 5) {
  std::vector<std::size_t> order(schema.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) {
    return std::abs(a.phi[l]) > std::abs(a.phi[r]);
  });
  for (std::size_t i = 0; i < std::min(n, order.size()); ++i) {
    std::printf("  %-20s %+.6f\n", schema[order[i]].name.c_str(), a.phi[order[i]]);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Controllable-factor feature attribution for tabular classifiers", "cafa"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a random forest and save it");
  DataOptions train_data;
  train_data.add(train);
  std::string train_model;
  std::string train_meta;
  double test_fraction = 0.0;
  ForestParams fp;
  train->add_option("--model", train_model, "output model file (JSON)")->required();
  train->add_option("--meta", train_meta, "optional run_meta.json path");
  train->add_option("--test-fraction", test_fraction, "hold out this share for scoring");
  train->add_option("--trees", fp.n_trees, "number of trees");
  train->add_option("--max-depth", fp.max_depth, "maximum depth");
  train->add_option("--min-leaf", fp.min_leaf, "minimum rows per leaf");
  train->add_option("--mtry", fp.features_per_split, "features tried per split (0: sqrt)");
  train->add_option("--seed", fp.seed, "random seed");

  // explain
  auto* explain = app.add_subcommand("explain", "explain one instance");
  DataOptions ex_data;
  ex_data.add(explain);
  Common ex;
  ex.add(explain);
  CafaOptions ex_cafa;
  ex_cafa.add(explain);
  std::string method = "cafa";
  std::string instance;
  std::size_t lime_samples = 5000;
  std::string dump_neighborhood;
  explain->add_option("--method", method, "explainer")
      ->check(CLI::IsMember({"shap", "lime", "cafa"}));
  explain->add_option("--instance", instance, "row index or CSV file")->required();
  explain->add_option("--lime-samples", lime_samples, "LIME perturbations");
  explain->add_option("--dump-neighborhood", dump_neighborhood,
                      "write the CAFA neighbourhood as CSV (+ .json provenance)");

  // global
  auto* global = app.add_subcommand("global", "average explanations over a sample of rows");
  DataOptions gl_data;
  gl_data.add(global);
  Common gl;
  gl.add(global);
  CafaOptions gl_cafa;
  gl_cafa.add(global);
  std::string gl_method = "cafa";
  std::size_t sample = 100;
  global->add_option("--method", gl_method, "explainer")->check(CLI::IsMember({"shap", "cafa"}));
  global->add_option("--sample", sample, "rows to explain");

  // compare
  auto* compare = app.add_subcommand("compare", "SHAP vs CAFA on one instance");
  DataOptions cmp_data;
  cmp_data.add(compare);
  Common cmp;
  cmp.add(compare);
  CafaOptions cmp_cafa;
  cmp_cafa.add(compare);
  std::string cmp_instance;
  compare->add_option("--instance", cmp_instance, "row index or CSV file")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  std::string synth_preset;
  std::string synth_spec;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  std::string synth_schema;
  synth->add_option("--preset", synth_preset, "covid or lung")
      ->check(CLI::IsMember({"covid", "lung"}));
  synth->add_option("--spec", synth_spec, "synthetic spec JSON");
  synth->add_option("--seed", synth_seed, "seed for --preset");
  synth->add_option("--out", synth_out, "output CSV")->required();
  synth->add_option("--schema-out", synth_schema, "ingestion config to read the CSV back");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run a configured SHAP vs CAFA study");
  std::string experiment_config;
  bool experiment_no_ts = false;
  experiment->add_option("config", experiment_config, "experiment config (JSON)")->required();
  experiment->add_flag("--no-timestamp", experiment_no_ts,
                       "omit the generation time from SVG output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorKind::kUsage);
  }

  if (*train) {
    const Dataset data = train_data.load();
    std::optional<Dataset> tr, te;
    if (test_fraction > 0.0) {
      auto parts = train_test_split(data, test_fraction, fp.seed);
      tr.emplace(std::move(parts.first));
      te.emplace(std::move(parts.second));
    }
    const Dataset& fit = tr ? *tr : data;
    const RandomForest f = train_forest(fit, fp);
    f.save(train_model);
    nlohmann::json meta = {{"command", "train"},
                           {"data", train_data.to_json()},
                           {"dataset", dataset_meta(data)},
                           {"params", fp.to_json()},
                           {"train_accuracy", accuracy(f, fit)}};
    meta["test_fraction"] = test_fraction;
    meta["test_accuracy"] = te ? nlohmann::json(accuracy(f, *te)) : nlohmann::json(nullptr);
    std::printf("trained %zu trees on %zu rows; train accuracy %.4f", fp.n_trees, fit.size(),
                accuracy(f, fit));
    if (te) std::printf(", test accuracy %.4f", accuracy(f, *te));
    std::printf("\n");
    if (!train_meta.empty()) write_text(train_meta, meta.dump(2) + "\n");
    return 0;
  }

  if (*explain) {
    const Dataset data = ex_data.load();
    const RandomForest f = load_model(ex.model, data);
    nlohmann::json inst_meta;
    const Instance x = resolve_instance(instance, data, inst_meta);
    fs::create_directories(ex.out);
    nlohmann::json meta = {{"command", "explain"},  {"method", method},
                           {"data", ex_data.to_json()}, {"model", ex.model},
                           {"dataset", dataset_meta(data)}, {"instance", inst_meta},
                           {"seed", ex.seed}};
    nlohmann::json report;
    Attribution a;
    std::vector<Attribution> spread;
    std::vector<Instance> spread_rows;
    if (method == "shap") {
      CafaConfig c;
      c.explainer.n_perms = ex_cafa.n_perms;
      c.seed = ex.seed;
      const Background bg = sample_background(data, ex.background, ex.seed);
      a = standard_shap(f, x, bg, c);
      report = a.to_json(data.schema());
      meta["background"] = ex.background;
      meta["n_perms"] = c.explainer.n_perms;
    } else if (method == "lime") {
      LimeOptions lo;
      lo.n_samples = lime_samples;
      a = lime_explain(f, x, data.schema(), lo, ex.seed);
      report = a.to_json(data.schema());
      meta["lime_samples"] = lime_samples;
    } else {
      CafaConfig c = ex_cafa.resolve(explain, data, ex.seed);
      c.keep_locals = true;
      if (!dump_neighborhood.empty()) {
        const auto nb = cafa_neighborhood(x, f, data.schema(), c);
        std::ofstream out(dump_neighborhood, std::ios::binary);
        if (!out) throw DataError("cannot write " + dump_neighborhood);
        write_csv(nb.data, out);
        write_text(dump_neighborhood + ".json", nb.provenance().dump(2) + "\n");
      }
      const CafaResult r = cafa_local(x, f, data.schema(), c);
      a = r.attribution;
      spread = r.locals;
      spread_rows = r.local_rows;
      report = r.to_json(data.schema());
      meta["cafa"] = c.to_json();
    }
    if (spread.empty()) {
      spread.push_back(a);
      spread_rows.push_back(x);
    }
    meta["weights"] = "schema";
    write_single(ex.out, a, data.schema(), spread, spread_rows, ex.timestamp());
    write_text(fs::path(ex.out) / "attribution.json", report.dump(2) + "\n");
    write_text(fs::path(ex.out) / "run_meta.json", meta.dump(2) + "\n");
    std::printf("%s attribution (phi0 %.6f, prediction %.6f):\n", method_name(a.method), a.phi0,
                a.prediction);
    print_top(a, data.schema());
    return 0;
  }

  if (*global) {
    const Dataset data = gl_data.load();
    const RandomForest f = load_model(gl.model, data);
    fs::create_directories(gl.out);
    Rng rng(derive_seed(gl.seed, 31));
    const auto rows = sample_without_replacement(rng, data.size(), sample);
    std::vector<Instance> xs;
    for (auto i : rows) xs.push_back(data.row(i));
    nlohmann::json meta = {{"command", "global"},      {"method", gl_method},
                           {"data", gl_data.to_json()}, {"model", gl.model},
                           {"dataset", dataset_meta(data)}, {"sample", sample},
                           {"sample_rows", rows},        {"seed", gl.seed},
                           {"ordering", "mean_abs_phi"}};
    std::vector<Attribution> locals;
    std::optional<std::vector<double>> signed_mean;
    std::vector<Instance> used;
    nlohmann::json failures = nlohmann::json::array();
    if (gl_method == "shap") {
      CafaConfig c;
      c.explainer.n_perms = gl_cafa.n_perms;
      c.seed = gl.seed;
      const Background bg = sample_background(data, gl.background, gl.seed);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        locals.push_back(standard_shap(f, xs[i], bg, c.for_instance(i)));
      }
      used = xs;
      meta["background"] = gl.background;
      meta["n_perms"] = c.explainer.n_perms;
    } else {
      const CafaConfig c = gl_cafa.resolve(global, data, gl.seed);
      const CafaGlobalResult g = cafa_global(xs, f, data.schema(), c);
      signed_mean = g.mean_signed_phi;
      for (std::size_t k = 0; k < g.per_instance.size(); ++k) {
        locals.push_back(g.per_instance[k].attribution);
        used.push_back(xs[g.indices[k]]);
      }
      for (const auto& fl : g.failures) {
        failures.push_back({{"row", rows[fl.index]}, {"error", fl.message}});
      }
      meta["cafa"] = c.to_json();
    }
    GlobalExplanation g = global_explanation(locals);
    // CAFA attributions may be magnitudes; report the signed neighbourhood mean.
    if (signed_mean) g.mean_phi = *signed_mean;
    Attribution summary;
    summary.phi = g.mean_abs_phi;
    summary.phi0 = g.mean_phi0;
    summary.method = locals.front().method;
    summary.seed = gl.seed;
    {
      std::ofstream out(fs::path(gl.out) / "attribution.csv", std::ios::binary);
      out << "feature,mean_phi,mean_abs_phi\n";
      for (auto j : g.ranking()) {
        out << data.schema()[j].name << ',' << format_double(g.mean_phi[j]) << ','
            << format_double(g.mean_abs_phi[j]) << '\n';
      }
    }
    nlohmann::json feats = nlohmann::json::array();
    for (auto j : g.ranking()) {
      feats.push_back({{"feature", data.schema()[j].name},
                       {"controllable", data.schema()[j].controllable},
                       {"mean_phi", g.mean_phi[j]},
                       {"mean_abs_phi", g.mean_abs_phi[j]}});
    }
    nlohmann::json per = nlohmann::json::array();
    for (const auto& a : locals) per.push_back(a.to_json(data.schema()));
    const nlohmann::json report = {{"method", method_name(summary.method)},
                                   {"phi0", g.mean_phi0},
                                   {"features", feats},
                                   {"instances_ok", locals.size()},
                                   {"failures", failures},
                                   {"per_instance", per}};
    write_text(fs::path(gl.out) / "attribution.json", report.dump(2) + "\n");
    write_text(fs::path(gl.out) / "run_meta.json", meta.dump(2) + "\n");

    const auto ts = gl.timestamp();
    std::vector<std::string> labels;
    BarSeries bars{"mean |phi|", {}};
    SwarmPanel panel{method_name(summary.method), {}, {}};
    for (auto j : g.ranking()) {
      const auto& feat = data.schema()[j];
      labels.push_back(feat.name + (feat.controllable ? "" : " (u)"));
      bars.values.push_back(g.mean_abs_phi[j]);
      const double top = feat.categorical() && feat.vocabulary.size() > 1
                             ? static_cast<double>(feat.vocabulary.size() - 1)
                             : 1.0;
      std::vector<double> pts, shade;
      for (std::size_t i = 0; i < locals.size(); ++i) {
        pts.push_back(locals[i].phi[j]);
        shade.push_back(used[i][j] / top);
      }
      panel.points.push_back(pts);
      panel.shade.push_back(shade);
    }
    write_text(fs::path(gl.out) / "bars.svg",
               bar_chart_svg("Global mean |phi|", labels, {bars}, ts));
    write_text(fs::path(gl.out) / "summary.svg", summary_svg(labels, {panel}, ts));
    std::printf("%s global over %zu instances (%zu failed):\n", method_name(summary.method),
                locals.size(), failures.size());
    print_top(summary, data.schema());
    return 0;
  }

  if (*compare) {
    const Dataset data = cmp_data.load();
    const RandomForest f = load_model(cmp.model, data);
    nlohmann::json inst_meta;
    const Instance x = resolve_instance(cmp_instance, data, inst_meta);
    const CafaConfig c = cmp_cafa.resolve(compare, data, cmp.seed);
    const Background bg = sample_background(data, cmp.background, cmp.seed);
    const ShapComparison r = compare_with_shap(x, f, data.schema(), c, bg);
    // Signed correlation regardless of the configured aggregate.
    double signed_r = std::nan("");
    try {
      signed_r = signed_pearson_controllable(r.cafa_detail, r.shap, data.schema());
    } catch (const ExplanationError&) {
    }
    fs::create_directories(cmp.out);
    {
      std::ofstream out(fs::path(cmp.out) / "attribution.csv", std::ios::binary);
      out << "feature,controllable,shap_phi,cafa_phi\n";
      for (std::size_t j = 0; j < data.schema().size(); ++j) {
        out << data.schema()[j].name << ',' << (data.schema()[j].controllable ? 1 : 0) << ','
            << format_double(r.shap.phi[j]) << ',' << format_double(r.cafa.phi[j]) << '\n';
      }
    }
    nlohmann::json report = {{"shap", r.shap.to_json(data.schema())},
                             {"cafa", r.cafa_detail.to_json(data.schema())},
                             {"pearson_controllable", r.pearson_controllable},
                             {"pearson_basis", c.aggregate == Aggregate::kMean ? "signed" : "abs"}};
    report["pearson_controllable_signed"] =
        std::isfinite(signed_r) ? nlohmann::json(signed_r) : nlohmann::json(nullptr);
    write_text(fs::path(cmp.out) / "attribution.json", report.dump(2) + "\n");
    nlohmann::json meta = {{"command", "compare"}, {"data", cmp_data.to_json()},
                           {"model", cmp.model},   {"dataset", dataset_meta(data)},
                           {"instance", inst_meta}, {"background", cmp.background},
                           {"cafa", c.to_json()},  {"seed", cmp.seed}};
    write_text(fs::path(cmp.out) / "run_meta.json", meta.dump(2) + "\n");

    const auto ts = cmp.timestamp();
    std::vector<std::string> labels;
    BarSeries sb{"SHAP", {}}, cb{"CAFA", {}};
    SwarmPanel sp{"SHAP", {}, {}}, cp{"CAFA", {}, {}};
    for (std::size_t j = 0; j < data.schema().size(); ++j) {
      const auto& feat = data.schema()[j];
      labels.push_back(feat.name + (feat.controllable ? "" : " (u)"));
      sb.values.push_back(r.shap.phi[j]);
      cb.values.push_back(r.cafa.phi[j]);
      sp.points.push_back({r.shap.phi[j]});
      cp.points.push_back({r.cafa.phi[j]});
    }
    write_text(fs::path(cmp.out) / "bars.svg", bar_chart_svg("SHAP vs CAFA", labels, {sb, cb}, ts));
    write_text(fs::path(cmp.out) / "summary.svg", summary_svg(labels, {sp, cp}, ts));
    std::printf("pearson over controllable features: %.4f (%s)", r.pearson_controllable,
                c.aggregate == Aggregate::kMean ? "signed" : "|phi|");
    if (std::isfinite(signed_r)) std::printf(", signed %.4f", signed_r);
    std::printf("\n");
    return 0;
  }

  if (*synth) {
    std::optional<Dataset> d;
    if (!synth_preset.empty() == !synth_spec.empty()) {
      throw UsageError("synth needs exactly one of --preset or --spec");
    }
    if (!synth_preset.empty()) {
      d.emplace(synth_preset == "covid" ? covid_preset(synth_seed) : lung_preset(synth_seed));
    } else {
      std::ifstream in(synth_spec);
      if (!in) throw UsageError("cannot open " + synth_spec);
      try {
        d.emplace(generate_synth(SynthSpec::from_json(nlohmann::json::parse(in))));
      } catch (const nlohmann::json::exception& e) {
        throw UsageError(synth_spec + ": " + e.what());
      }
    }
    const auto& schema = d->schema();
    {
      std::ofstream out(synth_out, std::ios::binary);
      if (!out) throw DataError("cannot write " + synth_out);
      for (std::size_t j = 0; j < schema.size(); ++j) out << schema[j].name << ',';
      out << "label\n";
      for (std::size_t r = 0; r < d->size(); ++r) {
        for (std::size_t j = 0; j < schema.size(); ++j) {
          const std::string v = d->display_value(j, d->row(r)[j]);
          if (v.find_first_of(",\"") != std::string::npos) {
            out << '"' << v << '"';
          } else {
            out << v;
          }
          out << ',';
        }
        out << d->class_names()[static_cast<std::size_t>(d->label(r))] << '\n';
      }
    }
    if (!synth_schema.empty()) {
      IngestConfig ic;
      ic.label = "label";
      ic.classes = d->class_names();
      for (const auto& feat : schema.features()) {
        ColumnSpec cs{feat.name, feat.kind, feat.controllable, feat.weight, std::nullopt};
        if (feat.categorical()) cs.vocabulary = feat.vocabulary;
        ic.features.push_back(std::move(cs));
      }
      write_text(synth_schema, ic.to_json().dump(2) + "\n");
    }
    std::printf("wrote %zu rows x %zu features to %s\n", d->size(), schema.size(),
                synth_out.c_str());
    return 0;
  }

  if (*experiment) {
    ExperimentOptions eo;
    eo.timestamp = !experiment_no_ts;
    const ExperimentReport rep = run_experiment(fs::path(experiment_config), eo);
    std::printf("experiment written to %s\n", rep.out_dir.string().c_str());
    std::printf("  train accuracy %.4f", rep.train_accuracy);
    if (rep.test_accuracy) std::printf(", test accuracy %.4f", *rep.test_accuracy);
    std::printf(", pi %.4f\n", rep.pi);
    std::printf("  global CAFA over %zu instances (%zu failed)\n",
                rep.cafa_global.per_instance.size(), rep.cafa_global.failures.size());
    return 0;
  }
  return exit_code(ErrorKind::kUsage);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cafa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::kData);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
