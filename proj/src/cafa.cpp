#include "cafa/cafa.hpp"

#include <algorithm>
#include <cmath>

#include "cafa/distance.hpp"
#include "cafa/random.hpp"

namespace cafa {

namespace {

// Seed streams derived from CafaConfig::seed.
constexpr std::uint64_t kStreamNeighborhood = 1;
constexpr std::uint64_t kStreamSurrogate = 2;
constexpr std::uint64_t kStreamBackground = 3;
constexpr std::uint64_t kStreamRowShap = 4;
constexpr std::uint64_t kStreamRows = 5;
constexpr std::uint64_t kStreamInstance = 6;
constexpr std::uint64_t kStreamStandardShap = 7;

const char* aggregate_name(Aggregate a) { return a == Aggregate::kMean ? "mean" : "mean_abs"; }

}  // namespace

CafaConfig CafaConfig::for_instance(std::size_t i) const {
  CafaConfig c = *this;
  c.seed = derive_seed(seed, kStreamInstance, i);
  return c;
}

nlohmann::json CafaConfig::to_json() const {
  nlohmann::json j = {
      {"K", k},
      {"surrogate", surrogate.to_json()},
      {"explainer",
       {{"kind", explainer.kind == ExplainerKind::kExact ? "exact" : "mc"},
        {"n_perms", explainer.n_perms}}},
      {"background_size", background_size},
      {"max_attempts", neighborhood.max_attempts},
      {"sigma", neighborhood.perturbation.sigma},
      {"aggregate", aggregate_name(aggregate)},
      {"seed", seed}};
  j["pi"] = pi ? nlohmann::json(*pi) : nlohmann::json("estimate");
  j["n_locals"] = n_locals ? nlohmann::json(*n_locals) : nlohmann::json("default");
  return j;
}

CafaConfig CafaConfig::from_json(const nlohmann::json& j) {
  CafaConfig c;
  try {
    c.k = j.value("K", c.k);
    if (j.contains("pi") && j.at("pi").is_number()) c.pi = j.at("pi").get<double>();
    if (j.contains("surrogate")) c.surrogate = ForestParams::from_json(j.at("surrogate"));
    if (j.contains("explainer")) {
      const auto& e = j.at("explainer");
      const std::string kind = e.value("kind", std::string("mc"));
      if (kind == "exact") {
        c.explainer.kind = ExplainerKind::kExact;
      } else if (kind == "mc") {
        c.explainer.kind = ExplainerKind::kMonteCarlo;
      } else {
        throw UsageError("explainer.kind must be \"exact\" or \"mc\"");
      }
      c.explainer.n_perms = e.value("n_perms", c.explainer.n_perms);
    }
    if (j.contains("n_locals") && j.at("n_locals").is_number()) {
      c.n_locals = j.at("n_locals").get<std::size_t>();
    }
    c.background_size = j.value("background_size", c.background_size);
    c.neighborhood.max_attempts = j.value("max_attempts", c.neighborhood.max_attempts);
    c.neighborhood.perturbation.sigma = j.value("sigma", c.neighborhood.perturbation.sigma);
    const std::string agg = j.value("aggregate", std::string("mean_abs"));
    if (agg == "mean_abs") {
      c.aggregate = Aggregate::kMeanAbs;
    } else if (agg == "mean") {
      c.aggregate = Aggregate::kMean;
    } else {
      throw UsageError("aggregate must be \"mean_abs\" or \"mean\"");
    }
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed CAFA config: ") + e.what());
  }
  return c;
}

void resolve_proximity(CafaConfig& cfg, const Dataset& training, std::size_t n_pairs) {
  if (cfg.pi) return;
  cfg.pi = estimate_proximity(training, DistanceParams(training.schema()), n_pairs, cfg.seed);
}

nlohmann::json CafaResult::to_json(const FeatureSchema& schema) const {
  nlohmann::json zeros = nlohmann::json::array();
  for (auto j : zero_features) zeros.push_back(schema[j].name);
  nlohmann::json mean = nlohmann::json::array();
  nlohmann::json mean_abs = nlohmann::json::array();
  for (std::size_t j = 0; j < mean_phi.size(); ++j) {
    mean.push_back({{"feature", schema[j].name}, {"value", mean_phi[j]}});
    mean_abs.push_back({{"feature", schema[j].name}, {"value", mean_abs_phi[j]}});
  }
  nlohmann::json j = attribution.to_json(schema);
  j["mean_phi"] = mean;
  j["mean_abs_phi"] = mean_abs;
  j["zeros_enforced"] = zeros;
  j["origin_prediction"] = origin_prediction;
  j["neighborhood"] = {{"attempts", neighborhood.attempts},
                       {"rejections", neighborhood.rejections_distance},
                       {"rejections_balance", neighborhood.rejections_balance},
                       {"class_counts", neighborhood.class_counts},
                       {"rows", neighborhood_rows},
                       {"pi", pi},
                       {"K", k}};
  j["surrogate_accuracy"] = surrogate_accuracy;
  j["n_locals"] = n_locals;
  j["seed"] = seed;
  return j;
}

NeighborhoodSample cafa_neighborhood(const Instance& x, const Classifier& f,
                                     const FeatureSchema& schema, const CafaConfig& cfg) {
  if (!cfg.pi) throw UsageError("CAFA needs a proximity threshold (pi)");
  return generate_neighborhood(x, f, schema, *cfg.pi, cfg.k, cfg.neighborhood,
                               derive_seed(cfg.seed, kStreamNeighborhood));
}

CafaResult cafa_local(const Instance& x, const Classifier& f, const FeatureSchema& schema,
                      const CafaConfig& cfg) {
  schema.validate(x);
  if (!cfg.pi) throw UsageError("CAFA needs a proximity threshold (pi)");
  if (cfg.k == 0) throw UsageError("K must be >= 1");
  if (cfg.n_locals && *cfg.n_locals == 0) throw UsageError("n_locals must be >= 1");

  auto nb = cafa_neighborhood(x, f, schema, cfg);
  const Dataset& dx = nb.data;

  ForestParams gp = cfg.surrogate;
  gp.seed = derive_seed(cfg.seed, kStreamSurrogate);
  std::optional<RandomForest> g;
  try {
    g.emplace(train_forest(dx, gp));
  } catch (const ModelError& e) {
    throw SurrogateError("surrogate training failed on the neighbourhood (" +
                             std::to_string(dx.size()) + " rows, " +
                             std::to_string(nb.stats.attempts) + " attempts): " + e.what(),
                         nb.stats);
  }

  const std::size_t n_rows = dx.size();
  const std::size_t n_locals =
      cfg.n_locals ? *cfg.n_locals
                   : (cfg.explainer.kind == ExplainerKind::kExact ? std::min<std::size_t>(200, n_rows)
                                                                   : n_rows);
  if (n_locals > n_rows) {
    throw UsageError("n_locals (" + std::to_string(n_locals) + ") exceeds the neighbourhood size (" +
                     std::to_string(n_rows) + ")");
  }

  const Background bg = sample_background(dx, cfg.background_size,
                                          derive_seed(cfg.seed, kStreamBackground));
  std::vector<std::size_t> rows;
  if (n_locals == n_rows) {
    rows.resize(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) rows[i] = i;
  } else {
    Rng rng(derive_seed(cfg.seed, kStreamRows));
    rows = sample_without_replacement(rng, n_rows, n_locals);
  }

  std::vector<Attribution> locals;
  locals.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Instance& r = dx.row(rows[i]);
    if (cfg.explainer.kind == ExplainerKind::kExact) {
      locals.push_back(shapley_exact(*g, r, bg));
    } else {
      locals.push_back(shapley_mc(*g, r, bg, cfg.explainer.n_perms,
                                  derive_seed(cfg.seed, kStreamRowShap, i)));
    }
  }

  const GlobalExplanation agg = global_explanation(locals);
  CafaResult out;
  out.mean_phi = agg.mean_phi;
  out.mean_abs_phi = agg.mean_abs_phi;
  double mean_pred = 0.0;
  for (const auto& a : locals) mean_pred += a.prediction;
  out.mean_local_prediction = mean_pred / static_cast<double>(locals.size());
  out.origin_prediction = f.positive_proba(x);

  out.attribution.method = Method::kCafa;
  out.attribution.seed = cfg.seed;
  out.attribution.phi = cfg.aggregate == Aggregate::kMean ? agg.mean_phi : agg.mean_abs_phi;
  out.attribution.phi0 = agg.mean_phi0;
  out.attribution.prediction = out.mean_local_prediction;

  out.pi = *cfg.pi;
  out.k = cfg.k;
  out.neighborhood_rows = n_rows;
  out.neighborhood = nb.stats;
  out.surrogate_accuracy = accuracy(*g, dx);
  out.n_locals = n_locals;
  out.zero_features = schema.uncontrollable();
  out.seed = cfg.seed;
  if (cfg.keep_locals) {
    out.locals = std::move(locals);
    for (auto r : rows) out.local_rows.push_back(dx.row(r));
  }
  return out;
}

CafaGlobalResult cafa_global(std::span<const Instance> xs, const Classifier& f,
                             const FeatureSchema& schema, const CafaConfig& cfg) {
  if (xs.empty()) throw UsageError("CAFA global needs at least one instance");
  CafaGlobalResult out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    try {
      out.per_instance.push_back(cafa_local(xs[i], f, schema, cfg.for_instance(i)));
      out.indices.push_back(i);
    } catch (const ExplanationError& e) {
      out.failures.push_back({i, e.what()});
    }
  }
  if (out.per_instance.empty()) {
    throw ExplanationError("CAFA failed for all " + std::to_string(xs.size()) +
                           " instances; first error: " + out.failures.front().message);
  }
  std::vector<Attribution> attrs;
  attrs.reserve(out.per_instance.size());
  for (const auto& r : out.per_instance) attrs.push_back(r.attribution);
  out.global = global_explanation(attrs);
  out.mean_signed_phi.assign(schema.size(), 0.0);
  for (const auto& r : out.per_instance) {
    for (std::size_t j = 0; j < schema.size(); ++j) out.mean_signed_phi[j] += r.mean_phi[j];
  }
  for (auto& v : out.mean_signed_phi) v /= static_cast<double>(out.per_instance.size());
  return out;
}

Attribution standard_shap(const Classifier& f, const Instance& x, const Background& training_bg,
                          const CafaConfig& cfg) {
  if (x.size() <= kDefaultExactLimit) return shapley_exact(f, x, training_bg);
  return shapley_mc(f, x, training_bg, cfg.explainer.n_perms,
                    derive_seed(cfg.seed, kStreamStandardShap));
}

std::vector<double> controllable_profile(const Attribution& a, const FeatureSchema& schema,
                                         Aggregate aggregate) {
  std::vector<double> out;
  for (auto j : schema.controllable()) {
    out.push_back(aggregate == Aggregate::kMeanAbs ? std::abs(a.phi[j]) : a.phi[j]);
  }
  return out;
}

ShapComparison compare_with_shap(const Instance& x, const Classifier& f,
                                 const FeatureSchema& schema, const CafaConfig& cfg,
                                 const Background& training_bg) {
  if (schema.controllable().size() < 2) {
    throw UsageError("comparison needs at least two controllable features");
  }
  ShapComparison out;
  out.shap = standard_shap(f, x, training_bg, cfg);
  out.cafa_detail = cafa_local(x, f, schema, cfg);
  out.cafa = out.cafa_detail.attribution;
  out.pearson_controllable = pearson(controllable_profile(out.cafa, schema, cfg.aggregate),
                                     controllable_profile(out.shap, schema, cfg.aggregate));
  return out;
}

double signed_pearson_controllable(const CafaResult& cafa, const Attribution& shap,
                                   const FeatureSchema& schema) {
  std::vector<double> a, b;
  for (auto j : schema.controllable()) {
    a.push_back(cafa.mean_phi[j]);
    b.push_back(shap.phi[j]);
  }
  return pearson(a, b);
}

}  // namespace cafa
