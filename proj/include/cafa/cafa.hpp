#ifndef CAFA_CAFA_HPP
#define CAFA_CAFA_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cafa/explain.hpp"
#include "cafa/model.hpp"
#include "cafa/sampler.hpp"
#include "cafa/schema.hpp"
#include "json.hpp"

namespace cafa {

// Controllable-factor attribution.
//
// For an instance x the pipeline is:
//   1. draw a balanced neighbourhood D_x that moves only controllable
//      features and stays within delta <= pi of x, labelled by f;
//   2. fit a surrogate forest g on D_x;
//   3. compute Shapley values of g for rows of D_x against a background drawn
//      from D_x itself;
//   4. average the per-row attributions.
// Uncontrollable features are constant across D_x and its background, so
// every coalition marginal for them is zero and their attribution is exactly
// 0.

enum class ExplainerKind { kExact, kMonteCarlo };

struct ExplainerChoice {
  ExplainerKind kind = ExplainerKind::kMonteCarlo;
  std::size_t n_perms = 2000;  // Monte-Carlo only
};

// How per-row attributions over D_x are folded into one vector.
enum class Aggregate {
  kMeanAbs,  // mean |phi|: magnitude importance (default)
  kMean,     // signed mean
};

struct CafaConfig {
  std::size_t k = 500;
  std::optional<double> pi;  // required by cafa_local; see resolve_proximity()
  ForestParams surrogate;    // seed is re-derived from `seed`
  ExplainerChoice explainer;
  std::optional<std::size_t> n_locals;  // default: all of D_x (mc), min(200, |D_x|) (exact)
  std::size_t background_size = 100;
  NeighborhoodOptions neighborhood;
  Aggregate aggregate = Aggregate::kMeanAbs;
  bool keep_locals = false;  // retain per-row attributions in the result
  std::uint64_t seed = 0;

  // Config used for the i-th instance of a batch: identical except for a
  // seed derived from (seed, i).
  CafaConfig for_instance(std::size_t i) const;

  nlohmann::json to_json() const;
  static CafaConfig from_json(const nlohmann::json& j);
};

// Fills cfg.pi from the training data (mean pairwise delta) when unset.
void resolve_proximity(CafaConfig& cfg, const Dataset& training, std::size_t n_pairs = 10000);

struct CafaResult {
  Attribution attribution;  // method kCafa; phi per cfg.aggregate
  std::vector<double> mean_phi;
  std::vector<double> mean_abs_phi;
  double mean_local_prediction = 0.0;  // mean g(row) over explained rows
  double origin_prediction = 0.0;      // f(x)
  double pi = 0.0;
  std::size_t k = 0;
  std::size_t neighborhood_rows = 0;
  NeighborhoodStats neighborhood;
  double surrogate_accuracy = 0.0;
  std::size_t n_locals = 0;
  std::vector<std::size_t> zero_features;  // uncontrollable feature indices
  std::vector<Attribution> locals;         // empty unless cfg.keep_locals
  std::vector<Instance> local_rows;        // the D_x rows behind `locals`
  std::uint64_t seed = 0;

  // {phi0, phi, mean_phi, mean_abs_phi, zeros_enforced, neighborhood:
  //  {attempts, rejections, pi, K, ...}, surrogate_accuracy, seed, ...}
  nlohmann::json to_json(const FeatureSchema& schema) const;
};

// Surrogate g could not be trained on D_x.
class SurrogateError : public ExplanationError {
 public:
  SurrogateError(const std::string& what, NeighborhoodStats stats)
      : ExplanationError(what), stats_(std::move(stats)) {}
  const NeighborhoodStats& stats() const { return stats_; }

 private:
  NeighborhoodStats stats_;
};

// Step 1 alone: the neighbourhood cafa_local would draw for (x, cfg).
NeighborhoodSample cafa_neighborhood(const Instance& x, const Classifier& f,
                                     const FeatureSchema& schema, const CafaConfig& cfg);

CafaResult cafa_local(const Instance& x, const Classifier& f, const FeatureSchema& schema,
                      const CafaConfig& cfg);

struct CafaFailure {
  std::size_t index = 0;
  std::string message;
};

struct CafaGlobalResult {
  GlobalExplanation global;
  std::vector<CafaResult> per_instance;  // successful instances, in input order
  std::vector<std::size_t> indices;      // input index of each per_instance entry
  std::vector<CafaFailure> failures;
  // Mean over instances of each instance's signed neighbourhood mean
  // (mean_phi), whatever the configured aggregate.
  std::vector<double> mean_signed_phi;
};

// cafa_local over every instance (config from cfg.for_instance(i)), then the
// mean of the resulting attributions. Failing instances are skipped and
// listed; throws ExplanationError if all of them fail.
CafaGlobalResult cafa_global(std::span<const Instance> xs, const Classifier& f,
                             const FeatureSchema& schema, const CafaConfig& cfg);

struct ShapComparison {
  Attribution cafa;
  Attribution shap;
  double pearson_controllable = 0.0;
  CafaResult cafa_detail;
};

// Standard Shapley values of f at x against `training_bg` (exact when the
// schema is small enough, otherwise Monte-Carlo).
Attribution standard_shap(const Classifier& f, const Instance& x, const Background& training_bg,
                          const CafaConfig& cfg);

// CAFA and standard Shapley values at x, plus their Pearson correlation over
// the controllable features. Needs at least two controllable features.
ShapComparison compare_with_shap(const Instance& x, const Classifier& f,
                                 const FeatureSchema& schema, const CafaConfig& cfg,
                                 const Background& training_bg);

// Values the comparison correlates for one attribution: |phi| restricted to
// the controllable features when cfg.aggregate is kMeanAbs, signed phi
// otherwise.
std::vector<double> controllable_profile(const Attribution& a, const FeatureSchema& schema,
                                         Aggregate aggregate);

// Signed Pearson correlation over F_c between CAFA's signed neighbourhood mean
// (mean_phi, whatever the configured aggregate) and `shap`. Throws
// ExplanationError when undefined.
double signed_pearson_controllable(const CafaResult& cafa, const Attribution& shap,
                                   const FeatureSchema& schema);

}  // namespace cafa

#endif  // CAFA_CAFA_HPP
