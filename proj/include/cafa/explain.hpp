#ifndef CAFA_EXPLAIN_HPP
#define CAFA_EXPLAIN_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cafa/error.hpp"
#include "cafa/model.hpp"
#include "cafa/schema.hpp"
#include "json.hpp"

namespace cafa {

enum class Method { kExactShap, kMcShap, kLime, kCafa };

const char* method_name(Method m);

// Additive explanation of the positive-class probability of one instance:
// prediction ~= phi0 + sum(phi).
struct Attribution {
  std::vector<double> phi;
  double phi0 = 0.0;
  double prediction = 0.0;  // f's positive-class probability at the instance
  Method method = Method::kExactShap;
  std::uint64_t seed = 0;

  double sum() const;

  // {method, phi0, prediction, phi: [{feature, value}], seed}
  nlohmann::json to_json(const FeatureSchema& schema) const;
};

// Writes "feature,phi,abs_phi" rows ordered by |phi| descending (ties by
// feature order).
void write_attribution_csv(const Attribution& a, const FeatureSchema& schema, std::ostream& out);

// Reference rows used to value absent features.
struct Background {
  std::vector<Instance> rows;

  explicit Background(std::vector<Instance> r);
  std::size_t size() const { return rows.size(); }
};

// Seeded subsample of up to `size` rows of `data`.
Background sample_background(const Dataset& data, std::size_t size, std::uint64_t seed);

// Mean of f's positive-class probability over the background, where each
// background row is overwritten with x's values on the features in `subset`.
double coalition_value(const Classifier& f, const Instance& x, std::span<const std::size_t> subset,
                       const Background& bg);

// Thrown by shapley_exact above its feature limit.
struct ShapleySizeError : ExplanationError {
  using ExplanationError::ExplanationError;
};

inline constexpr std::size_t kDefaultExactLimit = 15;

// Exact interventional Shapley values by subset enumeration. Features whose
// value in x equals their value in every background row are null players;
// they get phi = 0 and are left out of the enumeration.
Attribution shapley_exact(const Classifier& f, const Instance& x, const Background& bg,
                          std::size_t exact_limit = kDefaultExactLimit);

// Permutation-sampling estimate. Permutation p is paired with background row
// (offset + p) mod |bg| and walks from that row to x one feature at a time, so
// every permutation telescopes to f(x) - f(b_p). phi0 is the mean f(b_p)
// over the rows used, which keeps local accuracy exact.
Attribution shapley_mc(const Classifier& f, const Instance& x, const Background& bg,
                       std::size_t n_perms, std::uint64_t seed);

struct LimeOptions {
  std::size_t n_samples = 5000;
  std::optional<double> kernel_width;  // default 0.75 * sqrt(mean delta)
  double ridge = 0.01;
};

// Weighted ridge surrogate over uniform perturbations of every feature.
// Regressors: the scaled value for continuous features, a "same category as
// x" indicator for categorical ones.
Attribution lime_explain(const Classifier& f, const Instance& x, const FeatureSchema& schema,
                         const LimeOptions& options, std::uint64_t seed);

struct GlobalExplanation {
  std::vector<double> mean_phi;
  std::vector<double> mean_abs_phi;
  double mean_phi0 = 0.0;

  // Feature indices by mean_abs_phi descending, ties by index.
  std::vector<std::size_t> ranking() const;
};

// Component-wise mean of phi and |phi|. Throws on an empty list or mixed
// arity.
GlobalExplanation global_explanation(std::span<const Attribution> attributions);

// Pearson correlation of two equally sized vectors. Throws ExplanationError
// when either has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace cafa

#endif  // CAFA_EXPLAIN_HPP
