#include "cafa/distance.hpp"

#include <cmath>

#include "cafa/error.hpp"
#include "cafa/random.hpp"

namespace cafa {

DistanceParams::DistanceParams(const FeatureSchema& schema) {
  weights_.reserve(schema.size());
  for (const auto& f : schema.features()) {
    weights_.push_back(f.weight);
    categorical_.push_back(f.categorical() ? 1 : 0);
    normalizer_ += f.weight;
  }
  if (!(normalizer_ > 0.0)) throw DataError("distance weights must have a positive sum");
}

double feature_distance(FeatureKind kind, double a, double b) {
  if (kind == FeatureKind::kCategorical) {
    if (a < 0.0 || b < 0.0 || a != std::floor(a) || b != std::floor(b)) {
      throw DataError("categorical distance needs category indices");
    }
    return a == b ? 0.0 : 1.0;
  }
  if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) {
    throw DataError("continuous distance needs values in [0, 1]");
  }
  return std::abs(a - b);
}

double delta(std::span<const double> a, std::span<const double> b, const DistanceParams& params) {
  const std::size_t m = params.size();
  if (a.size() != m || b.size() != m) {
    throw DataError("delta: instances do not match the schema arity");
  }
  const auto w = params.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = params.categorical(i) ? (a[i] == b[i] ? 0.0 : 1.0) : std::abs(a[i] - b[i]);
    sum += w[i] * d;
  }
  return sum / params.normalizer();
}

double estimate_proximity(const Dataset& data, const DistanceParams& params, std::size_t n_pairs,
                          std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 2) throw DataError("proximity estimation needs at least two rows");
  if (n_pairs == 0) throw UsageError("proximity estimation needs n_pairs >= 1");

  const double all_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  double sum = 0.0;
  if (all_pairs <= static_cast<double>(n_pairs)) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) sum += delta(data.row(i), data.row(j), params);
    }
    return sum / all_pairs;
  }
  Rng rng(derive_seed(seed, 0x9a1f));
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const std::size_t i = uniform_index(rng, n);
    std::size_t j = uniform_index(rng, n - 1);
    if (j >= i) ++j;
    sum += delta(data.row(i), data.row(j), params);
  }
  return sum / static_cast<double>(n_pairs);
}

}  // namespace cafa
