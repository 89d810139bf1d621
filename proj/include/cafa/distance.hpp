#ifndef CAFA_DISTANCE_HPP
#define CAFA_DISTANCE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cafa/schema.hpp"

namespace cafa {

// Per-feature weights and kinds for the mixed-type distance
//
//   delta(a, b) = sum_i w_i * d_i(a_i, b_i) / sum_i w_i
//
// with d_i the 0/1 mismatch for categorical features and |a_i - b_i| for
// continuous ones (values already scaled into [0, 1]).
class DistanceParams {
 public:
  explicit DistanceParams(const FeatureSchema& schema);

  std::size_t size() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  double normalizer() const { return normalizer_; }
  bool categorical(std::size_t i) const { return categorical_[i] != 0; }

 private:
  std::vector<double> weights_;
  std::vector<char> categorical_;
  double normalizer_ = 0.0;
};

// Distance between two values of one feature, in [0, 1]. Throws DataError when
// a value does not fit the kind (non-integral category, continuous outside
// [0, 1]).
double feature_distance(FeatureKind kind, double a, double b);

// Weighted mixed-type distance. Throws DataError on an arity mismatch.
double delta(std::span<const double> a, std::span<const double> b, const DistanceParams& params);

// Proximity threshold: mean delta over `n_pairs` uniformly drawn unordered row
// pairs, or over all pairs when there are no more than `n_pairs` of them.
double estimate_proximity(const Dataset& data, const DistanceParams& params,
                          std::size_t n_pairs = 10000, std::uint64_t seed = 0);

}  // namespace cafa

#endif  // CAFA_DISTANCE_HPP
