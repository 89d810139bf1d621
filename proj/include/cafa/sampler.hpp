#ifndef CAFA_SAMPLER_HPP
#define CAFA_SAMPLER_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cafa/distance.hpp"
#include "cafa/error.hpp"
#include "cafa/model.hpp"
#include "cafa/random.hpp"
#include "cafa/schema.hpp"

namespace cafa {

struct PerturbationOptions {
  double sigma = 0.25;  // std-dev of the continuous proposal, in scaled units
};

// Draws one candidate neighbour of `x`: uncontrollable features are copied,
// each controllable feature is resampled independently (uniform over the
// vocabulary for categorical, N(x_j, sigma) truncated to [0, 1] for
// continuous).
Instance perturb_once(const Instance& x, const FeatureSchema& schema, Rng& rng,
                      const PerturbationOptions& options = {});

struct NeighborhoodOptions {
  std::size_t max_attempts = 200000;
  PerturbationOptions perturbation;
};

struct NeighborhoodStats {
  std::size_t attempts = 0;             // candidates drawn
  std::size_t rejections_distance = 0;  // candidates with delta > pi
  std::size_t rejections_balance = 0;   // labelled rows dropped when balancing
  std::vector<std::size_t> class_counts;  // labelled rows per class before balancing
};

// Balanced, model-labelled neighbourhood of an origin instance.
struct NeighborhoodSample {
  Dataset data;  // rows = accepted perturbations, labels = hard predictions
  Instance origin;
  double pi = 0.0;
  std::size_t k = 0;
  NeighborhoodStats stats;
  std::uint64_t seed = 0;

  nlohmann::json provenance() const;
};

// Raised when the attempt budget runs out before every observed class (and at
// least two classes) reaches K labelled rows, i.e. the model is locally
// constant around the origin.
class NeighborhoodImbalanceError : public ExplanationError {
 public:
  NeighborhoodImbalanceError(const std::string& what, std::vector<std::size_t> class_counts,
                             std::size_t attempts)
      : ExplanationError(what), class_counts_(std::move(class_counts)), attempts_(attempts) {}

  const std::vector<std::size_t>& class_counts() const { return class_counts_; }
  std::size_t attempts() const { return attempts_; }

 private:
  std::vector<std::size_t> class_counts_;
  std::size_t attempts_;
};

// Rejection-samples perturbations within delta <= pi of `x`, labels survivors
// with `f`, stops once the smallest observed class holds K rows and then
// downsamples every class to exactly K rows (uniformly, without replacement).
NeighborhoodSample generate_neighborhood(const Instance& x, const Classifier& f,
                                         const FeatureSchema& schema, double pi, std::size_t k,
                                         const NeighborhoodOptions& options, std::uint64_t seed);

}  // namespace cafa

#endif  // CAFA_SAMPLER_HPP
