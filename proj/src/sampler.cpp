#include "cafa/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cafa {

Instance perturb_once(const Instance& x, const FeatureSchema& schema, Rng& rng,
                      const PerturbationOptions& options) {
  Instance out = x;
  for (std::size_t j : schema.controllable()) {
    const auto& f = schema[j];
    if (f.categorical()) {
      out[j] = static_cast<double>(uniform_index(rng, f.vocabulary.size()));
    } else if (options.sigma <= 0.0) {
      out[j] = x[j];
    } else {
      std::normal_distribution<double> noise(x[j], options.sigma);
      double v;
      do {
        v = noise(rng);
      } while (v < 0.0 || v > 1.0);
      out[j] = v;
    }
  }
  return out;
}

nlohmann::json NeighborhoodSample::provenance() const {
  return {{"seed", seed},
          {"pi", pi},
          {"K", k},
          {"rows", data.size()},
          {"stats",
           {{"attempts", stats.attempts},
            {"rejections_distance", stats.rejections_distance},
            {"rejections_balance", stats.rejections_balance},
            {"class_counts", stats.class_counts}}}};
}

namespace {

std::string counts_text(const std::vector<std::size_t>& counts) {
  std::string s = "[";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (c) s += ", ";
    s += std::to_string(counts[c]);
  }
  return s + "]";
}

}  // namespace

NeighborhoodSample generate_neighborhood(const Instance& x, const Classifier& f,
                                         const FeatureSchema& schema, double pi, std::size_t k,
                                         const NeighborhoodOptions& options, std::uint64_t seed) {
  schema.validate(x);
  if (!(pi > 0.0 && pi <= 1.0)) throw UsageError("proximity threshold must lie in (0, 1]");
  if (k == 0) throw UsageError("K must be >= 1");
  if (f.schema().size() != schema.size()) {
    throw UsageError("model and schema disagree on the number of features");
  }

  const DistanceParams dist(schema);
  const std::size_t n_classes = f.num_classes();
  Rng rng(derive_seed(seed, 0x5a3b1e));

  std::vector<Instance> accepted;
  std::vector<int> labels;
  NeighborhoodStats stats;
  stats.class_counts.assign(n_classes, 0);

  if (schema.controllable().empty()) {
    // Every candidate would be a copy of x, so only one class is reachable.
    stats.class_counts[static_cast<std::size_t>(f.predict_label(x))] = 1;
    throw NeighborhoodImbalanceError(
        "neighbourhood imbalance: no controllable features to perturb, every candidate equals "
        "the origin",
        stats.class_counts, 0);
  }

  auto done = [&] {
    std::size_t observed = 0;
    std::size_t smallest = k;
    for (auto c : stats.class_counts) {
      if (c == 0) continue;
      ++observed;
      smallest = std::min(smallest, c);
    }
    return observed >= 2 && smallest >= k;
  };

  while (!done()) {
    if (stats.attempts >= options.max_attempts) {
      throw NeighborhoodImbalanceError(
          "neighbourhood imbalance: class counts " + counts_text(stats.class_counts) + " after " +
              std::to_string(stats.attempts) + " attempts (K = " + std::to_string(k) +
              "); the model looks locally constant around this instance",
          stats.class_counts, stats.attempts);
    }
    ++stats.attempts;
    Instance candidate = perturb_once(x, schema, rng, options.perturbation);
    if (delta(x, candidate, dist) > pi) {
      ++stats.rejections_distance;
      continue;
    }
    const int label = f.predict_label(candidate);
    ++stats.class_counts[static_cast<std::size_t>(label)];
    accepted.push_back(std::move(candidate));
    labels.push_back(label);
  }

  // Balance: keep K uniformly chosen rows of every observed class, preserving
  // generation order.
  std::vector<char> keep(accepted.size(), 0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (stats.class_counts[c] == 0) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (static_cast<std::size_t>(labels[i]) == c) members.push_back(i);
    }
    for (auto pick : sample_without_replacement(rng, members.size(), k)) keep[members[pick]] = 1;
  }
  std::vector<Instance> rows;
  std::vector<int> kept_labels;
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    if (!keep[i]) continue;
    rows.push_back(std::move(accepted[i]));
    kept_labels.push_back(labels[i]);
  }
  stats.rejections_balance = accepted.size() - rows.size();

  return NeighborhoodSample{Dataset(schema, std::move(rows), std::move(kept_labels),
                                    f.class_names()),
                            x, pi, k, std::move(stats), seed};
}

}  // namespace cafa
