#ifndef CAFA_TESTS_HELPERS_HPP
#define CAFA_TESTS_HELPERS_HPP

#include <string>
#include <vector>

#include "cafa/bench.hpp"
#include "cafa/model.hpp"
#include "cafa/random.hpp"
#include "cafa/schema.hpp"

namespace th {

inline cafa::Feature cont(std::string name, bool controllable = true, double weight = 1.0) {
  return {std::move(name), cafa::FeatureKind::kContinuous, {}, controllable, weight};
}

inline cafa::Feature cat(std::string name, std::size_t n, bool controllable = true,
                         double weight = 1.0) {
  std::vector<std::string> vocab;
  for (std::size_t i = 0; i < n; ++i) vocab.push_back("v" + std::to_string(i));
  return {std::move(name), cafa::FeatureKind::kCategorical, vocab, controllable, weight};
}

// m features alternating continuous / 3-category, the first `u` uncontrollable.
inline cafa::SynthSpec mixed_spec(std::size_t m, std::size_t u, std::size_t rows,
                                  std::uint64_t seed) {
  cafa::SynthSpec s;
  for (std::size_t j = 0; j < m; ++j) {
    cafa::SynthFeature f;
    f.name = "f" + std::to_string(j);
    f.controllable = j >= u;
    if (j % 2) {
      f.kind = cafa::FeatureKind::kCategorical;
      f.categories = 3;
    }
    f.coef = (j % 3 == 0 ? 1.0 : 0.5) * (j % 4 == 1 ? -1.0 : 1.0);
    s.features.push_back(f);
  }
  s.n_rows = rows;
  s.noise = 0.05;
  s.seed = seed;
  return s;
}

inline cafa::Instance random_instance(const cafa::FeatureSchema& schema, cafa::Rng& rng) {
  cafa::Instance x(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    x[j] = schema[j].categorical()
               ? static_cast<double>(cafa::uniform_index(rng, schema[j].vocabulary.size()))
               : cafa::uniform01(rng);
  }
  return x;
}

inline cafa::ForestParams small_forest(std::uint64_t seed, std::size_t trees = 20) {
  cafa::ForestParams p;
  p.n_trees = trees;
  p.max_depth = 6;
  p.seed = seed;
  return p;
}

}  // namespace th

#endif  // CAFA_TESTS_HELPERS_HPP
