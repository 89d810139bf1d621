#include "cafa/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>

#include "cafa/distance.hpp"
#include "cafa/random.hpp"

namespace cafa {

const char* method_name(Method m) {
  switch (m) {
    case Method::kExactShap: return "exact-shap";
    case Method::kMcShap: return "mc-shap";
    case Method::kLime: return "lime";
    case Method::kCafa: return "cafa";
  }
  return "unknown";
}

double Attribution::sum() const { return std::accumulate(phi.begin(), phi.end(), 0.0); }

nlohmann::json Attribution::to_json(const FeatureSchema& schema) const {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t j = 0; j < phi.size(); ++j) {
    arr.push_back({{"feature", schema[j].name}, {"value", phi[j]}});
  }
  return {{"method", method_name(method)},
          {"phi0", phi0},
          {"prediction", prediction},
          {"phi", arr},
          {"seed", seed}};
}

void write_attribution_csv(const Attribution& a, const FeatureSchema& schema, std::ostream& out) {
  std::vector<std::size_t> order(a.phi.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(a.phi[i]) > std::abs(a.phi[j]);
  });
  out << "feature,phi,abs_phi\n";
  for (auto j : order) {
    out << schema[j].name << ',' << format_double(a.phi[j]) << ','
        << format_double(std::abs(a.phi[j])) << '\n';
  }
}

Background::Background(std::vector<Instance> r) : rows(std::move(r)) {
  if (rows.empty()) throw ExplanationError("background must contain at least one row");
  for (const auto& b : rows) {
    if (b.size() != rows.front().size()) throw ExplanationError("background rows differ in arity");
  }
}

Background sample_background(const Dataset& data, std::size_t size, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xb6));
  std::vector<Instance> rows;
  for (auto i : sample_without_replacement(rng, data.size(), std::max<std::size_t>(size, 1))) {
    rows.push_back(data.row(i));
  }
  return Background(std::move(rows));
}

namespace {

void check_inputs(const Classifier& f, const Instance& x, const Background& bg) {
  f.schema().validate(x);
  if (bg.rows.front().size() != x.size()) {
    throw ExplanationError("background arity does not match the instance");
  }
}

}  // namespace

double coalition_value(const Classifier& f, const Instance& x, std::span<const std::size_t> subset,
                       const Background& bg) {
  check_inputs(f, x, bg);
  for (auto j : subset) {
    if (j >= x.size()) throw ExplanationError("coalition names a feature outside the schema");
  }
  Instance z(x.size());
  double sum = 0.0;
  for (const auto& b : bg.rows) {
    std::copy(b.begin(), b.end(), z.begin());
    for (auto j : subset) z[j] = x[j];
    sum += f.positive_proba(z);
  }
  return sum / static_cast<double>(bg.size());
}

Attribution shapley_exact(const Classifier& f, const Instance& x, const Background& bg,
                          std::size_t exact_limit) {
  check_inputs(f, x, bg);
  const std::size_t m = x.size();
  if (m > exact_limit) {
    throw ShapleySizeError("exact Shapley values limited to " + std::to_string(exact_limit) +
                           " features (got " + std::to_string(m) +
                           "); use the Monte-Carlo estimator");
  }

  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < m; ++j) {
    for (const auto& b : bg.rows) {
      if (b[j] != x[j]) {
        active.push_back(j);
        break;
      }
    }
  }
  const std::size_t a = active.size();
  const std::size_t n_masks = std::size_t{1} << a;

  std::vector<double> v(n_masks);
  Instance z(m);
  const double inv_b = 1.0 / static_cast<double>(bg.size());
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    double sum = 0.0;
    for (const auto& b : bg.rows) {
      std::copy(b.begin(), b.end(), z.begin());
      for (std::size_t k = 0; k < a; ++k) {
        if (mask >> k & 1) z[active[k]] = x[active[k]];
      }
      sum += f.positive_proba(z);
    }
    v[mask] = sum * inv_b;
  }

  // weight[s] = s! (a - s - 1)! / a!
  std::vector<double> weight(a > 0 ? a : 1, 0.0);
  for (std::size_t s = 0; s < a; ++s) {
    double w = 1.0 / static_cast<double>(a);
    // 1 / (a * C(a-1, s))
    for (std::size_t i = 1; i <= s; ++i) {
      w *= static_cast<double>(i) / static_cast<double>(a - i);
    }
    weight[s] = w;
  }

  Attribution out;
  out.method = Method::kExactShap;
  out.phi.assign(m, 0.0);
  for (std::size_t k = 0; k < a; ++k) {
    const std::size_t bit = std::size_t{1} << k;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const double diff = v[mask | bit] - v[mask];
      if (diff != 0.0) phi += weight[static_cast<std::size_t>(std::popcount(mask))] * diff;
    }
    out.phi[active[k]] = phi;
  }
  out.phi0 = v[0];
  out.prediction = f.positive_proba(x);
  return out;
}

Attribution shapley_mc(const Classifier& f, const Instance& x, const Background& bg,
                       std::size_t n_perms, std::uint64_t seed) {
  check_inputs(f, x, bg);
  if (n_perms == 0) throw UsageError("n_perms must be >= 1");
  const std::size_t m = x.size();

  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < m; ++j) {
    for (const auto& b : bg.rows) {
      if (b[j] != x[j]) {
        active.push_back(j);
        break;
      }
    }
  }

  Rng rng(derive_seed(seed, 0x3c));
  std::vector<std::size_t> bg_order(bg.size());
  std::iota(bg_order.begin(), bg_order.end(), std::size_t{0});
  std::shuffle(bg_order.begin(), bg_order.end(), rng);

  Attribution out;
  out.method = Method::kMcShap;
  out.seed = seed;
  out.phi.assign(m, 0.0);
  double phi0 = 0.0;
  Instance z(m);
  std::vector<std::size_t> perm = active;
  for (std::size_t p = 0; p < n_perms; ++p) {
    const auto& b = bg.rows[bg_order[p % bg.size()]];
    std::shuffle(perm.begin(), perm.end(), rng);
    std::copy(b.begin(), b.end(), z.begin());
    double prev = f.positive_proba(z);
    phi0 += prev;
    for (auto j : perm) {
      if (z[j] == x[j]) continue;
      z[j] = x[j];
      const double cur = f.positive_proba(z);
      out.phi[j] += cur - prev;
      prev = cur;
    }
  }
  const double n = static_cast<double>(n_perms);
  for (auto& v : out.phi) v /= n;
  out.phi0 = phi0 / n;
  out.prediction = f.positive_proba(x);
  return out;
}

Attribution lime_explain(const Classifier& f, const Instance& x, const FeatureSchema& schema,
                         const LimeOptions& options, std::uint64_t seed) {
  schema.validate(x);
  const std::size_t m = schema.size();
  const std::size_t n = options.n_samples;
  if (n < m + 2) throw UsageError("LIME needs n_samples >= number of features + 2");

  Rng rng(derive_seed(seed, 0x11e));
  const DistanceParams dist(schema);
  Eigen::MatrixXd design(n, m);
  Eigen::VectorXd target(n);
  std::vector<double> d(n);
  Instance z(m);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      z = x;
    } else {
      for (std::size_t j = 0; j < m; ++j) {
        z[j] = schema[j].categorical()
                   ? static_cast<double>(uniform_index(rng, schema[j].vocabulary.size()))
                   : uniform01(rng);
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      design(i, j) = schema[j].categorical() ? (z[j] == x[j] ? 1.0 : 0.0) : z[j];
    }
    target(i) = f.positive_proba(z);
    d[i] = delta(x, z, dist);
  }

  double width = 0.0;
  if (options.kernel_width) {
    width = *options.kernel_width;
  } else {
    const double mean_d = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    width = 0.75 * std::sqrt(mean_d);
  }
  if (!(width > 0.0)) throw ExplanationError("LIME kernel width must be positive");

  Eigen::VectorXd w(n);
  for (std::size_t i = 0; i < n; ++i) w(i) = std::exp(-(d[i] * d[i]) / (width * width));
  const double w_sum = w.sum();
  if (!(w_sum > 0.0) || !std::isfinite(w_sum)) throw ExplanationError("LIME sample weights vanish");

  // Weighted centering keeps the intercept out of the ridge penalty.
  const Eigen::RowVectorXd x_mean = (w.asDiagonal() * design).colwise().sum() / w_sum;
  const double y_mean = w.dot(target) / w_sum;
  const Eigen::MatrixXd xc = design.rowwise() - x_mean;
  const Eigen::VectorXd yc = target.array() - y_mean;
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd xw = sw.asDiagonal() * xc;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(m)) {
    throw ExplanationError("LIME design matrix is rank deficient (a regressor is constant)");
  }
  Eigen::MatrixXd gram = xw.transpose() * xw;
  gram.diagonal().array() += options.ridge;
  const Eigen::VectorXd beta = gram.ldlt().solve(xw.transpose() * (sw.asDiagonal() * yc));

  Attribution out;
  out.method = Method::kLime;
  out.seed = seed;
  out.phi.assign(beta.data(), beta.data() + m);
  out.phi0 = y_mean - x_mean.dot(beta);
  out.prediction = f.positive_proba(x);
  return out;
}

std::vector<std::size_t> GlobalExplanation::ranking() const {
  std::vector<std::size_t> order(mean_abs_phi.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return mean_abs_phi[i] > mean_abs_phi[j];
  });
  return order;
}

GlobalExplanation global_explanation(std::span<const Attribution> attributions) {
  if (attributions.empty()) throw ExplanationError("global explanation of an empty list");
  const std::size_t m = attributions.front().phi.size();
  GlobalExplanation g;
  g.mean_phi.assign(m, 0.0);
  g.mean_abs_phi.assign(m, 0.0);
  for (const auto& a : attributions) {
    if (a.phi.size() != m) throw ExplanationError("attributions differ in arity");
    for (std::size_t j = 0; j < m; ++j) {
      g.mean_phi[j] += a.phi[j];
      g.mean_abs_phi[j] += std::abs(a.phi[j]);
    }
    g.mean_phi0 += a.phi0;
  }
  const double n = static_cast<double>(attributions.size());
  for (std::size_t j = 0; j < m; ++j) {
    g.mean_phi[j] /= n;
    g.mean_abs_phi[j] /= n;
  }
  g.mean_phi0 /= n;
  return g;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ExplanationError("correlation needs two equally sized vectors of length >= 2");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    throw ExplanationError("correlation undefined: a vector has zero variance");
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace cafa
