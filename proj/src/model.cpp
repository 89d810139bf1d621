#include "cafa/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "cafa/error.hpp"
#include "cafa/random.hpp"

namespace cafa {

// ---------------------------------------------------------------------------
// Classifier

std::vector<std::string> Classifier::class_names() const {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < num_classes(); ++c) out.push_back(std::to_string(c));
  return out;
}

double Classifier::positive_proba(std::span<const double> x) const {
  std::vector<double> p(num_classes());
  predict_proba(x, p);
  return p.size() > 1 ? p[1] : 0.0;
}

int Classifier::predict_label(std::span<const double> x) const {
  std::vector<double> p(num_classes());
  predict_proba(x, p);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

Prediction predict(const Classifier& model, std::span<const double> x) {
  model.schema().validate(x);
  Prediction out;
  out.proba.resize(model.num_classes());
  model.predict_proba(x, out.proba);
  out.label = static_cast<int>(std::max_element(out.proba.begin(), out.proba.end()) -
                               out.proba.begin());
  return out;
}

void FunctionModel::predict_proba(std::span<const double> x, std::span<double> out) const {
  const double p = std::clamp(fn_(x), 0.0, 1.0);
  out[0] = 1.0 - p;
  out[1] = p;
}

// ---------------------------------------------------------------------------
// ForestParams

nlohmann::json ForestParams::to_json() const {
  return {{"n_trees", n_trees},
          {"max_depth", max_depth},
          {"min_leaf", min_leaf},
          {"features_per_split", features_per_split},
          {"seed", seed}};
}

ForestParams ForestParams::from_json(const nlohmann::json& j) {
  ForestParams p;
  try {
    p.n_trees = j.value("n_trees", p.n_trees);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_leaf = j.value("min_leaf", p.min_leaf);
    p.features_per_split = j.value("features_per_split", p.features_per_split);
    p.seed = j.value("seed", p.seed);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed forest parameters: ") + e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------
// DecisionTree

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  for (;;) {
    const Node& n = nodes[i];
    if (n.feature < 0) return static_cast<std::size_t>(n.leaf);
    i = static_cast<std::size_t>(n.goes_left(x[static_cast<std::size_t>(n.feature)]) ? n.left
                                                                                      : n.right);
  }
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// RandomForest

RandomForest::RandomForest(FeatureSchema schema, std::vector<std::string> class_names,
                           ForestParams params, std::vector<DecisionTree> trees)
    : schema_(std::move(schema)),
      class_names_(std::move(class_names)),
      params_(params),
      trees_(std::move(trees)) {
  if (trees_.empty()) throw ModelError("forest has no trees");
  if (class_names_.size() < 2) throw ModelError("forest needs at least two classes");
  const auto arity = static_cast<std::int32_t>(schema_.size());
  for (auto& t : trees_) {
    if (t.nodes.empty()) throw ModelError("tree has no nodes");
    const auto n_nodes = static_cast<std::int32_t>(t.nodes.size());
    const auto n_leaves = static_cast<std::int32_t>(t.leaf_counts.size());
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& n = t.nodes[i];
      if (n.feature >= arity) throw ModelError("tree node tests a feature outside the schema");
      if (n.feature < 0) {
        if (n.leaf < 0 || n.leaf >= n_leaves) throw ModelError("tree leaf index out of range");
      } else if (n.left <= static_cast<std::int32_t>(i) || n.right <= static_cast<std::int32_t>(i) ||
                 n.left >= n_nodes || n.right >= n_nodes) {
        throw ModelError("tree child index out of range");
      }
    }
    t.leaf_proba.clear();
    for (const auto& counts : t.leaf_counts) {
      if (counts.size() != class_names_.size()) throw ModelError("leaf histogram has wrong size");
      const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
      if (!(total > 0.0)) throw ModelError("leaf histogram is empty");
      std::vector<double> p(counts.size());
      for (std::size_t c = 0; c < counts.size(); ++c) p[c] = counts[c] / total;
      t.leaf_proba.push_back(std::move(p));
    }
  }
}

void RandomForest::predict_proba(std::span<const double> x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& t : trees_) {
    const auto& p = t.leaf_proba[t.leaf_index(x)];
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += p[c];
  }
  const double n = static_cast<double>(trees_.size());
  for (auto& v : out) v /= n;
}

double RandomForest::positive_proba(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : trees_) s += t.leaf_proba[t.leaf_index(x)][1];
  return s / static_cast<double>(trees_.size());
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.leaf, n.categorical ? 1 : 0});
    }
    trees.push_back({{"nodes", nodes}, {"leaves", t.leaf_counts}});
  }
  return {{"format", "cafa-random-forest"},
          {"version", 1},
          {"schema", schema_.to_json()},
          {"classes", class_names_},
          {"params", params_.to_json()},
          {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "cafa-random-forest") {
      throw ModelError("not a random-forest model document");
    }
    std::vector<DecisionTree> trees;
    for (const auto& jt : j.at("trees")) {
      DecisionTree t;
      for (const auto& jn : jt.at("nodes")) {
        DecisionTree::Node n;
        n.feature = jn.at(0).get<std::int32_t>();
        n.threshold = jn.at(1).get<double>();
        n.left = jn.at(2).get<std::int32_t>();
        n.right = jn.at(3).get<std::int32_t>();
        n.leaf = jn.at(4).get<std::int32_t>();
        n.categorical = jn.at(5).get<int>() != 0;
        t.nodes.push_back(n);
      }
      t.leaf_counts = jt.at("leaves").get<std::vector<std::vector<double>>>();
      trees.push_back(std::move(t));
    }
    return RandomForest(FeatureSchema::from_json(j.at("schema")),
                        j.at("classes").get<std::vector<std::string>>(),
                        ForestParams::from_json(j.at("params")), std::move(trees));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model document: ") + e.what());
  }
}

void RandomForest::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write model to " + path.string());
  out << to_json().dump() << '\n';
}

RandomForest RandomForest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("cannot parse model " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// training

namespace {

std::uint64_t row_hash(const Instance& x, int label) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(label) + 0x51ed27ULL);
  for (double v : x) h = mix64(h ^ std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v));
  return h;
}

// Inverse-CDF Poisson(1) draw from a uniform in [0, 1).
int poisson1(double u) {
  double p = std::exp(-1.0);
  double cdf = p;
  int k = 0;
  while (u >= cdf && k < 32) {
    ++k;
    p /= k;
    cdf += p;
  }
  return k;
}

double gini_score(const std::vector<double>& counts, double total) {
  // total * impurity
  if (total <= 0.0) return 0.0;
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  return total - sq / total;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const std::vector<double>& weight, const ForestParams& params,
              std::size_t mtry, std::uint64_t tree_seed)
      : data_(data), weight_(weight), params_(params), mtry_(mtry), seed_(tree_seed),
        k_(data.num_classes()) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0, 1);
    return std::move(tree_);
  }

 private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double score = 0.0;
    bool categorical = false;
  };

  std::vector<double> class_counts(const std::vector<std::size_t>& rows) const {
    std::vector<double> c(k_, 0.0);
    for (auto r : rows) c[static_cast<std::size_t>(data_.label(r))] += weight_[r];
    return c;
  }

  std::int32_t grow(std::vector<std::size_t> rows, std::size_t depth, std::uint64_t path) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const auto counts = class_counts(rows);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const double parent = gini_score(counts, total);

    Split best;
    best.score = parent;
    const bool pure = parent <= 1e-12 * total;
    if (depth < params_.max_depth && total >= 2.0 * static_cast<double>(params_.min_leaf) && !pure) {
      best = find_split(rows, parent, total, path);
    }
    if (best.feature < 0) {
      tree_.nodes[static_cast<std::size_t>(id)].leaf =
          static_cast<std::int32_t>(tree_.leaf_counts.size());
      tree_.leaf_counts.push_back(counts);
      return id;
    }
    DecisionTree::Node split;
    split.feature = best.feature;
    split.threshold = best.threshold;
    split.categorical = best.categorical;
    std::vector<std::size_t> left, right;
    const auto f = static_cast<std::size_t>(best.feature);
    for (auto r : rows) (split.goes_left(data_.row(r)[f]) ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const auto l = grow(std::move(left), depth + 1, path * 2);
    const auto rr = grow(std::move(right), depth + 1, path * 2 + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.categorical = split.categorical;
    node.left = l;
    node.right = rr;
    return id;
  }

  Split find_split(const std::vector<std::size_t>& rows, double parent, double total,
                   std::uint64_t path) const {
    const auto& schema = data_.schema();
    const std::size_t m = schema.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed_, 0x5e1ec7, path));
    std::shuffle(order.begin(), order.end(), rng);

    Split best;
    best.score = parent - 1e-12 * total;
    std::size_t informative = 0;
    const double min_leaf = static_cast<double>(params_.min_leaf);

    const auto all = class_counts(rows);
    std::vector<std::pair<double, std::size_t>> vals;
    for (std::size_t f : order) {
      if (informative >= mtry_) break;
      vals.clear();
      for (auto r : rows) vals.emplace_back(data_.row(r)[f], r);
      std::sort(vals.begin(), vals.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return data_.label(a.second) < data_.label(b.second);
      });
      if (vals.front().first == vals.back().first) continue;
      ++informative;

      if (schema[f].categorical()) {
        // One category against the rest, categories in ascending code order.
        std::size_t i = 0;
        while (i < vals.size()) {
          const double code = vals[i].first;
          std::vector<double> in(k_, 0.0);
          std::size_t j = i;
          for (; j < vals.size() && vals[j].first == code; ++j) {
            in[static_cast<std::size_t>(data_.label(vals[j].second))] += weight_[vals[j].second];
          }
          const double w_in = std::accumulate(in.begin(), in.end(), 0.0);
          const double w_out = total - w_in;
          if (w_in >= min_leaf && w_out >= min_leaf) {
            std::vector<double> out(k_);
            for (std::size_t c = 0; c < k_; ++c) out[c] = all[c] - in[c];
            const double s = gini_score(in, w_in) + gini_score(out, w_out);
            if (s < best.score) best = {static_cast<std::int32_t>(f), code, s, true};
          }
          i = j;
        }
      } else {
        std::vector<double> left(k_, 0.0);
        double w_left = 0.0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
          const double w = weight_[vals[i].second];
          left[static_cast<std::size_t>(data_.label(vals[i].second))] += w;
          w_left += w;
          if (vals[i].first == vals[i + 1].first) continue;
          const double w_right = total - w_left;
          if (w_left < min_leaf || w_right < min_leaf) continue;
          std::vector<double> right(k_);
          for (std::size_t c = 0; c < k_; ++c) right[c] = all[c] - left[c];
          const double s = gini_score(left, w_left) + gini_score(right, w_right);
          if (s < best.score) {
            double t = 0.5 * (vals[i].first + vals[i + 1].first);
            if (!(t < vals[i + 1].first)) t = vals[i].first;
            best = {static_cast<std::int32_t>(f), t, s, false};
          }
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  const std::vector<double>& weight_;
  const ForestParams& params_;
  std::size_t mtry_;
  std::uint64_t seed_;
  std::size_t k_;
  DecisionTree tree_;
};

}  // namespace

RandomForest train_forest(const Dataset& data, const ForestParams& params) {
  if (data.schema().size() == 0) throw ModelError("cannot train on an empty feature set");
  if (data.size() < 10) throw ModelError("training needs at least 10 rows");
  if (data.distinct_labels() < 2) throw ModelError("training data contains a single class");
  if (params.n_trees == 0) throw ModelError("n_trees must be >= 1");
  if (params.min_leaf == 0) throw ModelError("min_leaf must be >= 1");
  if (params.max_depth > 60) throw ModelError("max_depth must be <= 60");

  const std::size_t m = data.schema().size();
  const std::size_t mtry =
      params.features_per_split
          ? std::min(params.features_per_split, m)
          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));

  std::vector<std::uint64_t> hashes(data.size());
  // Duplicate rows are told apart by their occurrence number so each copy gets
  // its own draw; identical rows are interchangeable, so order still does not
  // matter.
  std::unordered_map<std::uint64_t, std::uint64_t> seen;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const std::uint64_t h = row_hash(data.row(r), data.label(r));
    hashes[r] = mix64(h + 0x9E3779B97F4A7C15ULL * seen[h]++);
  }

  std::vector<DecisionTree> trees;
  trees.reserve(params.n_trees);
  std::vector<double> weight(data.size());
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(params.seed, 0x7733, t);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < data.size(); ++r) {
      const std::uint64_t h = mix64(tree_seed ^ hashes[r]);
      weight[r] = poisson1(static_cast<double>(h >> 11) * 0x1.0p-53);
      if (weight[r] > 0.0) rows.push_back(r);
    }
    if (rows.empty()) {
      std::fill(weight.begin(), weight.end(), 1.0);
      rows.resize(data.size());
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees.push_back(TreeBuilder(data, weight, params, mtry, tree_seed).build(std::move(rows)));
  }
  return RandomForest(data.schema(), data.class_names(), params, std::move(trees));
}

double accuracy(const Classifier& model, const Dataset& data) {
  std::size_t hit = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (model.predict_label(data.row(r)) == data.label(r)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

}  // namespace cafa
