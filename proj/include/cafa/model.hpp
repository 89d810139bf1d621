#ifndef CAFA_MODEL_HPP
#define CAFA_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cafa/schema.hpp"
#include "json.hpp"

namespace cafa {

// Class id and probability vector returned by a Classifier.
struct Prediction {
  int label = 0;
  std::vector<double> proba;
};

// The prediction function explained by every explainer. Implementations must
// be pure and thread-safe.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual const FeatureSchema& schema() const = 0;
  virtual std::size_t num_classes() const = 0;
  // Defaults to "0", "1", ...
  virtual std::vector<std::string> class_names() const;

  // Unchecked hot path: writes num_classes() probabilities into `out`.
  virtual void predict_proba(std::span<const double> x, std::span<double> out) const = 0;

  // Probability of the positive class (class id 1). This is the quantity the
  // explainers attribute.
  virtual double positive_proba(std::span<const double> x) const;

  // Unchecked argmax of predict_proba; ties go to the lowest class id.
  virtual int predict_label(std::span<const double> x) const;
};

// Validating prediction: throws DataError when `x` does not match the
// classifier's schema.
Prediction predict(const Classifier& model, std::span<const double> x);

// Binary classifier backed by an arbitrary callable returning the
// positive-class score. Used for analytic test models and for plugging in
// external predictors. The score is passed through unchanged by
// positive_proba(); predict_proba() clamps it into [0, 1].
class FunctionModel final : public Classifier {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  FunctionModel(FeatureSchema schema, Fn fn) : schema_(std::move(schema)), fn_(std::move(fn)) {}

  const FeatureSchema& schema() const override { return schema_; }
  std::size_t num_classes() const override { return 2; }
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  double positive_proba(std::span<const double> x) const override { return fn_(x); }

 private:
  FeatureSchema schema_;
  Fn fn_;
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 8;
  std::size_t min_leaf = 2;
  std::size_t features_per_split = 0;  // 0: ceil(sqrt(m))
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ForestParams from_json(const nlohmann::json& j);
};

// Flat binary decision tree. Internal nodes send a row left when
//   continuous:  x[feature] <= threshold
//   categorical: x[feature] == threshold   (one category vs. the rest)
struct DecisionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t leaf = -1;  // index into leaf_counts (leaves only)
    bool categorical = false;

    bool goes_left(double v) const { return categorical ? v == threshold : v <= threshold; }
  };

  std::vector<Node> nodes;                      // nodes[0] is the root
  std::vector<std::vector<double>> leaf_counts;  // class histogram per leaf
  std::vector<std::vector<double>> leaf_proba;  // normalized histogram

  // Leaf reached by x.
  std::size_t leaf_index(std::span<const double> x) const;
  std::size_t depth() const;
};

// Bagged Gini trees over a FeatureSchema.
class RandomForest final : public Classifier {
 public:
  RandomForest(FeatureSchema schema, std::vector<std::string> class_names, ForestParams params,
               std::vector<DecisionTree> trees);

  const FeatureSchema& schema() const override { return schema_; }
  std::size_t num_classes() const override { return class_names_.size(); }
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  double positive_proba(std::span<const double> x) const override;

  std::vector<std::string> class_names() const override { return class_names_; }
  const ForestParams& params() const { return params_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RandomForest load(const std::filesystem::path& path);

 private:
  FeatureSchema schema_;
  std::vector<std::string> class_names_;
  ForestParams params_;
  std::vector<DecisionTree> trees_;
};

// Trains a random forest. Each tree sees a Poisson(1) bootstrap whose per-row
// multiplicities are drawn from a hash of (seed, tree index, row content), so
// the fitted forest does not depend on training-row order. Throws ModelError
// for fewer than 2 classes or 10 rows.
RandomForest train_forest(const Dataset& data, const ForestParams& params);

// Fraction of rows whose predicted label matches the dataset label.
double accuracy(const Classifier& model, const Dataset& data);

}  // namespace cafa

#endif  // CAFA_MODEL_HPP
