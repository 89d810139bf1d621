#ifndef CAFA_SCHEMA_HPP
#define CAFA_SCHEMA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace cafa {

enum class FeatureKind { kCategorical, kContinuous };

// One column of the feature space.
//
// Categorical values are stored in an Instance as the (integral) index of the
// category inside `vocabulary`. Continuous values are stored already scaled
// into [0, 1].
struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  std::vector<std::string> vocabulary;  // categorical only, ordered
  bool controllable = true;
  double weight = 1.0;

  bool categorical() const { return kind == FeatureKind::kCategorical; }
};

// A fixed-length feature vector matching some FeatureSchema. See Feature for
// the encoding of each slot.
using Instance = std::vector<double>;

// Ordered feature metadata shared by datasets, models and explainers.
// Immutable once constructed; the constructor enforces every invariant
// (non-empty, unique names, valid vocabularies, non-negative weights with a
// positive sum).
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<Feature> features);

  std::size_t size() const { return features_.size(); }
  const Feature& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<Feature>& features() const { return features_; }

  // Indices of controllable (F_c) and uncontrollable (F_u) features.
  const std::vector<std::size_t>& controllable() const { return controllable_; }
  const std::vector<std::size_t>& uncontrollable() const { return uncontrollable_; }

  double weight_sum() const { return weight_sum_; }
  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;  // throws DataError

  // Throws DataError when `x` has the wrong arity, a categorical slot is not
  // a valid vocabulary index, or a continuous slot lies outside [0, 1].
  void validate(std::span<const double> x) const;
  bool is_valid(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static FeatureSchema from_json(const nlohmann::json& j);

  bool operator==(const FeatureSchema& other) const;

 private:
  std::vector<Feature> features_;
  std::vector<std::size_t> controllable_;
  std::vector<std::size_t> uncontrollable_;
  double weight_sum_ = 0.0;
};

// Raw-scale range of a continuous column.
struct NormRange {
  double min = 0.0;
  double max = 1.0;
};

// (value - min) / (max - min), clamped into [0, 1]. Throws DataError if
// min >= max or any argument is non-finite.
double normalize(double value, double min, double max);
double denormalize(double scaled, double min, double max);

// Rows, class labels and the scaling used to produce them.
class Dataset {
 public:
  Dataset(FeatureSchema schema, std::vector<Instance> rows, std::vector<int> labels,
          std::vector<std::string> class_names,
          std::vector<std::optional<NormRange>> norm = {});

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<Instance>& rows() const { return rows_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t num_classes() const { return class_names_.size(); }
  std::size_t size() const { return rows_.size(); }
  const Instance& row(std::size_t i) const { return rows_[i]; }
  int label(std::size_t i) const { return labels_[i]; }

  // Per-feature raw range; empty optional for categorical features or when
  // rows were produced directly in scaled form.
  const std::vector<std::optional<NormRange>>& norm() const { return norm_; }

  std::size_t distinct_labels() const;

  // Subset of rows, preserving order.
  Dataset subset(std::span<const std::size_t> indices) const;

  // Encodes one raw record (column name -> cell text) using this dataset's
  // vocabularies and scaling. Continuous values outside the training range are
  // clamped. Unknown categories and unparsable cells throw DataError.
  Instance encode(const std::map<std::string, std::string>& raw) const;

  // Human-readable value of feature `j` in `x`: the category text, or the
  // de-normalized number.
  std::string display_value(std::size_t j, double value) const;

 private:
  FeatureSchema schema_;
  std::vector<Instance> rows_;
  std::vector<int> labels_;
  std::vector<std::string> class_names_;
  std::vector<std::optional<NormRange>> norm_;
};

// Column description for CSV ingestion.
struct ColumnSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  bool controllable = true;
  double weight = 1.0;
  std::optional<std::vector<std::string>> vocabulary;  // closed vocabulary
};

struct IngestConfig {
  std::string label;
  std::vector<ColumnSpec> features;
  std::optional<std::vector<std::string>> classes;  // fixed class order

  // { label, features: [{name, kind: "cat"|"cont", controllable, weight,
  //   vocabulary?}], classes? }
  static IngestConfig from_json(const nlohmann::json& j);
  static IngestConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Reads a headered CSV. Continuous columns are min-max scaled into [0, 1],
// categorical columns mapped to vocabulary indices, and "?" / empty cells
// imputed (mode for categorical, median for continuous).
Dataset load_csv(const std::filesystem::path& path, const IngestConfig& config);
Dataset read_csv(std::istream& in, const IngestConfig& config);

// Minimal RFC-4180-ish reader: header + rows of cells. Throws DataError on an
// unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

// Dumps the normalized dataset (categories as their text, continuous values
// in scaled form) followed by the label column.
void write_csv(const Dataset& data, std::ostream& out);

// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace cafa

#endif  // CAFA_SCHEMA_HPP
