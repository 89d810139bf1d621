#include "cafa/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cafa/error.hpp"

namespace cafa {

namespace {

const char* kind_name(FeatureKind k) {
  return k == FeatureKind::kCategorical ? "cat" : "cont";
}

FeatureKind parse_kind(const std::string& s) {
  if (s == "cat" || s == "categorical") return FeatureKind::kCategorical;
  if (s == "cont" || s == "continuous") return FeatureKind::kContinuous;
  throw DataError("unknown feature kind '" + s + "' (expected \"cat\" or \"cont\")");
}

std::optional<double> parse_number(const std::string& text) {
  std::string s = text;
  s.erase(0, s.find_first_not_of(" \t\r"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) {
  auto t = trim(cell);
  return t.empty() || t == "?";
}

// Numeric-aware ordering so that vocabularies like {"1","2","10"} keep their
// natural order.
std::vector<std::string> sorted_vocabulary(const std::set<std::string>& values) {
  std::vector<std::string> out(values.begin(), values.end());
  bool all_numeric = std::all_of(out.begin(), out.end(), [](const std::string& v) {
    return parse_number(v).has_value();
  });
  if (all_numeric) {
    std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// FeatureSchema

FeatureSchema::FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
  if (features_.empty()) throw DataError("schema has no features");
  std::set<std::string> names;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& f = features_[i];
    if (f.name.empty()) throw DataError("feature " + std::to_string(i) + " has an empty name");
    if (!names.insert(f.name).second) throw DataError("duplicate feature name '" + f.name + "'");
    if (!std::isfinite(f.weight) || f.weight < 0.0) {
      throw DataError("feature '" + f.name + "' has an invalid weight");
    }
    if (f.categorical()) {
      if (f.vocabulary.empty()) {
        throw DataError("categorical feature '" + f.name + "' has an empty vocabulary");
      }
      std::set<std::string> seen(f.vocabulary.begin(), f.vocabulary.end());
      if (seen.size() != f.vocabulary.size()) {
        throw DataError("categorical feature '" + f.name + "' has duplicate categories");
      }
    } else if (!f.vocabulary.empty()) {
      throw DataError("continuous feature '" + f.name + "' must not carry a vocabulary");
    }
    weight_sum_ += f.weight;
    (f.controllable ? controllable_ : uncontrollable_).push_back(i);
  }
  if (!(weight_sum_ > 0.0)) throw DataError("feature weights sum to zero");
  if (controllable_.size() + uncontrollable_.size() != features_.size()) {
    throw DataError("controllable/uncontrollable partition is inconsistent");
  }
}

std::optional<std::size_t> FeatureSchema::find(const std::string& name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FeatureSchema::index_of(const std::string& name) const {
  auto i = find(name);
  if (!i) throw DataError("unknown feature '" + name + "'");
  return *i;
}

bool FeatureSchema::is_valid(std::span<const double> x) const {
  if (x.size() != features_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (!std::isfinite(v)) return false;
    if (features_[i].categorical()) {
      if (v < 0.0 || v != std::floor(v) ||
          v >= static_cast<double>(features_[i].vocabulary.size())) {
        return false;
      }
    } else if (v < 0.0 || v > 1.0) {
      return false;
    }
  }
  return true;
}

void FeatureSchema::validate(std::span<const double> x) const {
  if (x.size() != features_.size()) {
    throw DataError("instance has " + std::to_string(x.size()) + " values, schema expects " +
                    std::to_string(features_.size()));
  }
  if (is_valid(x)) return;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw DataError("feature '" + features_[i].name + "' is not finite");
    }
    const auto& f = features_[i];
    const double v = x[i];
    if (f.categorical()) {
      if (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(f.vocabulary.size())) {
        throw DataError("feature '" + f.name + "' value " + format_double(v) +
                        " is not a category index");
      }
    } else if (v < 0.0 || v > 1.0) {
      throw DataError("feature '" + f.name + "' value " + format_double(v) +
                      " outside [0, 1]");
    }
  }
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : features_) {
    nlohmann::json j = {{"name", f.name},
                        {"kind", kind_name(f.kind)},
                        {"controllable", f.controllable},
                        {"weight", f.weight}};
    if (f.categorical()) j["vocabulary"] = f.vocabulary;
    arr.push_back(std::move(j));
  }
  return {{"features", arr}};
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
  try {
    std::vector<Feature> out;
    for (const auto& jf : j.at("features")) {
      Feature f;
      f.name = jf.at("name").get<std::string>();
      f.kind = parse_kind(jf.at("kind").get<std::string>());
      f.controllable = jf.value("controllable", true);
      f.weight = jf.value("weight", 1.0);
      if (f.categorical()) f.vocabulary = jf.at("vocabulary").get<std::vector<std::string>>();
      out.push_back(std::move(f));
    }
    return FeatureSchema(std::move(out));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed schema JSON: ") + e.what());
  }
}

bool FeatureSchema::operator==(const FeatureSchema& o) const {
  if (features_.size() != o.features_.size()) return false;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& a = features_[i];
    const auto& b = o.features_[i];
    if (a.name != b.name || a.kind != b.kind || a.vocabulary != b.vocabulary ||
        a.controllable != b.controllable || a.weight != b.weight) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// normalization

double normalize(double value, double min, double max) {
  if (!std::isfinite(value) || !std::isfinite(min) || !std::isfinite(max)) {
    throw DataError("normalize: non-finite argument");
  }
  if (!(min < max)) throw DataError("normalize: min must be < max");
  const double u = (value - min) / (max - min);
  return std::clamp(u, 0.0, 1.0);
}

double denormalize(double scaled, double min, double max) {
  if (!(min < max)) throw DataError("denormalize: min must be < max");
  return min + scaled * (max - min);
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(FeatureSchema schema, std::vector<Instance> rows, std::vector<int> labels,
                 std::vector<std::string> class_names, std::vector<std::optional<NormRange>> norm)
    : schema_(std::move(schema)),
      rows_(std::move(rows)),
      labels_(std::move(labels)),
      class_names_(std::move(class_names)),
      norm_(std::move(norm)) {
  if (schema_.size() == 0) throw DataError("dataset schema has no features");
  if (rows_.empty()) throw DataError("dataset has no rows");
  if (rows_.size() != labels_.size()) {
    throw DataError("dataset has " + std::to_string(rows_.size()) + " rows but " +
                    std::to_string(labels_.size()) + " labels");
  }
  if (class_names_.empty()) throw DataError("dataset has no class names");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!schema_.is_valid(rows_[i])) {
      try {
        schema_.validate(rows_[i]);
      } catch (const DataError& e) {
        throw DataError("row " + std::to_string(i) + ": " + e.what());
      }
    }
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= class_names_.size()) {
      throw DataError("row " + std::to_string(i) + ": label out of range");
    }
  }
  if (norm_.empty()) norm_.resize(schema_.size());
  if (norm_.size() != schema_.size()) throw DataError("norm parameters do not match schema");
  for (std::size_t j = 0; j < norm_.size(); ++j) {
    if (norm_[j] && !(norm_[j]->min < norm_[j]->max)) {
      throw DataError("feature '" + schema_[j].name + "' has a degenerate range");
    }
  }
}

std::size_t Dataset::distinct_labels() const {
  return std::set<int>(labels_.begin(), labels_.end()).size();
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Instance> rows;
  std::vector<int> labels;
  rows.reserve(indices.size());
  labels.reserve(indices.size());
  for (auto i : indices) {
    rows.push_back(rows_.at(i));
    labels.push_back(labels_.at(i));
  }
  return Dataset(schema_, std::move(rows), std::move(labels), class_names_, norm_);
}

Instance Dataset::encode(const std::map<std::string, std::string>& raw) const {
  Instance x(schema_.size());
  for (std::size_t j = 0; j < schema_.size(); ++j) {
    const auto& f = schema_[j];
    auto it = raw.find(f.name);
    if (it == raw.end()) throw DataError("instance is missing feature '" + f.name + "'");
    const std::string cell = trim(it->second);
    if (f.categorical()) {
      auto pos = std::find(f.vocabulary.begin(), f.vocabulary.end(), cell);
      if (pos == f.vocabulary.end()) {
        throw DataError("feature '" + f.name + "': unknown category '" + cell + "'");
      }
      x[j] = static_cast<double>(pos - f.vocabulary.begin());
    } else {
      auto v = parse_number(cell);
      if (!v) throw DataError("feature '" + f.name + "': cannot parse '" + cell + "'");
      x[j] = norm_[j] ? normalize(*v, norm_[j]->min, norm_[j]->max) : std::clamp(*v, 0.0, 1.0);
    }
  }
  return x;
}

std::string Dataset::display_value(std::size_t j, double value) const {
  const auto& f = schema_[j];
  if (f.categorical()) return f.vocabulary.at(static_cast<std::size_t>(value));
  if (norm_[j]) return format_double(denormalize(value, norm_[j]->min, norm_[j]->max));
  return format_double(value);
}

// ---------------------------------------------------------------------------
// ingestion

IngestConfig IngestConfig::from_json(const nlohmann::json& j) {
  try {
    IngestConfig c;
    c.label = j.at("label").get<std::string>();
    for (const auto& jf : j.at("features")) {
      ColumnSpec s;
      s.name = jf.at("name").get<std::string>();
      s.kind = parse_kind(jf.value("kind", std::string("cont")));
      s.controllable = jf.value("controllable", true);
      s.weight = jf.value("weight", 1.0);
      if (jf.contains("vocabulary")) {
        s.vocabulary = jf.at("vocabulary").get<std::vector<std::string>>();
      }
      c.features.push_back(std::move(s));
    }
    if (j.contains("classes")) c.classes = j.at("classes").get<std::vector<std::string>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed ingestion config: ") + e.what());
  }
}

IngestConfig IngestConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ingestion config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cannot parse " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json IngestConfig::to_json() const {
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& s : features) {
    nlohmann::json jf = {{"name", s.name},
                         {"kind", kind_name(s.kind)},
                         {"controllable", s.controllable},
                         {"weight", s.weight}};
    if (s.vocabulary) jf["vocabulary"] = *s.vocabulary;
    feats.push_back(std::move(jf));
  }
  nlohmann::json j = {{"label", label}, {"features", feats}};
  if (classes) j["classes"] = *classes;
  return j;
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          cell.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n') {
      row.push_back(std::move(cell));
      cell.clear();
      if (!(row.size() == 1 && trim(row[0]).empty())) rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  if (quoted) throw DataError("CSV ends inside a quoted field");
  if (any) {
    row.push_back(std::move(cell));
    if (!(row.size() == 1 && trim(row[0]).empty())) rows.push_back(std::move(row));
  }
  return rows;
}

Dataset load_csv(const std::filesystem::path& path, const IngestConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_csv(in, config);
}

Dataset read_csv(std::istream& in, const IngestConfig& config) {
  if (config.features.empty()) throw DataError("ingestion config declares no features");
  auto table = parse_csv(in);
  if (table.empty()) throw DataError("CSV is empty");
  std::vector<std::string> header;
  for (const auto& h : table[0]) header.push_back(trim(h));
  const std::size_t arity = header.size();

  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("CSV has no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = column(config.label);
  std::vector<std::size_t> cols;
  for (const auto& s : config.features) {
    if (s.name == config.label) throw DataError("label column '" + s.name + "' listed as a feature");
    cols.push_back(column(s.name));
  }
  if (table.size() < 2) throw DataError("CSV has a header but no data rows");

  const std::size_t n = table.size() - 1;
  const std::size_t m = config.features.size();
  // Line numbers in messages are 1-based file lines (header is line 1).
  for (std::size_t r = 1; r < table.size(); ++r) {
    if (table[r].size() != arity) {
      throw DataError("row " + std::to_string(r + 1) + ": expected " + std::to_string(arity) +
                      " fields, got " + std::to_string(table[r].size()));
    }
  }

  // Labels.
  std::vector<std::string> label_text(n);
  for (std::size_t r = 0; r < n; ++r) {
    label_text[r] = trim(table[r + 1][label_col]);
    if (is_missing(label_text[r])) {
      throw DataError("row " + std::to_string(r + 2) + ": missing label");
    }
  }
  std::vector<std::string> classes;
  if (config.classes) {
    classes = *config.classes;
  } else {
    classes = sorted_vocabulary(std::set<std::string>(label_text.begin(), label_text.end()));
  }
  std::vector<int> labels(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto it = std::find(classes.begin(), classes.end(), label_text[r]);
    if (it == classes.end()) {
      throw DataError("row " + std::to_string(r + 2) + ": unknown class '" + label_text[r] + "'");
    }
    labels[r] = static_cast<int>(it - classes.begin());
  }

  std::vector<Feature> features(m);
  std::vector<std::optional<NormRange>> norm(m);
  std::vector<Instance> rows(n, Instance(m, 0.0));

  for (std::size_t j = 0; j < m; ++j) {
    const auto& spec = config.features[j];
    Feature& f = features[j];
    f.name = spec.name;
    f.kind = spec.kind;
    f.controllable = spec.controllable;
    f.weight = spec.weight;
    const std::size_t c = cols[j];

    if (spec.kind == FeatureKind::kCategorical) {
      if (spec.vocabulary) {
        f.vocabulary = *spec.vocabulary;
      } else {
        std::set<std::string> seen;
        for (std::size_t r = 0; r < n; ++r) {
          if (!is_missing(table[r + 1][c])) seen.insert(trim(table[r + 1][c]));
        }
        if (seen.empty()) throw DataError("column '" + spec.name + "' has no values");
        f.vocabulary = sorted_vocabulary(seen);
      }
      std::unordered_map<std::string, std::size_t> index;
      for (std::size_t k = 0; k < f.vocabulary.size(); ++k) index.emplace(f.vocabulary[k], k);
      std::vector<std::size_t> counts(f.vocabulary.size(), 0);
      std::vector<std::size_t> missing;
      for (std::size_t r = 0; r < n; ++r) {
        const auto& cell = table[r + 1][c];
        if (is_missing(cell)) {
          missing.push_back(r);
          continue;
        }
        auto it = index.find(trim(cell));
        if (it == index.end()) {
          throw DataError("row " + std::to_string(r + 2) + ": unknown category '" + trim(cell) +
                          "' in column '" + spec.name + "'");
        }
        rows[r][j] = static_cast<double>(it->second);
        ++counts[it->second];
      }
      if (missing.size() == n) throw DataError("column '" + spec.name + "' has no values");
      const auto mode = static_cast<double>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      for (auto r : missing) rows[r][j] = mode;
    } else {
      std::vector<double> raw(n, 0.0);
      std::vector<double> present;
      std::vector<std::size_t> missing;
      for (std::size_t r = 0; r < n; ++r) {
        const auto& cell = table[r + 1][c];
        if (is_missing(cell)) {
          missing.push_back(r);
          continue;
        }
        auto v = parse_number(cell);
        if (!v) {
          throw DataError("row " + std::to_string(r + 2) + ": cannot parse '" + trim(cell) +
                          "' in column '" + spec.name + "' as a number");
        }
        raw[r] = *v;
        present.push_back(*v);
      }
      if (present.empty()) throw DataError("column '" + spec.name + "' has no values");
      std::sort(present.begin(), present.end());
      const std::size_t h = present.size() / 2;
      const double median =
          present.size() % 2 ? present[h] : 0.5 * (present[h - 1] + present[h]);
      for (auto r : missing) raw[r] = median;
      const double lo = present.front();
      const double hi = present.back();
      if (!(lo < hi)) throw DataError("continuous column '" + spec.name + "' is constant");
      norm[j] = NormRange{lo, hi};
      for (std::size_t r = 0; r < n; ++r) rows[r][j] = normalize(raw[r], lo, hi);
    }
  }

  return Dataset(FeatureSchema(std::move(features)), std::move(rows), std::move(labels),
                 std::move(classes), std::move(norm));
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_csv(const Dataset& data, std::ostream& out) {
  const auto& schema = data.schema();
  for (std::size_t j = 0; j < schema.size(); ++j) out << csv_escape(schema[j].name) << ',';
  out << "label\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto& x = data.row(r);
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (schema[j].categorical()) {
        out << csv_escape(schema[j].vocabulary[static_cast<std::size_t>(x[j])]);
      } else {
        out << format_double(x[j]);
      }
      out << ',';
    }
    out << csv_escape(data.class_names()[static_cast<std::size_t>(data.label(r))]) << '\n';
  }
}

}  // namespace cafa
