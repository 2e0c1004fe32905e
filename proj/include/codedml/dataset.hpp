#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include <json.hpp>

#include "codedml/error.hpp"
#include "codedml/numerics.hpp"

namespace codedml {

using SampleId = std::uint64_t;

/// Row-indexed samples: features[i], response[i] and ids[i] describe one sample.
struct Dataset {
  Matrix features;
  Vector response;
  std::vector<SampleId> ids;
  std::vector<std::string> feature_names;
  std::string response_name = "y";

  std::size_t size() const { return ids.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  /// Throws unless shapes agree, ids are unique and all values are finite.
  void validate() const {
    if (features.rows() != response.size() || static_cast<std::size_t>(response.size()) != ids.size()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "dataset: features has " + std::to_string(features.rows()) + " rows, response " +
                      std::to_string(response.size()) + ", ids " + std::to_string(ids.size()));
    }
    if (!feature_names.empty() && feature_names.size() != dim()) {
      throw Error(ErrorKind::DimensionMismatch, "dataset: feature name count differs from column count");
    }
    std::unordered_set<SampleId> seen(ids.begin(), ids.end());
    if (seen.size() != ids.size()) throw Error(ErrorKind::InvalidSpec, "dataset: duplicate sample ids");
    require_finite(features, "dataset features");
    require_finite(response, "dataset response");
  }

  bool operator==(const Dataset& other) const {
    return features == other.features && response == other.response && ids == other.ids &&
           feature_names == other.feature_names && response_name == other.response_name;
  }
};

inline std::vector<std::string> default_feature_names(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

/// Builds a dataset with ids 0..n-1.
inline Dataset make_dataset(Matrix features, Vector response) {
  Dataset ds;
  ds.ids.resize(static_cast<std::size_t>(features.rows()));
  std::iota(ds.ids.begin(), ds.ids.end(), SampleId{0});
  ds.feature_names = default_feature_names(static_cast<std::size_t>(features.cols()));
  ds.features = std::move(features);
  ds.response = std::move(response);
  ds.validate();
  return ds;
}

/// Rows at the given positions, in the given order.
inline Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& positions) {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(positions.size()), ds.features.cols());
  out.response.resize(static_cast<Eigen::Index>(positions.size()));
  out.ids.reserve(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const auto src = static_cast<Eigen::Index>(positions[k]);
    out.features.row(static_cast<Eigen::Index>(k)) = ds.features.row(src);
    out.response(static_cast<Eigen::Index>(k)) = ds.response(src);
    out.ids.push_back(ds.ids[positions[k]]);
  }
  out.feature_names = ds.feature_names;
  out.response_name = ds.response_name;
  return out;
}

/// Dataset with the listed sample ids removed.
inline Dataset without_ids(const Dataset& ds, const std::vector<SampleId>& removed) {
  const std::unordered_set<SampleId> drop(removed.begin(), removed.end());
  std::vector<std::size_t> keep;
  keep.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (!drop.contains(ds.ids[i])) keep.push_back(i);
  return select_rows(ds, keep);
}

// ---------------------------------------------------------------------------
// CSV

/// Column selector: header name or zero-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

/// Interprets `text` as a header name when present in `header`, otherwise as an index.
inline std::optional<std::size_t> resolve_column(const ColumnRef& ref, const std::vector<std::string>& header) {
  if (const auto* name = std::get_if<std::string>(&ref)) {
    auto it = std::find(header.begin(), header.end(), *name);
    if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
    std::size_t index = 0;
    const auto* end = name->data() + name->size();
    auto [ptr, ec] = std::from_chars(name->data(), end, index);
    if (ec == std::errc() && ptr == end && !name->empty() && index < header.size()) return index;
    return std::nullopt;
  }
  const auto index = std::get<std::size_t>(ref);
  if (index < header.size()) return index;
  return std::nullopt;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

inline std::optional<double> parse_double(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads a numeric CSV with one header row. The response column is extracted;
/// when `id_column` is given its values become the sample ids, otherwise ids
/// follow row order.
inline Dataset load_csv(const std::string& path, const ColumnRef& response_column,
                        const std::optional<std::string>& id_column = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, path + ": missing header row");
  std::vector<std::string> header;
  for (auto cell : detail::split_commas(line)) header.emplace_back(cell);

  const auto response_index = resolve_column(response_column, header);
  if (!response_index) throw Error(ErrorKind::MissingColumn, path + ": response column not found");
  std::optional<std::size_t> id_index;
  if (id_column) {
    id_index = resolve_column(*id_column, header);
    if (!id_index) throw Error(ErrorKind::MissingColumn, path + ": id column '" + *id_column + "' not found");
    if (*id_index == *response_index) throw Error(ErrorKind::InvalidSpec, "id column equals response column");
  }

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != *response_index && (!id_index || c != *id_index)) feature_cols.push_back(c);

  std::vector<double> values;
  std::vector<double> response;
  std::vector<SampleId> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::ParseError, path + ": line " + std::to_string(line_no) + " has " +
                                             std::to_string(cells.size()) + " cells, expected " +
                                             std::to_string(header.size()));
    }
    auto cell_value = [&](std::size_t c) {
      auto v = detail::parse_double(cells[c]);
      if (!v) {
        throw Error(ErrorKind::ParseError, path + ": line " + std::to_string(line_no) + ", column " +
                                               std::to_string(c) + " (" + header[c] + "): '" +
                                               std::string(cells[c]) + "' is not a finite number");
      }
      return *v;
    };
    for (auto c : feature_cols) values.push_back(cell_value(c));
    response.push_back(cell_value(*response_index));
    if (id_index) {
      const double raw = cell_value(*id_index);
      if (raw < 0 || raw != std::floor(raw)) {
        throw Error(ErrorKind::ParseError, path + ": line " + std::to_string(line_no) + ": id is not a nonnegative integer");
      }
      ids.push_back(static_cast<SampleId>(raw));
    } else {
      ids.push_back(static_cast<SampleId>(ids.size()));
    }
  }

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(response.size());
  const auto d = static_cast<Eigen::Index>(feature_cols.size());
  ds.features = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), n, d);
  ds.response = Eigen::Map<Vector>(response.data(), n);
  ds.ids = std::move(ids);
  for (auto c : feature_cols) ds.feature_names.push_back(header[c]);
  ds.response_name = header[*response_index];
  ds.validate();
  return ds;
}

/// Writes features then response (17 significant digits, exact round trip).
/// With `with_ids` a leading `id` column is written.
inline void write_csv(const Dataset& ds, const std::string& path, bool with_ids = false) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  const auto names = ds.feature_names.empty() ? default_feature_names(ds.dim()) : ds.feature_names;
  if (with_ids) out << "id,";
  for (const auto& name : names) out << name << ',';
  out << ds.response_name << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (with_ids) out << ds.ids[i] << ',';
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) out << detail::format_double(ds.features(row, j)) << ',';
    out << detail::format_double(ds.response(row)) << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

// ---------------------------------------------------------------------------
// Min-max normalization

/// Per-column [min, max] of the training split; maps each column onto [0, 1].
struct NormalizationRecord {
  Vector feature_min;
  Vector feature_max;
  double response_min = 0.0;
  double response_max = 0.0;

  static double forward(double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; }
  static double backward(double v, double lo, double hi) { return hi > lo ? lo + v * (hi - lo) : lo; }

  Dataset apply(const Dataset& ds) const {
    if (static_cast<Eigen::Index>(ds.dim()) != feature_min.size()) {
      throw Error(ErrorKind::DimensionMismatch, "normalization: dataset width differs from record");
    }
    Dataset out = ds;
    for (Eigen::Index j = 0; j < out.features.cols(); ++j)
      for (Eigen::Index i = 0; i < out.features.rows(); ++i)
        out.features(i, j) = forward(ds.features(i, j), feature_min(j), feature_max(j));
    for (Eigen::Index i = 0; i < out.response.size(); ++i)
      out.response(i) = forward(ds.response(i), response_min, response_max);
    return out;
  }

  Matrix apply_features(const Matrix& x) const {
    if (x.cols() != feature_min.size()) {
      throw Error(ErrorKind::DimensionMismatch, "normalization: feature width differs from record");
    }
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) = forward(x(i, j), feature_min(j), feature_max(j));
    return out;
  }

  double denormalize_response(double v) const { return backward(v, response_min, response_max); }

  Dataset denormalize(const Dataset& ds) const {
    Dataset out = ds;
    for (Eigen::Index j = 0; j < out.features.cols(); ++j)
      for (Eigen::Index i = 0; i < out.features.rows(); ++i)
        out.features(i, j) = backward(ds.features(i, j), feature_min(j), feature_max(j));
    for (Eigen::Index i = 0; i < out.response.size(); ++i) out.response(i) = denormalize_response(ds.response(i));
    return out;
  }

  static NormalizationRecord fit(const Dataset& train) {
    if (train.size() == 0) throw Error(ErrorKind::EmptyResult, "normalization: empty training set");
    NormalizationRecord rec;
    rec.feature_min = train.features.colwise().minCoeff().transpose();
    rec.feature_max = train.features.colwise().maxCoeff().transpose();
    rec.response_min = train.response.minCoeff();
    rec.response_max = train.response.maxCoeff();
    return rec;
  }
};

inline void to_json(nlohmann::json& j, const NormalizationRecord& r) {
  j = nlohmann::json{{"feature_min", std::vector<double>(r.feature_min.begin(), r.feature_min.end())},
                     {"feature_max", std::vector<double>(r.feature_max.begin(), r.feature_max.end())},
                     {"response_min", r.response_min},
                     {"response_max", r.response_max}};
}

inline void from_json(const nlohmann::json& j, NormalizationRecord& r) {
  const auto lo = j.at("feature_min").get<std::vector<double>>();
  const auto hi = j.at("feature_max").get<std::vector<double>>();
  r.feature_min = Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  r.feature_max = Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  r.response_min = j.at("response_min").get<double>();
  r.response_max = j.at("response_max").get<double>();
}

struct NormalizedSplit {
  Dataset train;
  Dataset test;
  NormalizationRecord record;
};

/// Fits min-max maps on `train` and applies the same maps to both splits.
inline NormalizedSplit normalize(const Dataset& train, const Dataset& test) {
  auto record = NormalizationRecord::fit(train);
  return {record.apply(train), record.apply(test), record};
}

// ---------------------------------------------------------------------------
// Train/test split

struct Split {
  Dataset train;
  Dataset test;
};

/// Seeded shuffle; the first n_train shuffled rows form the training split.
inline Split split(const Dataset& ds, std::size_t n_train, std::uint64_t seed) {
  if (n_train == 0 || n_train >= ds.size()) {
    throw Error(ErrorKind::BadSplitSize, "split: need 0 < n_train < " + std::to_string(ds.size()) +
                                             ", got " + std::to_string(n_train));
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {select_rows(ds, train), select_rows(ds, test)};
}

// ---------------------------------------------------------------------------
// Synthetic data

enum class SyntheticKind { LognormalPoly, ChiSquarePoly, Mlp, GaussianLinear };

NLOHMANN_JSON_SERIALIZE_ENUM(SyntheticKind, {
                                                {SyntheticKind::LognormalPoly, "lognormal-poly"},
                                                {SyntheticKind::ChiSquarePoly, "chisquare-poly"},
                                                {SyntheticKind::Mlp, "mlp"},
                                                {SyntheticKind::GaussianLinear, "gaussian-linear"},
                                            })

inline std::string to_string(SyntheticKind kind) { return nlohmann::json(kind).get<std::string>(); }

inline SyntheticKind parse_synthetic_kind(const std::string& text) {
  for (auto kind : {SyntheticKind::LognormalPoly, SyntheticKind::ChiSquarePoly, SyntheticKind::Mlp,
                    SyntheticKind::GaussianLinear}) {
    if (to_string(kind) == text) return kind;
  }
  throw Error(ErrorKind::InvalidSpec, "unknown synthetic kind '" + text + "'");
}

/// Recipe for a synthetic regression dataset.
///
/// Feature draws: lognormal(mu, sigma2) for lognormal-poly and mlp,
/// χ²(dof) for chisquare-poly, N(0, 1) for gaussian-linear. Polynomial kinds
/// set y = [X, X∘², …, X∘degree]·w + ε; mlp feeds X through sigmoid hidden
/// layers of the given widths and a linear output. All weights, biases and
/// noise are i.i.d. N(0, 1).
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::GaussianLinear;
  std::size_t n = 1000;
  std::size_t d = 10;
  double mu = 1.0;
  double sigma2 = 1.0;
  double dof = 1.0;
  int degree = 1;
  std::vector<int> hidden = {50, 25, 50};
  std::uint64_t seed = 0;
  /// Return the polynomial expansion as the feature matrix instead of X.
  bool expose_expanded = false;

  bool operator==(const SyntheticSpec&) const = default;

  /// Default degree and distribution parameters for a kind.
  static SyntheticSpec recipe(SyntheticKind kind, std::size_t n, std::size_t d, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.kind = kind;
    spec.n = n;
    spec.d = d;
    spec.seed = seed;
    switch (kind) {
      case SyntheticKind::LognormalPoly: spec.degree = 3; spec.mu = 1.0; spec.sigma2 = 0.7; break;
      case SyntheticKind::ChiSquarePoly: spec.degree = 4; spec.dof = 1.0; break;
      case SyntheticKind::Mlp: spec.degree = 1; spec.mu = 1.0; spec.sigma2 = 4.0; break;
      case SyntheticKind::GaussianLinear: spec.degree = 1; break;
    }
    return spec;
  }

  void validate() const {
    if (n < 1 || d < 1) throw Error(ErrorKind::InvalidSpec, "synthetic: n and d must be >= 1");
    if (degree < 1) throw Error(ErrorKind::InvalidSpec, "synthetic: degree must be >= 1");
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2) || !std::isfinite(mu)) {
      throw Error(ErrorKind::InvalidSpec, "synthetic: need finite mu and sigma2 >= 0");
    }
    if (kind == SyntheticKind::ChiSquarePoly && !(dof > 0.0)) {
      throw Error(ErrorKind::InvalidSpec, "synthetic: chi-square degrees of freedom must be > 0");
    }
    if (kind == SyntheticKind::Mlp) {
      if (hidden.empty()) throw Error(ErrorKind::InvalidSpec, "synthetic: mlp needs at least one hidden layer");
      for (int w : hidden)
        if (w < 1) throw Error(ErrorKind::InvalidSpec, "synthetic: mlp layer widths must be >= 1");
      if (expose_expanded) throw Error(ErrorKind::InvalidSpec, "synthetic: mlp has no polynomial expansion");
    }
  }
};

inline void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = nlohmann::json{{"kind", s.kind},       {"n", s.n},         {"d", s.d},
                     {"mu", s.mu},           {"sigma2", s.sigma2}, {"dof", s.dof},
                     {"degree", s.degree},   {"hidden", s.hidden}, {"seed", s.seed},
                     {"expose_expanded", s.expose_expanded}};
}

inline void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  const auto kind = parse_synthetic_kind(j.at("kind").get<std::string>());
  s = SyntheticSpec::recipe(kind, j.at("n").get<std::size_t>(), j.at("d").get<std::size_t>(),
                            j.value("seed", std::uint64_t{0}));
  s.mu = j.value("mu", s.mu);
  s.sigma2 = j.value("sigma2", s.sigma2);
  s.dof = j.value("dof", s.dof);
  s.degree = j.value("degree", s.degree);
  s.hidden = j.value("hidden", s.hidden);
  s.expose_expanded = j.value("expose_expanded", s.expose_expanded);
}

/// [X, X∘², …, X∘degree] (element-wise powers, no interaction terms).
inline Matrix polynomial_expand(const Matrix& x, int degree) {
  if (degree < 1) throw Error(ErrorKind::InvalidSpec, "polynomial_expand: degree must be >= 1");
  const auto d = x.cols();
  Matrix out(x.rows(), d * degree);
  Matrix power = x;
  for (int c = 0; c < degree; ++c) {
    if (c > 0) power = power.cwiseProduct(x);
    out.middleCols(c * d, d) = power;
  }
  return out;
}

namespace detail {

inline double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline Matrix draw_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

}  // namespace detail

/// Deterministic in `spec` (including the seed). Draw order: features
/// (row-major), model parameters, then noise.
inline Dataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.d);

  Matrix x(n, d);
  switch (spec.kind) {
    case SyntheticKind::LognormalPoly:
    case SyntheticKind::Mlp: {
      std::normal_distribution<double> normal(0.0, 1.0);
      const double sigma = std::sqrt(spec.sigma2);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = std::exp(spec.mu + sigma * normal(rng));
      break;
    }
    case SyntheticKind::ChiSquarePoly: {
      std::chi_squared_distribution<double> chi2(spec.dof);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = chi2(rng);
      break;
    }
    case SyntheticKind::GaussianLinear:
      x = detail::draw_normal(rng, n, d);
      break;
  }

  Vector signal;
  Matrix expanded;
  if (spec.kind == SyntheticKind::Mlp) {
    Matrix h = x;
    for (int width : spec.hidden) {
      const Matrix weights = detail::draw_normal(rng, h.cols(), width);
      const Vector bias = detail::draw_normal(rng, width, 1);
      Matrix pre = h * weights;
      pre.rowwise() += bias.transpose();
      h = pre.unaryExpr(&detail::sigmoid);
    }
    const Vector out_weights = detail::draw_normal(rng, h.cols(), 1);
    const double out_bias = detail::draw_normal(rng, 1, 1)(0, 0);
    signal = (h * out_weights).array() + out_bias;
  } else {
    expanded = polynomial_expand(x, spec.degree);
    const Vector w = detail::draw_normal(rng, expanded.cols(), 1);
    signal = expanded * w;
  }
  const Vector noise = detail::draw_normal(rng, n, 1);

  Dataset ds;
  std::vector<std::string> base = default_feature_names(spec.d);
  if (spec.expose_expanded) {
    ds.features = std::move(expanded);
    for (int c = 1; c <= spec.degree; ++c)
      for (const auto& name : base) ds.feature_names.push_back(c == 1 ? name : name + "_pow" + std::to_string(c));
  } else {
    ds.features = std::move(x);
    ds.feature_names = std::move(base);
  }
  ds.response = signal + noise;
  ds.ids.resize(spec.n);
  std::iota(ds.ids.begin(), ds.ids.end(), SampleId{0});
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// Percentile filtering

/// Percentile with linear interpolation between closest ranks (p in [0, 100]).
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::EmptyResult, "percentile of empty column");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

enum class RemovalMode { Outliers, Inliers };

inline std::string to_string(RemovalMode mode) { return mode == RemovalMode::Outliers ? "outliers" : "inliers"; }

/// Per-sample flag: every tested feature lies inside its [p, 100 − p]
/// percentile band. `columns` limits the test to the leading columns (0 = all).
inline std::vector<bool> inside_percentile_band(const Dataset& ds, double p, std::size_t columns = 0) {
  const auto tested = static_cast<Eigen::Index>(columns == 0 ? ds.dim() : std::min(columns, ds.dim()));
  std::vector<bool> inside(ds.size(), true);
  for (Eigen::Index j = 0; j < tested; ++j) {
    std::vector<double> col(ds.features.col(j).begin(), ds.features.col(j).end());
    const double lo = percentile(col, p);
    const double hi = percentile(std::move(col), 100.0 - p);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double v = ds.features(static_cast<Eigen::Index>(i), j);
      if (v < lo || v > hi) inside[i] = false;
    }
  }
  return inside;
}

/// Outliers mode drops samples with any tested feature outside the band;
/// inliers mode drops samples with every tested feature inside it. p = 0 is
/// the unfiltered dataset in both modes.
inline Dataset remove_by_percentile(const Dataset& ds, double p, RemovalMode mode, std::size_t columns = 0) {
  if (!(p >= 0.0 && p < 50.0)) throw Error(ErrorKind::InvalidSpec, "percentile must lie in [0, 50)");
  if (p == 0.0) return ds;
  const auto inside = inside_percentile_band(ds, p, columns);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (inside[i] == (mode == RemovalMode::Outliers)) keep.push_back(i);
  if (keep.empty()) {
    throw Error(ErrorKind::EmptyResult, "removing " + to_string(mode) + " at p=" + detail::format_double(p) +
                                            " leaves no samples");
  }
  return select_rows(ds, keep);
}

}  // namespace codedml
