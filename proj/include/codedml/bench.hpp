#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "codedml/coding.hpp"
#include "codedml/dataset.hpp"
#include "codedml/ensemble.hpp"
#include "codedml/error.hpp"
#include "codedml/projections.hpp"
#include "codedml/util.hpp"

namespace codedml {

/// Where a benchmark draws its samples from. Synthetic sources are
/// regenerated for every run (seed derived from the master seed and run
/// index); CSV sources are loaded once and reshuffled per run.
struct DataSource {
  std::string name;
  std::optional<SyntheticSpec> synthetic;
  std::string csv_path;
  std::string response = "y";
  std::size_t n_train = 0;  // the rest of the samples form the test split

  std::string label() const {
    if (!name.empty()) return name;
    if (synthetic) return to_string(synthetic->kind);
    return csv_path;
  }

  /// Leading columns holding the original (unexpanded) features.
  std::size_t original_columns() const { return synthetic && synthetic->expose_expanded ? synthetic->d : 0; }

  void validate() const {
    if (!synthetic && csv_path.empty()) throw Error(ErrorKind::InvalidSpec, "dataset: need a synthetic spec or a csv path");
    if (n_train == 0) throw Error(ErrorKind::InvalidSpec, "dataset: n_train must be > 0");
    if (synthetic) {
      synthetic->validate();
      if (n_train >= synthetic->n) throw Error(ErrorKind::BadSplitSize, "dataset: n_train must be below synthetic n");
    }
  }
};

inline void to_json(nlohmann::json& j, const DataSource& src) {
  j = nlohmann::json{{"name", src.label()}, {"n_train", src.n_train}};
  if (src.synthetic) {
    j["synthetic"] = *src.synthetic;
  } else {
    j["csv"] = src.csv_path;
    j["response"] = src.response;
  }
}

inline void from_json(const nlohmann::json& j, DataSource& src) {
  src = DataSource{};
  src.name = j.value("name", std::string());
  if (j.contains("synthetic")) src.synthetic = j.at("synthetic").get<SyntheticSpec>();
  src.csv_path = j.value("csv", std::string());
  if (j.contains("response")) {
    const auto& resp = j.at("response");
    src.response = resp.is_number() ? std::to_string(resp.get<std::size_t>()) : resp.get<std::string>();
  }
  src.n_train = j.at("n_train").get<std::size_t>();
}

namespace detail {

struct RunData {
  Dataset raw_train;  // before normalization
  Dataset train;      // normalized
  Dataset test;       // normalized with the training maps
};

inline RunData prepare_run(const DataSource& src, const std::optional<Dataset>& loaded, std::uint64_t master,
                           std::size_t run) {
  Dataset all;
  if (src.synthetic) {
    SyntheticSpec spec = *src.synthetic;
    spec.seed = derive_seed(master, {0, run});
    all = gen_synthetic(spec);
  } else {
    all = *loaded;
  }
  auto parts = split(all, src.n_train, derive_seed(master, {1, run}));
  auto normalized = normalize(parts.train, parts.test);
  return {std::move(parts.train), std::move(normalized.train), std::move(normalized.test)};
}

inline std::optional<Dataset> load_source(const DataSource& src) {
  if (src.synthetic) return std::nullopt;
  return load_csv(src.csv_path, ColumnRef(src.response));
}

inline FeatureMap run_feature_map(std::size_t input_dim, std::size_t projection_dim, bool intercept,
                                  std::uint64_t master, std::size_t run) {
  FeatureMap map;
  map.intercept = intercept;
  if (projection_dim > 0) map.projection = make_projection(input_dim, projection_dim, derive_seed(master, {2, run}));
  return map;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return v.empty() ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Performance vs unlearning cost sweep

/// Shard counts swept at one code rate τ (r = s/τ).
struct RateSweep {
  std::size_t tau = 1;
  std::vector<std::size_t> shard_counts;
};

struct SweepSpec {
  DataSource data;
  std::size_t projection_dim = 0;  // 0: learners see the normalized features directly
  bool intercept = false;
  std::vector<double> lambdas = {0.0};
  std::vector<RateSweep> rates;
  std::size_t runs = 20;
  std::uint64_t seed = 0;
  DensityMode mode = DensityMode::Minimal;
  double rho = 0.5;  // Bernoulli mode only
  std::size_t threads = 1;  // concurrent cells within a run

  std::size_t cell_count() const {
    std::size_t cells = 0;
    for (const auto& rate : rates) cells += rate.shard_counts.size();
    return cells * lambdas.size();
  }

  void validate() const {
    data.validate();
    if (runs < 1) throw Error(ErrorKind::InvalidSpec, "sweep: runs must be >= 1");
    if (lambdas.empty() || cell_count() == 0) throw Error(ErrorKind::InvalidSpec, "sweep: no cells to run");
    for (double lambda : lambdas)
      if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidSpec, "sweep: lambda must be >= 0");
    for (const auto& rate : rates) {
      if (rate.tau < 1) throw Error(ErrorKind::InvalidSpec, "sweep: rate must be >= 1");
      for (auto s : rate.shard_counts) {
        if (s < 1 || s % rate.tau != 0) {
          throw Error(ErrorKind::InvalidSpec, "sweep: s=" + std::to_string(s) + " is not a positive multiple of tau=" +
                                                  std::to_string(rate.tau));
        }
      }
    }
  }
};

inline void to_json(nlohmann::json& j, const SweepSpec& spec) {
  nlohmann::json rates = nlohmann::json::array();
  for (const auto& rate : spec.rates) rates.push_back({{"tau", rate.tau}, {"shards", rate.shard_counts}});
  j = nlohmann::json{{"dataset", spec.data},   {"projection_dim", spec.projection_dim},
                     {"intercept", spec.intercept}, {"lambdas", spec.lambdas},
                     {"rates", rates},         {"runs", spec.runs},
                     {"seed", spec.seed},      {"density", spec.mode},
                     {"rho", spec.rho},        {"threads", spec.threads}};
}

/// Accepts "rates" as a list of {"tau", "shards"} objects, or as a list of
/// integers combined with a shared top-level "shards" list.
inline void from_json(const nlohmann::json& j, SweepSpec& spec) {
  spec = SweepSpec{};
  spec.data = j.at("dataset").get<DataSource>();
  spec.projection_dim = j.value("projection_dim", std::size_t{0});
  spec.intercept = j.value("intercept", false);
  spec.lambdas = j.value("lambdas", std::vector<double>{0.0});
  for (const auto& rate : j.value("rates", nlohmann::json::array())) {
    if (rate.is_object()) {
      spec.rates.push_back({rate.at("tau").get<std::size_t>(), rate.at("shards").get<std::vector<std::size_t>>()});
    } else {
      spec.rates.push_back({rate.get<std::size_t>(), j.value("shards", std::vector<std::size_t>{})});
    }
  }
  spec.runs = j.value("runs", std::size_t{20});
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.mode = parse_density_mode(j.value("density", std::string("minimal")));
  spec.rho = j.value("rho", 0.5);
  spec.threads = j.value("threads", std::size_t{1});
}

/// One (s, τ, λ) point of the trade-off curve, averaged over runs.
struct TradeoffRecord {
  std::string dataset;
  std::size_t s = 0;
  std::size_t r = 0;
  std::size_t tau = 0;
  std::string rho_mode;
  double lambda = 0.0;
  std::size_t feature_dim = 0;  // D' seen by each learner
  std::size_t n_train = 0;
  std::size_t shard_size = 0;
  std::size_t runs = 0;  // completed runs
  double test_mse_mean = 0.0;
  double test_mse_std = 0.0;
  double train_mse_mean = 0.0;
  double unlearn_seconds_mean = 0.0;
  double learn_seconds_mean = 0.0;
  double affected_learners_mean = 0.0;
  double cost_proxy = 0.0;  // affected learners × n̄ × D'²
  double test_mse_pre_unlearn_mean = 0.0;
  bool train_exceeds_test = false;
  std::string error;

  // Per-run values behind the means.
  std::vector<double> run_test_mse;
  std::vector<double> run_affected;
};

/// Each run reshuffles (and for synthetic sources regenerates) the data, and
/// every cell then learns, unlearns one uniformly chosen training sample and
/// measures. The split and projection are shared by all cells of a run; the
/// generator matrix and the unlearned sample come from the cell's own seed
/// stream, so results do not depend on `threads`.
inline std::vector<TradeoffRecord> run_tradeoff(const SweepSpec& spec) {
  spec.validate();
  struct Cell {
    std::size_t tau, s;
    double lambda;
  };
  std::vector<Cell> cells;
  for (const auto& rate : spec.rates)
    for (auto s : rate.shard_counts)
      for (double lambda : spec.lambdas) cells.push_back({rate.tau, s, lambda});

  std::vector<TradeoffRecord> records(cells.size());
  struct Samples {
    std::vector<double> test, test_pre, train, unlearn_s, learn_s, affected;
  };
  std::vector<Samples> samples(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto& rec = records[c];
    rec.dataset = spec.data.label();
    rec.s = cells[c].s;
    rec.tau = cells[c].tau;
    rec.r = cells[c].s / cells[c].tau;
    rec.rho_mode = spec.mode == DensityMode::Minimal ? "minimal" : "bernoulli:" + detail::format_double(spec.rho);
    rec.lambda = cells[c].lambda;
    rec.n_train = spec.data.n_train;
    rec.shard_size = spec.data.n_train / cells[c].s;
  }

  const auto loaded = detail::load_source(spec.data);
  for (std::size_t run = 0; run < spec.runs; ++run) {
    const auto data = detail::prepare_run(spec.data, loaded, spec.seed, run);
    const auto features = detail::run_feature_map(data.train.dim(), spec.projection_dim, spec.intercept, spec.seed, run);

    parallel_for(cells.size(), spec.threads, [&](std::size_t c) {
      auto& rec = records[c];
      if (!rec.error.empty()) return;
      try {
        LearnConfig config;
        config.s = cells[c].s;
        config.r = rec.r;
        config.mode = spec.mode;
        config.rho = spec.mode == DensityMode::Minimal ? 1.0 / static_cast<double>(rec.r) : spec.rho;
        config.lambda = cells[c].lambda;
        config.seed = derive_seed(spec.seed, {3, c, run});
        auto learned = learn(data.train, config, features);
        rec.feature_dim = learned.store.feature_dim();
        rec.shard_size = learned.store.shard_size();

        std::vector<SampleId> candidates;
        for (const auto& shard : learned.store.members()) candidates.insert(candidates.end(), shard.begin(), shard.end());
        std::mt19937_64 rng(derive_seed(spec.seed, {4, c, run}));
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        const SampleId target = candidates[pick(rng)];

        const double pre = mse(learned.model.predict(data.test.features), data.test.response);
        const auto report = unlearn(learned.model, learned.store, make_request(data.train, {target}));
        const auto surviving = without_ids(data.train, {target});

        auto& out = samples[c];
        out.test_pre.push_back(pre);
        out.test.push_back(mse(learned.model.predict(data.test.features), data.test.response));
        out.train.push_back(mse(learned.model.predict(surviving.features), surviving.response));
        out.unlearn_s.push_back(report.total_retrain_seconds);
        double learn_total = 0.0;
        for (double t : learned.learner_seconds) learn_total += t;
        out.learn_s.push_back(learn_total);
        out.affected.push_back(static_cast<double>(report.affected.size()));
      } catch (const Error& e) {
        rec.error = e.what();
      }
    });
  }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto& rec = records[c];
    const auto& out = samples[c];
    rec.runs = out.test.size();
    rec.test_mse_mean = detail::mean_of(out.test);
    rec.test_mse_std = detail::std_of(out.test);
    rec.test_mse_pre_unlearn_mean = detail::mean_of(out.test_pre);
    rec.train_mse_mean = detail::mean_of(out.train);
    rec.unlearn_seconds_mean = detail::mean_of(out.unlearn_s);
    rec.learn_seconds_mean = detail::mean_of(out.learn_s);
    rec.affected_learners_mean = detail::mean_of(out.affected);
    const auto dim = static_cast<double>(rec.feature_dim);
    rec.cost_proxy = rec.affected_learners_mean * static_cast<double>(rec.shard_size) * dim * dim;
    rec.train_exceeds_test = rec.train_mse_mean > rec.test_mse_mean;
    rec.run_test_mse = out.test;
    rec.run_affected = out.affected;
  }
  return records;
}

// ---------------------------------------------------------------------------
// Influence of outlier vs inlier removal

struct InfluenceSpec {
  DataSource data;
  std::size_t projection_dim = 0;
  bool intercept = false;
  double lambda = 0.0;
  std::vector<double> percentiles;
  std::size_t runs = 20;
  std::uint64_t seed = 0;

  void validate() const {
    data.validate();
    if (runs < 1) throw Error(ErrorKind::InvalidSpec, "influence: runs must be >= 1");
    if (percentiles.empty()) throw Error(ErrorKind::InvalidSpec, "influence: no percentiles to run");
    for (double p : percentiles)
      if (!(p >= 0.0 && p < 50.0)) throw Error(ErrorKind::InvalidSpec, "influence: percentiles must lie in [0, 50)");
    if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidSpec, "influence: lambda must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const InfluenceSpec& spec) {
  j = nlohmann::json{{"dataset", spec.data},     {"projection_dim", spec.projection_dim},
                     {"intercept", spec.intercept}, {"lambda", spec.lambda},
                     {"percentiles", spec.percentiles}, {"runs", spec.runs},
                     {"seed", spec.seed}};
}

inline void from_json(const nlohmann::json& j, InfluenceSpec& spec) {
  spec = InfluenceSpec{};
  spec.data = j.at("dataset").get<DataSource>();
  spec.projection_dim = j.value("projection_dim", std::size_t{0});
  spec.intercept = j.value("intercept", false);
  spec.lambda = j.value("lambda", 0.0);
  spec.percentiles = j.value("percentiles", std::vector<double>{});
  spec.runs = j.value("runs", std::size_t{20});
  spec.seed = j.value("seed", std::uint64_t{0});
}

/// Single-learner test MSE after filtering the training split, for one run.
struct InfluencePoint {
  RemovalMode mode = RemovalMode::Outliers;
  double percentile = 0.0;
  double remaining_pct = 100.0;
  double test_mse = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

/// One run: split, normalize on the full training split, then for every
/// percentile and mode filter the training samples by their original
/// features and fit a single learner on the rest.
inline std::vector<InfluencePoint> influence_run(const InfluenceSpec& spec, std::size_t run,
                                                 const std::optional<Dataset>& loaded = std::nullopt) {
  const auto data = detail::prepare_run(spec.data, loaded, spec.seed, run);
  const auto features = detail::run_feature_map(data.train.dim(), spec.projection_dim, spec.intercept, spec.seed, run);
  LearnConfig config;
  config.lambda = spec.lambda;

  std::vector<InfluencePoint> points;
  for (auto mode : {RemovalMode::Outliers, RemovalMode::Inliers}) {
    for (double p : spec.percentiles) {
      InfluencePoint point;
      point.mode = mode;
      point.percentile = p;
      try {
        std::vector<std::size_t> keep;
        if (p == 0.0) {
          keep.resize(data.train.size());
          std::iota(keep.begin(), keep.end(), std::size_t{0});
        } else {
          const auto inside = inside_percentile_band(data.raw_train, p, spec.data.original_columns());
          for (std::size_t i = 0; i < inside.size(); ++i)
            if (inside[i] == (mode == RemovalMode::Outliers)) keep.push_back(i);
        }
        if (keep.empty()) throw Error(ErrorKind::EmptyResult, "no samples left after removing " + to_string(mode));
        const auto filtered = select_rows(data.train, keep);
        point.remaining_pct = 100.0 * static_cast<double>(keep.size()) / static_cast<double>(data.train.size());
        const auto learned = learn(filtered, config, features);
        point.test_mse = mse(learned.model.predict(data.test.features), data.test.response);
      } catch (const Error& e) {
        point.error = e.what();
      }
      points.push_back(std::move(point));
    }
  }
  return points;
}

struct InfluenceRecord {
  std::string dataset;
  RemovalMode mode = RemovalMode::Outliers;
  double percentile = 0.0;
  double remaining_pct = 0.0;  // mean over runs
  double test_mse_mean = 0.0;
  double test_mse_std = 0.0;
  std::size_t runs = 0;
  std::string error;
};

inline std::vector<InfluenceRecord> run_influence(const InfluenceSpec& spec) {
  spec.validate();
  const auto loaded = detail::load_source(spec.data);
  const std::size_t per_run = 2 * spec.percentiles.size();
  std::vector<std::vector<double>> mses(per_run), remaining(per_run);
  std::vector<InfluenceRecord> records(per_run);
  for (std::size_t run = 0; run < spec.runs; ++run) {
    const auto points = influence_run(spec, run, loaded);
    for (std::size_t k = 0; k < per_run; ++k) {
      auto& rec = records[k];
      rec.mode = points[k].mode;
      rec.percentile = points[k].percentile;
      if (!points[k].error.empty()) {
        if (rec.error.empty()) rec.error = points[k].error;
        continue;
      }
      mses[k].push_back(points[k].test_mse);
      remaining[k].push_back(points[k].remaining_pct);
    }
  }
  for (std::size_t k = 0; k < per_run; ++k) {
    auto& rec = records[k];
    rec.dataset = spec.data.label();
    rec.runs = mses[k].size();
    rec.test_mse_mean = detail::mean_of(mses[k]);
    rec.test_mse_std = detail::std_of(mses[k]);
    rec.remaining_pct = detail::mean_of(remaining[k]);
  }
  return records;
}

/// Linear interpolation of y over x at `target` (points need not be sorted);
/// nullopt when target lies outside the sampled x range.
inline std::optional<double> interpolate_at(std::vector<std::pair<double, double>> points, double target) {
  std::sort(points.begin(), points.end());
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const auto [x0, y0] = points[k];
    const auto [x1, y1] = points[k + 1];
    if (target >= x0 && target <= x1) {
      if (x1 == x0) return y0;
      return y0 + (target - x0) / (x1 - x0) * (y1 - y0);
    }
  }
  if (points.size() == 1 && points.front().first == target) return points.front().second;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Result files

inline const std::vector<std::string>& tradeoff_columns() {
  static const std::vector<std::string> columns = {
      "dataset",          "s",           "r",           "tau",
      "rho_mode",         "lambda",      "D",           "n_train",
      "shard_size",       "runs",        "test_mse_mean", "test_mse_std",
      "train_mse_mean",   "unlearn_seconds_mean", "learn_seconds_mean", "affected_learners_mean",
      "cost_proxy",       "test_mse_pre_unlearn_mean", "train_exceeds_test", "error"};
  return columns;
}

inline const std::vector<std::string>& influence_columns() {
  static const std::vector<std::string> columns = {"dataset",       "mode",         "percentile", "remaining_pct",
                                                   "test_mse_mean", "test_mse_std", "runs",       "error"};
  return columns;
}

enum class OutputFormat { Csv, Json };

inline OutputFormat parse_output_format(const std::string& text) {
  if (text == "csv") return OutputFormat::Csv;
  if (text == "json") return OutputFormat::Json;
  throw Error(ErrorKind::InvalidSpec, "unknown output format '" + text + "' (expected csv|json)");
}

namespace detail {

inline std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char ch : text) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + "\"";
}

inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline nlohmann::json record_json(const TradeoffRecord& r) {
  return {{"dataset", r.dataset},
          {"s", r.s},
          {"r", r.r},
          {"tau", r.tau},
          {"rho_mode", r.rho_mode},
          {"lambda", r.lambda},
          {"D", r.feature_dim},
          {"n_train", r.n_train},
          {"shard_size", r.shard_size},
          {"runs", r.runs},
          {"test_mse_mean", json_number(r.test_mse_mean)},
          {"test_mse_std", json_number(r.test_mse_std)},
          {"train_mse_mean", json_number(r.train_mse_mean)},
          {"unlearn_seconds_mean", json_number(r.unlearn_seconds_mean)},
          {"learn_seconds_mean", json_number(r.learn_seconds_mean)},
          {"affected_learners_mean", json_number(r.affected_learners_mean)},
          {"cost_proxy", json_number(r.cost_proxy)},
          {"test_mse_pre_unlearn_mean", json_number(r.test_mse_pre_unlearn_mean)},
          {"train_exceeds_test", r.train_exceeds_test},
          {"error", r.error}};
}

inline nlohmann::json record_json(const InfluenceRecord& r) {
  return {{"dataset", r.dataset},
          {"mode", to_string(r.mode)},
          {"percentile", r.percentile},
          {"remaining_pct", json_number(r.remaining_pct)},
          {"test_mse_mean", json_number(r.test_mse_mean)},
          {"test_mse_std", json_number(r.test_mse_std)},
          {"runs", r.runs},
          {"error", r.error}};
}

inline std::string csv_value(const nlohmann::json& v) {
  if (v.is_null()) return "nan";
  if (v.is_string()) return csv_field(v.get<std::string>());
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

template <typename Record>
void emit(const std::vector<Record>& records, const std::vector<std::string>& columns, const std::string& path,
          OutputFormat format, const nlohmann::json& config) {
  if (records.empty()) throw Error(ErrorKind::InvalidSpec, "emit_results: no records");
  if (format == OutputFormat::Json) {
    nlohmann::json doc{{"config", config}, {"columns", columns}, {"records", nlohmann::json::array()}};
    for (const auto& rec : records) doc["records"].push_back(record_json(rec));
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& rec : records) {
    const auto row = record_json(rec);
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << csv_value(row.at(columns[c]));
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
  std::ofstream sidecar(path + ".config.json");
  if (!sidecar) throw Error(ErrorKind::Io, "cannot write " + path + ".config.json");
  sidecar << config.dump(2) << '\n';
}

}  // namespace detail

/// CSV (one row per record, columns as listed by tradeoff_columns(), plus a
/// `<path>.config.json` sidecar) or JSON ({"config", "columns", "records"}).
inline void emit_results(const std::vector<TradeoffRecord>& records, const std::string& path, OutputFormat format,
                         const nlohmann::json& config) {
  detail::emit(records, tradeoff_columns(), path, format, config);
}

inline void emit_results(const std::vector<InfluenceRecord>& records, const std::string& path, OutputFormat format,
                         const nlohmann::json& config) {
  detail::emit(records, influence_columns(), path, format, config);
}

}  // namespace codedml
