#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "codedml/coding.hpp"
#include "codedml/dataset.hpp"
#include "codedml/error.hpp"
#include "codedml/numerics.hpp"
#include "codedml/projections.hpp"
#include "codedml/util.hpp"

namespace codedml {

/// Features seen by the weak learners: optional random projection, then an
/// optional constant column. The constant column is coded like any other
/// feature, so a coded row carries the number of samples summed into it.
struct FeatureMap {
  std::optional<ProjectionMap> projection;
  bool intercept = false;

  std::size_t output_dim(std::size_t input_dim) const {
    return (projection ? projection->output_dim : input_dim) + (intercept ? 1 : 0);
  }

  Matrix apply(const Matrix& x) const {
    Matrix base = projection ? project(*projection, x) : x;
    if (!intercept) return base;
    Matrix out(base.rows(), base.cols() + 1);
    out.leftCols(base.cols()) = base;
    out.col(base.cols()).setOnes();
    return out;
  }

  bool operator==(const FeatureMap&) const = default;
};

struct LearnConfig {
  std::size_t s = 1;  // uncoded shards
  std::size_t r = 1;  // coded shards / weak learners
  DensityMode mode = DensityMode::Minimal;
  double rho = 1.0;   // Bernoulli density, ignored in minimal mode
  double lambda = 0.0;
  std::uint64_t seed = 0;  // generator-matrix seed
  std::size_t threads = 1;

  void validate() const {
    if (s < 1 || r < 1 || r > s) {
      throw Error(ErrorKind::InvalidSpec, "learn: need 1 <= r <= s, got s=" + std::to_string(s) + " r=" + std::to_string(r));
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidSpec, "learn: lambda must be >= 0");
  }
};

/// Weight columns of the r weak learners and their mean, which is the
/// only thing prediction needs.
struct EnsembleModel {
  Matrix weights;  // D' × r, column j trained on coded shard j
  Vector agg;      // (1/r) Σⱼ weights[:, j]
  double lambda = 0.0;
  FeatureMap features;

  std::size_t learners() const { return static_cast<std::size_t>(weights.cols()); }

  void recompute_aggregate() { agg = weights.rowwise().sum() / static_cast<double>(weights.cols()); }

  /// Predictions for raw (unmapped) feature rows: mapped(X) · agg.
  Vector predict(const Matrix& raw) const {
    const Matrix mapped = features.apply(raw);
    if (mapped.cols() != agg.size()) {
      throw Error(ErrorKind::DimensionMismatch, "predict: mapped features have " + std::to_string(mapped.cols()) +
                                                    " columns, model has " + std::to_string(agg.size()));
    }
    return mapped * agg;
  }

  /// Predictions of every weak learner, one column each.
  Matrix predict_each(const Matrix& raw) const { return features.apply(raw) * weights; }
};

inline double mse(const Vector& predicted, const Vector& actual) {
  if (predicted.size() != actual.size()) throw Error(ErrorKind::DimensionMismatch, "mse: length mismatch");
  if (actual.size() == 0) return 0.0;
  return (predicted - actual).squaredNorm() / static_cast<double>(actual.size());
}

struct LearnResult {
  EnsembleModel model;
  CodedStore store;
  std::vector<double> learner_seconds;  // training wall time per weak learner
  std::vector<std::string> warnings;
};

namespace detail {

inline GeneratorMatrix make_generator(const LearnConfig& config) {
  if (config.s == 1) return GeneratorMatrix::single();
  if (config.mode == DensityMode::Minimal) return rand_matrix_minimal(config.s, config.r, config.seed);
  return rand_matrix(config.s, config.r, config.rho, config.seed);
}

}  // namespace detail

/// Encodes the (mapped) training set and fits one ridge learner per coded
/// shard. With s = 1 the code is G = [1] and a single learner sees the whole
/// training set.
inline LearnResult learn(const Dataset& train, const LearnConfig& config, FeatureMap features = {}) {
  config.validate();
  auto generator = detail::make_generator(config);
  const Matrix mapped = features.apply(train.features);
  CodedStore store = encode(mapped, train.response, train.ids, generator);

  std::vector<std::string> warnings;
  if (store.shard_size() <= store.feature_dim()) {
    warnings.push_back("shard size " + std::to_string(store.shard_size()) + " does not exceed feature dimension " +
                       std::to_string(store.feature_dim()));
  }

  const auto r = generator.r();
  Matrix weights(static_cast<Eigen::Index>(store.feature_dim()), static_cast<Eigen::Index>(r));
  std::vector<double> seconds(r, 0.0);
  parallel_for(r, config.threads, [&](std::size_t j) {
    Stopwatch watch;
    const auto& shard = store.shard(j);
    weights.col(static_cast<Eigen::Index>(j)) = ridge_solve(shard.features, shard.response, config.lambda);
    seconds[j] = watch.seconds();
  });

  EnsembleModel model{std::move(weights), Vector(), config.lambda, std::move(features)};
  model.recompute_aggregate();
  return {std::move(model), std::move(store), std::move(seconds), std::move(warnings)};
}

/// Samples to unlearn together with their raw rows.
struct UnlearnRequest {
  std::vector<SampleId> ids;
  Matrix features;  // raw rows, one per id
  Vector response;
};

/// Request whose rows are looked up in the retained training set.
inline UnlearnRequest make_request(const Dataset& train, const std::vector<SampleId>& ids) {
  std::unordered_map<SampleId, std::size_t> row_of;
  for (std::size_t i = 0; i < train.size(); ++i) row_of.emplace(train.ids[i], i);
  UnlearnRequest request;
  request.ids = ids;
  request.features.resize(static_cast<Eigen::Index>(ids.size()), train.features.cols());
  request.response.resize(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto it = row_of.find(ids[k]);
    if (it == row_of.end()) throw Error(ErrorKind::UnknownSample, "sample " + std::to_string(ids[k]) + " is not in the training set");
    request.features.row(static_cast<Eigen::Index>(k)) = train.features.row(static_cast<Eigen::Index>(it->second));
    request.response(static_cast<Eigen::Index>(k)) = train.response(static_cast<Eigen::Index>(it->second));
  }
  return request;
}

struct AffectedReport {
  std::vector<SampleId> ids;
  std::vector<std::size_t> affected;    // retrained learners, ascending
  std::vector<double> retrain_seconds;  // per entry of `affected`
  double total_retrain_seconds = 0.0;   // wall time of the retraining phase
};

/// Batched unlearning. All subtractions are applied first, then each
/// affected learner is retrained once from scratch on its updated shard and
/// the aggregate is recomputed. Model and store are left untouched if any
/// step throws.
inline AffectedReport unlearn(EnsembleModel& model, CodedStore& store, const UnlearnRequest& request,
                              std::size_t threads = 1) {
  if (request.ids.empty()) return {};
  const Matrix mapped = model.features.apply(request.features);
  RemovalPlan plan = store.plan_removal(request.ids, mapped, request.response);

  AffectedReport report;
  report.ids = request.ids;
  report.affected = plan.affected;
  report.retrain_seconds.assign(plan.affected.size(), 0.0);
  Matrix fresh(model.weights.rows(), static_cast<Eigen::Index>(plan.affected.size()));

  Stopwatch phase;
  parallel_for(plan.affected.size(), threads, [&](std::size_t k) {
    Stopwatch watch;
    const auto& shard = plan.updated.at(plan.affected[k]);
    fresh.col(static_cast<Eigen::Index>(k)) = ridge_solve(shard.features, shard.response, model.lambda);
    report.retrain_seconds[k] = watch.seconds();
  });
  report.total_retrain_seconds = phase.seconds();

  for (std::size_t k = 0; k < plan.affected.size(); ++k)
    model.weights.col(static_cast<Eigen::Index>(plan.affected[k])) = fresh.col(static_cast<Eigen::Index>(k));
  model.recompute_aggregate();
  store.commit(std::move(plan));
  return report;
}

inline constexpr double kPerfectUnlearningTolerance = 1e-8;

struct VerificationReport {
  std::vector<double> learner_discrepancy;  // ‖w_model − w_ref‖ / ‖w_ref‖ per learner
  double aggregate_discrepancy = 0.0;
  double max_discrepancy = 0.0;
  double max_shard_difference = 0.0;  // max |stored coded entry − rebuilt entry|
  double tolerance = kPerfectUnlearningTolerance;
  bool passed = false;
  std::vector<std::string> failures;
};

inline double relative_discrepancy(const Vector& actual, const Vector& reference) {
  const double diff = (actual - reference).norm();
  const double ref = reference.norm();
  return ref > 0.0 ? diff / ref : diff;
}

/// Retrain-from-scratch oracle: rebuilds every coded shard from `surviving`
/// using the store's generator and shard assignment, retrains all learners
/// with the model's λ and feature map, and compares weights.
inline VerificationReport verify_perfect_unlearning(const EnsembleModel& model, const CodedStore& store,
                                                    const Dataset& surviving,
                                                    double tolerance = kPerfectUnlearningTolerance) {
  const Matrix mapped = model.features.apply(surviving.features);
  std::unordered_map<SampleId, std::size_t> row_of;
  for (std::size_t i = 0; i < surviving.size(); ++i)
    if (store.slot_of(surviving.ids[i])) row_of.emplace(surviving.ids[i], i);
  const auto rebuilt = rebuild_coded_shards(store, mapped, surviving.response, row_of);

  VerificationReport report;
  report.tolerance = tolerance;
  const auto r = store.generator().r();
  Matrix reference(model.weights.rows(), static_cast<Eigen::Index>(r));
  bool solved = true;
  for (std::size_t j = 0; j < r; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const auto& stored = store.shard(j);
    report.max_shard_difference =
        std::max({report.max_shard_difference, (stored.features - rebuilt[j].features).cwiseAbs().maxCoeff(),
                  (stored.response - rebuilt[j].response).cwiseAbs().maxCoeff()});
    try {
      reference.col(col) = ridge_solve(rebuilt[j].features, rebuilt[j].response, model.lambda);
      report.learner_discrepancy.push_back(relative_discrepancy(model.weights.col(col), reference.col(col)));
    } catch (const Error& e) {
      solved = false;
      report.learner_discrepancy.push_back(std::numeric_limits<double>::infinity());
      report.failures.push_back("learner " + std::to_string(j) + ": " + e.what());
    }
  }
  if (solved) {
    const Vector reference_agg = reference.rowwise().sum() / static_cast<double>(r);
    report.aggregate_discrepancy = relative_discrepancy(model.agg, reference_agg);
  } else {
    report.aggregate_discrepancy = std::numeric_limits<double>::infinity();
  }
  report.max_discrepancy = report.aggregate_discrepancy;
  for (double d : report.learner_discrepancy) report.max_discrepancy = std::max(report.max_discrepancy, d);
  report.passed = solved && report.max_discrepancy <= tolerance;
  return report;
}

}  // namespace codedml
