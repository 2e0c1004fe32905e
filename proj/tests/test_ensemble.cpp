#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "codedml/ensemble.hpp"

using namespace codedml;

namespace {

Dataset normalized_data(std::size_t n, std::size_t d, std::uint64_t seed) {
  const auto raw = gen_synthetic(SyntheticSpec::recipe(SyntheticKind::GaussianLinear, n, d, seed));
  return NormalizationRecord::fit(raw).apply(raw);
}

LearnConfig config(std::size_t s, std::size_t r, DensityMode mode, double lambda, std::uint64_t seed) {
  LearnConfig c;
  c.s = s;
  c.r = r;
  c.mode = mode;
  c.rho = mode == DensityMode::Minimal ? 1.0 / static_cast<double>(r) : 0.5;
  c.lambda = lambda;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Learn, SingleShardIsOneLearnerOnEverything) {
  const auto train = normalized_data(200, 4, 1);
  FeatureMap features{make_projection(4, 10, 2), true};
  const auto learned = learn(train, config(1, 1, DensityMode::Minimal, 1e-3, 0), features);
  const Vector direct = ridge_solve(features.apply(train.features), train.response, 1e-3);
  EXPECT_EQ(learned.model.weights.col(0), direct);
  EXPECT_EQ(learned.model.agg, direct);
}

TEST(Learn, PermutationCodeMatchesUncodedShards) {
  const auto train = normalized_data(120, 3, 4);
  const auto learned = learn(train, config(4, 4, DensityMode::Minimal, 0.0, 9));
  const auto& g = learned.store.generator();
  for (std::size_t j = 0; j < 4; ++j) {
    std::size_t source = 0;
    for (std::size_t i = 0; i < 4; ++i)
      if (g(i, j) == 1) source = i;
    const auto rows = static_cast<Eigen::Index>(30);
    const Vector oracle = ridge_solve(train.features.middleRows(static_cast<Eigen::Index>(source) * rows, rows),
                                      train.response.segment(static_cast<Eigen::Index>(source) * rows, rows), 0.0);
    EXPECT_EQ(learned.model.weights.col(static_cast<Eigen::Index>(j)), oracle) << "learner " << j;
  }
}

TEST(Learn, Deterministic) {
  const auto train = normalized_data(300, 5, 2);
  FeatureMap features{make_projection(5, 12, 3), false};
  const auto a = learn(train, config(10, 5, DensityMode::Bernoulli, 1e-3, 7), features);
  const auto b = learn(train, config(10, 5, DensityMode::Bernoulli, 1e-3, 7), features);
  EXPECT_EQ(a.model.weights, b.model.weights);
  EXPECT_EQ(a.model.agg, b.model.agg);
  EXPECT_EQ(a.store.generator(), b.store.generator());
}

TEST(Learn, WarnsWhenShardsAreSmall) {
  const auto train = normalized_data(60, 3, 2);
  FeatureMap features{make_projection(3, 16, 3), false};
  const auto learned = learn(train, config(6, 3, DensityMode::Minimal, 1e-2, 7), features);
  EXPECT_FALSE(learned.warnings.empty());
  EXPECT_THROW(learn(train, config(3, 4, DensityMode::Minimal, 0.0, 0)), Error);
}

TEST(Predict, AggregationIsMeanOfLearners) {
  const auto train = normalized_data(400, 4, 5);
  FeatureMap features{make_projection(4, 8, 6), true};
  const auto learned = learn(train, config(8, 4, DensityMode::Bernoulli, 1e-3, 3), features);
  const Matrix each = learned.model.predict_each(train.features);
  const Vector mean = each.rowwise().sum() / 4.0;
  EXPECT_LE((learned.model.predict(train.features) - mean).cwiseAbs().maxCoeff(), 1e-10);

  EnsembleModel zero = learned.model;
  zero.agg.setZero();
  EXPECT_EQ(zero.predict(train.features), Vector::Zero(400));

  const auto one = learn(train, config(4, 1, DensityMode::Minimal, 1e-3, 3), features);
  EXPECT_EQ(one.model.predict(train.features), one.model.predict_each(train.features).col(0));
  EXPECT_THROW(learned.model.predict(Matrix::Zero(2, 3)), Error);
}

TEST(Unlearn, MinimalDensityRetrainsOneLearnerPerSample) {
  const auto train = normalized_data(500, 4, 8);
  auto learned = learn(train, config(20, 4, DensityMode::Minimal, 1e-3, 1));
  const auto report = unlearn(learned.model, learned.store, make_request(train, {17}));
  EXPECT_EQ(report.affected.size(), 1U);

  const std::vector<SampleId> batch{3, 100, 250, 499, 42};
  const auto batch_report = unlearn(learned.model, learned.store, make_request(train, batch));
  EXPECT_GE(batch_report.affected.size(), 1U);
  EXPECT_LE(batch_report.affected.size(), std::min<std::size_t>(4, batch.size()));
}

TEST(Unlearn, MatchesRetrainingOnSurvivors) {
  const auto train = normalized_data(500, 6, 9);
  FeatureMap features{make_projection(6, 12, 4), true};
  auto learned = learn(train, config(10, 5, DensityMode::Bernoulli, 1e-3, 2), features);
  const std::vector<SampleId> gone{1, 77, 305, 499};
  unlearn(learned.model, learned.store, make_request(train, gone));

  // Oracle: encode the survivors with the same G, layout and map, retrain.
  const auto survivors = without_ids(train, gone);
  const auto& layout = learned.store;
  const Matrix mapped = features.apply(train.features);
  for (std::size_t j = 0; j < layout.generator().r(); ++j) {
    Matrix x = Matrix::Zero(static_cast<Eigen::Index>(layout.shard_size()), mapped.cols());
    Vector y = Vector::Zero(x.rows());
    for (std::size_t i = 0; i < layout.generator().s(); ++i) {
      if (layout.generator()(i, j) == 0) continue;
      for (std::size_t row = 0; row < layout.shard_size(); ++row) {
        const auto id = layout.members()[i][row];
        if (std::find(gone.begin(), gone.end(), id) != gone.end()) continue;
        x.row(static_cast<Eigen::Index>(row)) += mapped.row(static_cast<Eigen::Index>(id));
        y(static_cast<Eigen::Index>(row)) += train.response(static_cast<Eigen::Index>(id));
      }
    }
    const Vector oracle = ridge_solve(x, y, 1e-3);
    EXPECT_LE(relative_discrepancy(learned.model.weights.col(static_cast<Eigen::Index>(j)), oracle), 1e-8);
  }
  EXPECT_TRUE(verify_perfect_unlearning(learned.model, learned.store, survivors).passed);
}

TEST(Unlearn, FailureLeavesModelUntouched) {
  const auto train = normalized_data(200, 3, 10);
  auto learned = learn(train, config(4, 2, DensityMode::Minimal, 0.0, 0));
  const auto before = learned.model.weights;
  unlearn(learned.model, learned.store, make_request(train, {5}));
  const auto after_one = learned.model.weights;
  EXPECT_NE(after_one, before);
  EXPECT_THROW(unlearn(learned.model, learned.store, make_request(train, {6, 5})), Error);
  EXPECT_EQ(learned.model.weights, after_one);
  EXPECT_TRUE(learned.store.is_active(6));
  EXPECT_THROW(make_request(train, {9999}), Error);
  EXPECT_TRUE(unlearn(learned.model, learned.store, UnlearnRequest{}).affected.empty());
}

TEST(Verify, FreshModelHasZeroDiscrepancy) {
  const auto train = normalized_data(300, 4, 11);
  FeatureMap features{make_projection(4, 8, 1), false};
  const auto learned = learn(train, config(6, 3, DensityMode::Bernoulli, 1e-3, 5), features);
  const auto report = verify_perfect_unlearning(learned.model, learned.store, train);
  EXPECT_TRUE(report.passed);
  EXPECT_EQ(report.max_discrepancy, 0.0);
  EXPECT_EQ(report.max_shard_difference, 0.0);
}

TEST(Verify, WholeUncodedShardRemoved) {
  const auto train = normalized_data(300, 4, 12);
  auto learned = learn(train, config(6, 3, DensityMode::Bernoulli, 1e-3, 6));
  const auto whole = learned.store.members()[2];
  unlearn(learned.model, learned.store, make_request(train, whole));
  const auto survivors = without_ids(train, whole);
  const auto report = verify_perfect_unlearning(learned.model, learned.store, survivors);
  EXPECT_TRUE(report.passed) << report.max_discrepancy;
  EXPECT_LE(report.max_shard_difference, 1e-12);

  // Affected coded rows now hold only the remaining contributors.
  const auto& g = learned.store.generator();
  for (auto j : g.row_support(2)) {
    for (std::size_t row = 0; row < learned.store.shard_size(); ++row) {
      double expected = 0.0;
      for (std::size_t i = 0; i < g.s(); ++i)
        if (i != 2 && g(i, j) == 1) expected += train.response(static_cast<Eigen::Index>(learned.store.members()[i][row]));
      EXPECT_NEAR(learned.store.shard(j).response(static_cast<Eigen::Index>(row)), expected, 1e-12);
    }
  }
}

TEST(Verify, DetectsTampering) {
  const auto train = normalized_data(200, 3, 13);
  auto learned = learn(train, config(4, 2, DensityMode::Minimal, 1e-3, 2));
  learned.model.weights(0, 1) += 1e-3;
  learned.model.recompute_aggregate();
  const auto report = verify_perfect_unlearning(learned.model, learned.store, train);
  EXPECT_FALSE(report.passed);
  EXPECT_GT(report.learner_discrepancy[1], 1e-8);
}
