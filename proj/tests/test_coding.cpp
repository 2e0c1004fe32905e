#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "codedml/coding.hpp"

using namespace codedml;

namespace {

// Independent condition check: binary, no zero row, full column rank.
bool valid_generator(const IntMatrix& g) {
  if (g.cols() > g.rows()) return false;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    bool any = false;
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (g(i, j) != 0 && g(i, j) != 1) return false;
      any = any || g(i, j) == 1;
    }
    if (!any) return false;
  }
  std::vector<std::vector<long long>> m(static_cast<std::size_t>(g.rows()), std::vector<long long>(static_cast<std::size_t>(g.cols())));
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = g(i, j);
  std::size_t rank = 0;
  for (std::size_t col = 0; col < m[0].size() && rank < m.size(); ++col) {
    std::size_t pivot = rank;
    while (pivot < m.size() && m[pivot][col] == 0) ++pivot;
    if (pivot == m.size()) continue;
    std::swap(m[pivot], m[rank]);
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == rank || m[r][col] == 0) continue;
      const long long a = m[rank][col], b = m[r][col];
      for (std::size_t c = 0; c < m[r].size(); ++c) m[r][c] = m[r][c] * a - m[rank][c] * b;
      long long div = 0;
      for (auto v : m[r]) div = std::gcd(div, v < 0 ? -v : v);
      if (div > 1)
        for (auto& v : m[r]) v /= div;
    }
    ++rank;
  }
  return rank == static_cast<std::size_t>(g.cols());
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> small(-5, 5);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = small(rng);
  return m;
}

std::vector<SampleId> iota_ids(std::size_t n) {
  std::vector<SampleId> ids(n);
  std::iota(ids.begin(), ids.end(), SampleId{0});
  return ids;
}

}  // namespace

TEST(RandMatrix, SingleIsOne) {
  for (double rho : {1.0, 0.9}) {
    const auto g = rand_matrix(1, 1, rho, 3);
    EXPECT_EQ(g.entries(), IntMatrix::Ones(1, 1));
  }
  EXPECT_EQ(rand_matrix_minimal(1, 1, 0).entries(), IntMatrix::Ones(1, 1));
}

TEST(RandMatrix, FourByTwoIsValid) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto g = rand_matrix(4, 2, 0.5, seed);
    EXPECT_TRUE(valid_generator(g.entries())) << g.entries();
    EXPECT_EQ(g.s(), 4U);
    EXPECT_EQ(g.r(), 2U);
  }
  EXPECT_EQ(rand_matrix(4, 2, 0.5, 7), rand_matrix(4, 2, 0.5, 7));
}

TEST(RandMatrix, AllOnesDensityCannotReachFullRank) {
  try {
    rand_matrix(3, 2, 1.0, 1);
    FAIL() << "expected NonTermination";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonTermination);
  }
}

TEST(RandMatrix, DensityRange) {
  for (double rho : {0.1, 1.5, -1.0}) {
    try {
      rand_matrix(8, 4, rho, 0);
      FAIL() << "rho " << rho;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::DensityOutOfRange);
    }
  }
  EXPECT_THROW(rand_matrix(2, 3, 0.5, 0), Error);
  EXPECT_NO_THROW(rand_matrix(8, 4, 0.25, 0));
}

TEST(RandMatrixMinimal, SquareIsPermutation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = rand_matrix_minimal(6, 6, seed);
    EXPECT_TRUE((g.entries().rowwise().sum().array() == 1).all());
    EXPECT_TRUE((g.entries().colwise().sum().array() == 1).all());
  }
}

TEST(RandMatrixMinimal, RowWeightOneAllColumnsUsed) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto g = rand_matrix_minimal(4, 2, seed);
    EXPECT_TRUE((g.entries().rowwise().sum().array() == 1).all());
    EXPECT_TRUE((g.entries().colwise().sum().array() >= 1).all());
    EXPECT_TRUE(valid_generator(g.entries()));
    EXPECT_DOUBLE_EQ(g.rho(), 0.5);
  }
}

TEST(RandMatrixMinimal, UniformOverCoveringAssignments) {
  // s=3, r=2 has six covering assignments; each should appear about 1/6 of the time.
  std::map<std::vector<int>, int> counts;
  const int draws = 60000;
  for (int seed = 0; seed < draws; ++seed) {
    const auto g = rand_matrix_minimal(3, 2, static_cast<std::uint64_t>(seed));
    counts[{g.entries()(0, 1), g.entries()(1, 1), g.entries()(2, 1)}]++;
  }
  ASSERT_EQ(counts.size(), 6U);
  for (const auto& [pattern, count] : counts) EXPECT_NEAR(count, draws / 6.0, 500.0);
  EXPECT_NO_THROW(rand_matrix_minimal(64, 64, 1));
}

TEST(Generator, JsonRoundTripAndValidation) {
  const auto g = rand_matrix(10, 4, 0.4, 21);
  const auto back = generator_from_json(nlohmann::json(g));
  EXPECT_EQ(back, g);
  EXPECT_EQ(back.seed(), 21U);
  IntMatrix singular(3, 2);
  singular << 1, 1, 1, 1, 1, 1;
  EXPECT_THROW(GeneratorMatrix(singular, 1.0, 0, DensityMode::Bernoulli), Error);
  IntMatrix zero_row(3, 2);
  zero_row << 1, 0, 0, 0, 0, 1;
  EXPECT_THROW(GeneratorMatrix(zero_row, 1.0, 0, DensityMode::Bernoulli), Error);
  EXPECT_THROW(parse_density_mode("dense"), Error);
}

TEST(Rate, Examples) {
  EXPECT_EQ(rate(rand_matrix_minimal(10, 2, 0)), (Rate{5, 1}));
  EXPECT_EQ(rate(rand_matrix_minimal(7, 7, 0)), (Rate{1, 1}));
  EXPECT_EQ(rate(rand_matrix_minimal(6, 4, 0)), (Rate{3, 2}));
}

TEST(Encode, SingleShardIsTheData) {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(9, 3, rng);
  const Matrix y = random_matrix(9, 1, rng);
  const auto store = encode(x, y.col(0), iota_ids(9), GeneratorMatrix::single());
  EXPECT_EQ(store.shard(0).features, x);
  EXPECT_EQ(store.shard(0).response, y.col(0));
  EXPECT_TRUE(store.dropped_ids().empty());
}

TEST(Encode, TwoShardSum) {
  std::mt19937_64 rng(2);
  const Matrix x = random_matrix(8, 2, rng);
  const Vector y = random_matrix(8, 1, rng).col(0);
  const GeneratorMatrix g(IntMatrix::Ones(2, 1), 1.0, 0, DensityMode::Bernoulli);
  const auto store = encode(x, y, iota_ids(8), g);
  EXPECT_EQ(store.shard(0).features, x.topRows(4) + x.bottomRows(4));
  EXPECT_EQ(store.shard(0).response, y.head(4) + y.tail(4));
}

TEST(Encode, MatchesDirectSummation) {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = rand_matrix(3, 2, 0.6, seed);
    const Matrix x = random_matrix(12, 2, rng);
    const Vector y = random_matrix(12, 1, rng).col(0);
    const auto store = encode(x, y, iota_ids(12), g);
    for (std::size_t j = 0; j < 2; ++j) {
      for (Eigen::Index row = 0; row < 4; ++row) {
        double yy = 0.0;
        double x0 = 0.0, x1 = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
          if (g(i, j) == 0) continue;
          const auto src = static_cast<Eigen::Index>(i * 4) + row;
          x0 += x(src, 0);
          x1 += x(src, 1);
          yy += y(src);
        }
        EXPECT_EQ(store.shard(j).features(row, 0), x0);
        EXPECT_EQ(store.shard(j).features(row, 1), x1);
        EXPECT_EQ(store.shard(j).response(row), yy);
      }
    }
  }
}

TEST(Encode, LayoutAccounting) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> pick_s(1, 12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t s = pick_s(rng);
    const std::size_t r = std::uniform_int_distribution<std::size_t>(1, s)(rng);
    const std::size_t n = s + std::uniform_int_distribution<std::size_t>(0, 40)(rng);
    const auto g = rand_matrix_minimal(s, r, static_cast<std::uint64_t>(trial));
    const Matrix x = random_matrix(static_cast<Eigen::Index>(n), 2, rng);
    const auto store = encode(x, Vector::Zero(static_cast<Eigen::Index>(n)), iota_ids(n), g);
    const std::size_t nbar = n / s;
    EXPECT_EQ(store.shard_size(), nbar);
    EXPECT_EQ(store.dropped_ids().size(), n - s * nbar);
    const std::size_t m = r * nbar, used = s * nbar;
    const auto t = rate(g);
    EXPECT_EQ(used * t.den, m * t.num);
  }
  EXPECT_THROW(encode(Matrix::Zero(3, 1), Vector::Zero(3), iota_ids(3), rand_matrix_minimal(4, 2, 0)), Error);
}

TEST(CodedStore, RemovalPlanAndCommit) {
  std::mt19937_64 rng(5);
  const auto g = rand_matrix(4, 3, 0.6, 11);
  const Matrix x = random_matrix(10, 2, rng);
  const Vector y = random_matrix(10, 1, rng).col(0);
  auto store = encode(x, y, iota_ids(10), g);
  ASSERT_EQ(store.dropped_ids(), (std::vector<SampleId>{8, 9}));

  const std::vector<SampleId> ids{5};
  const auto slot = *store.slot_of(5);
  EXPECT_EQ(slot.shard, 2U);
  EXPECT_EQ(slot.row, 1U);
  auto plan = store.plan_removal(ids, x.row(5), y.segment(5, 1));
  EXPECT_EQ(plan.affected, g.row_support(2));
  EXPECT_EQ(store.shard(plan.affected[0]).features, encode(x, y, iota_ids(10), g).shard(plan.affected[0]).features)
      << "planning must not touch the store";
  store.commit(std::move(plan));
  EXPECT_FALSE(store.is_active(5));
  EXPECT_EQ(store.active_count(), 7U);

  auto kind = [&](std::vector<SampleId> bad) {
    try {
      store.plan_removal(bad, Matrix::Zero(static_cast<Eigen::Index>(bad.size()), 2),
                         Vector::Zero(static_cast<Eigen::Index>(bad.size())));
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(kind({5}), ErrorKind::AlreadyUnlearned);
  EXPECT_EQ(kind({1, 1}), ErrorKind::AlreadyUnlearned);
  EXPECT_EQ(kind({100}), ErrorKind::UnknownSample);

  // A dropped tail sample feeds no shard: nothing to retrain.
  const std::vector<SampleId> tail{9};
  auto dropped = store.plan_removal(tail, x.row(9), y.segment(9, 1));
  EXPECT_TRUE(dropped.affected.empty());
  store.commit(std::move(dropped));
  EXPECT_EQ(store.active_count(), 7U);
  EXPECT_EQ(kind({9}), ErrorKind::AlreadyUnlearned);
}
