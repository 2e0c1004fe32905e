#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <vector>

#include "codedml/numerics.hpp"

using namespace codedml;

namespace {

// Plain gradient descent on (1/n)‖y − Xw‖² + λ‖w‖² with step 1/L.
Vector gradient_descent(const Matrix& X, const Vector& y, double lambda) {
  const double n = static_cast<double>(X.rows());
  const Matrix hessian = (2.0 / n) * X.transpose() * X + 2.0 * lambda * Matrix::Identity(X.cols(), X.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian);
  const double step = 1.0 / eig.eigenvalues().maxCoeff();
  Vector w = Vector::Zero(X.cols());
  for (int it = 0; it < 2'000'000; ++it) {
    const Vector grad = (2.0 / n) * X.transpose() * (X * w - y) + 2.0 * lambda * w;
    if (grad.norm() < 1e-14) break;
    w -= step * grad;
  }
  return w;
}

// Exact determinant of a small integer matrix by cofactor expansion.
long long det_exact(const std::vector<std::vector<long long>>& m) {
  const auto n = m.size();
  if (n == 1) return m[0][0];
  long long total = 0;
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c] == 0) continue;
    std::vector<std::vector<long long>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<long long> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(m[r][k]);
      minor.push_back(row);
    }
    total += (c % 2 == 0 ? 1 : -1) * m[0][c] * det_exact(minor);
  }
  return total;
}

// Largest k with some nonzero k × k minor.
std::size_t rank_by_minors(const IntMatrix& g) {
  const auto rows = static_cast<std::size_t>(g.rows());
  const auto cols = static_cast<std::size_t>(g.cols());
  for (std::size_t k = std::min(rows, cols); k >= 1; --k) {
    std::vector<std::size_t> ri(k), ci(k);
    std::vector<bool> rsel(rows, false), csel(cols, false);
    std::fill(rsel.begin(), rsel.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
      std::fill(csel.begin(), csel.end(), false);
      std::fill(csel.begin(), csel.begin() + static_cast<std::ptrdiff_t>(k), true);
      do {
        std::vector<std::vector<long long>> sub;
        for (std::size_t r = 0; r < rows; ++r) {
          if (!rsel[r]) continue;
          std::vector<long long> row;
          for (std::size_t c = 0; c < cols; ++c)
            if (csel[c]) row.push_back(g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
          sub.push_back(row);
        }
        if (det_exact(sub) != 0) return k;
      } while (std::prev_permutation(csel.begin(), csel.end()));
    } while (std::prev_permutation(rsel.begin(), rsel.end()));
  }
  return 0;
}

IntMatrix random_binary(std::size_t rows, std::size_t cols, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  IntMatrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = coin(rng) ? 1 : 0;
  return g;
}

}  // namespace

TEST(RidgeSolve, IdentityDesign) {
  const Vector w = ridge_solve(Matrix::Identity(3, 3), Vector{{1.0, 2.0, 3.0}}, 0.0);
  EXPECT_NEAR((w - Vector{{1.0, 2.0, 3.0}}).norm(), 0.0, 1e-14);
}

TEST(RidgeSolve, ZeroResponseGivesZeroWeights) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  Matrix X(5, 2);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
  EXPECT_EQ(ridge_solve(X, Vector::Zero(5), 0.1), Vector::Zero(2));
}

TEST(RidgeSolve, SmallSystemMatchesGradientDescent) {
  const Matrix X{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  const Vector y{{1.0, 1.0, 2.0}};
  const Vector oracle = gradient_descent(X, y, 0.5);
  const Vector w = ridge_solve(X, y, 0.5);
  EXPECT_LE((w - oracle).norm() / oracle.norm(), 1e-6);
  EXPECT_NEAR(w(0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(w(1), 2.0 / 3.0, 1e-12);
}

TEST(RidgeSolve, GradientVanishesAtSolution) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (double lambda : {0.0, 1e-3, 0.7}) {
    Matrix X(40, 6);
    Vector y(40);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = normal(rng);
    const Vector w = ridge_solve(X, y, lambda);
    EXPECT_LE(ridge_gradient(X, y, lambda, w).norm(), 1e-8 * (1.0 + y.norm())) << "lambda " << lambda;
  }
}

TEST(RidgeSolve, Errors) {
  const Matrix X{{1.0, 2.0}, {2.0, 4.0}, {3.0, 6.0}};
  const Vector y{{1.0, 2.0, 3.0}};
  try {
    ridge_solve(X, y, 0.0);
    FAIL() << "expected SingularSystem";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularSystem);
  }
  EXPECT_NO_THROW(ridge_solve(X, y, 1e-3));
  try {
    ridge_solve(X, Vector::Zero(2), 0.1);
    FAIL() << "expected DimensionMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
  Matrix bad = X;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    ridge_solve(bad, y, 0.1);
    FAIL() << "expected NonFinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
  }
  try {
    ridge_solve(Matrix::Identity(2, 3), Vector::Zero(2), 0.0);
    FAIL() << "expected SingularSystem for an underdetermined system";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularSystem);
  }
}

TEST(BinaryRank, SmallCases) {
  EXPECT_EQ(binary_rank(IntMatrix::Ones(1, 1)), 1U);
  IntMatrix g(3, 2);
  g << 1, 1, 1, 1, 0, 1;
  EXPECT_EQ(binary_rank(g), 2U);
  EXPECT_EQ(binary_rank(IntMatrix::Ones(4, 3)), 1U);
  EXPECT_EQ(binary_rank(IntMatrix::Zero(3, 3)), 0U);
  IntMatrix bad = IntMatrix::Ones(2, 2);
  bad(0, 1) = 2;
  EXPECT_THROW(binary_rank(bad), Error);
}

TEST(BinaryRank, MatchesMinorEnumeration) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const double p = trial % 3 == 0 ? 0.2 : 0.5;
    const IntMatrix g = random_binary(6, 3, p, rng);
    EXPECT_EQ(binary_rank(g), rank_by_minors(g)) << g;
  }
  for (int trial = 0; trial < 100; ++trial) {
    const IntMatrix g = random_binary(5, 5, 0.4, rng);
    EXPECT_EQ(binary_rank(g), rank_by_minors(g)) << g;
  }
}

TEST(BinaryRank, DeficientLargeMatrix) {
  // Two equal column blocks: rank is exactly half the width.
  std::mt19937_64 rng(5);
  const IntMatrix half = random_binary(64, 20, 0.5, rng);
  IntMatrix g(64, 40);
  g << half, half;
  EXPECT_EQ(binary_rank(g), binary_rank(half));
  EXPECT_EQ(binary_rank(half), 20U);
}

TEST(BinaryRank, BareissPathsAgree) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    IntMatrix g = random_binary(12, 10, 0.5, rng);
    g.col(9) = g.col(0);  // force a deficiency so the exact path decides
    const auto small = detail::bareiss_rank<std::int64_t>(g);
    const auto big = detail::bareiss_rank<boost::multiprecision::cpp_int>(g);
    ASSERT_TRUE(big.has_value());
    if (small) {
      EXPECT_EQ(*small, *big);
    }
    EXPECT_EQ(binary_rank(g), *big);
    EXPECT_LE(*big, 9U);
  }
}

TEST(MatrixOps, Identities) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix A(4, 3);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = normal(rng);
  EXPECT_EQ(mat_mat(A, Matrix::Identity(3, 3)), A);
  EXPECT_EQ(transpose(transpose(A)), A);
  EXPECT_THROW(mat_mat(A, A), Error);
  EXPECT_THROW(add(A, transpose(A)), Error);
  EXPECT_THROW(mat_vec(A, Vector::Zero(4)), Error);
}

TEST(MatrixOps, ProductMatchesNaiveLoops) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> small(-9, 9);
  Matrix A(4, 3), B(3, 2);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = small(rng);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = small(rng);
  Matrix oracle = Matrix::Zero(4, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 3; ++k) oracle(i, j) += A(i, k) * B(k, j);
  EXPECT_EQ(mat_mat(A, B), oracle);
  EXPECT_EQ(mat_vec(A, B.col(0).eval()), oracle.col(0).eval());
  EXPECT_EQ(subtract(add(A, A), A), A);
  EXPECT_EQ(scale(A, 2.0), add(A, A));
}
