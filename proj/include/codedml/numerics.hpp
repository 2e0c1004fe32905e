#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "codedml/error.hpp"

namespace codedml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// Condition-number bound on XᵀX beyond which an unregularized solve is refused.
inline constexpr double kSingularConditionLimit = 1e12;

inline std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::NonFinite, std::string(what) + " contains NaN or Inf");
  }
}

// ---------------------------------------------------------------------------
// Dense kernels. Thin wrappers over Eigen that report shape violations as
// DimensionMismatch instead of asserting.

inline Matrix mat_mat(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "mat_mat " + shape_str(a.rows(), a.cols()) + " * " + shape_str(b.rows(), b.cols()));
  }
  return a * b;
}

inline Vector mat_vec(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "mat_vec " + shape_str(a.rows(), a.cols()) + " * " + std::to_string(x.size()));
  }
  return a * x;
}

inline Matrix transpose(const Matrix& a) { return a.transpose(); }

inline Matrix scale(const Matrix& a, double factor) { return a * factor; }

inline Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "add " + shape_str(a.rows(), a.cols()) + " + " + shape_str(b.rows(), b.cols()));
  }
  return a + b;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "subtract " + shape_str(a.rows(), a.cols()) + " - " + shape_str(b.rows(), b.cols()));
  }
  return a - b;
}

// ---------------------------------------------------------------------------
// Ridge regression.

/// Minimizer of (1/n)·‖y − Xw‖² + λ·‖w‖², with n = X.rows().
///
/// λ > 0 solves (XᵀX + nλI) w = Xᵀy by Cholesky. λ = 0 solves the least-squares
/// problem by column-pivoted QR on X and throws SingularSystem when the
/// estimated condition number of XᵀX exceeds kSingularConditionLimit.
inline Vector ridge_solve(const Matrix& X, const Vector& y, double lambda) {
  if (X.rows() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "ridge_solve: X is " + shape_str(X.rows(), X.cols()) + " but y has " +
                    std::to_string(y.size()) + " entries");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidSpec, "ridge_solve: lambda must be finite and >= 0");
  }
  require_finite(X, "ridge_solve: X");
  require_finite(y, "ridge_solve: y");

  const auto n = X.rows();
  const auto dim = X.cols();
  if (dim == 0) return Vector(0);
  if (n == 0) {
    throw Error(ErrorKind::SingularSystem, "ridge_solve: no rows");
  }

  if (lambda > 0.0) {
    Matrix gram = X.transpose() * X;
    gram.diagonal().array() += static_cast<double>(n) * lambda;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::SingularSystem, "ridge_solve: Cholesky factorization failed");
    }
    return llt.solve(X.transpose() * y);
  }

  if (n < dim) {
    throw Error(ErrorKind::SingularSystem,
                "ridge_solve: " + std::to_string(n) + " rows cannot determine " +
                    std::to_string(dim) + " unregularized weights");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  const auto& r = qr.matrixQR();
  const double largest = std::abs(r(0, 0));
  const double smallest = std::abs(r(dim - 1, dim - 1));
  if (smallest == 0.0 || (largest / smallest) * (largest / smallest) > kSingularConditionLimit) {
    throw Error(ErrorKind::SingularSystem,
                "ridge_solve: XᵀX condition estimate exceeds 1e12 with lambda = 0");
  }
  return qr.solve(y);
}

/// Gradient of the ridge loss used by ridge_solve, evaluated at w.
inline Vector ridge_gradient(const Matrix& X, const Vector& y, double lambda, const Vector& w) {
  const double n = static_cast<double>(X.rows());
  return (2.0 / n) * (X.transpose() * (X * w - y)) + 2.0 * lambda * w;
}

inline double ridge_loss(const Matrix& X, const Vector& y, double lambda, const Vector& w) {
  const double n = static_cast<double>(X.rows());
  return (y - X * w).squaredNorm() / n + lambda * w.squaredNorm();
}

// ---------------------------------------------------------------------------
// Exact rank of 0/1 matrices.

namespace detail {

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

inline std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(prod & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
  std::uint64_t sum = lo + hi;
  if (sum >= kMersenne61) sum -= kMersenne61;
  return sum;
}

inline std::uint64_t powmod61(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t result = 1;
  while (exp != 0) {
    if (exp & 1U) result = mulmod61(result, base);
    base = mulmod61(base, base);
    exp >>= 1U;
  }
  return result;
}

// Rank over GF(2^61 - 1). Never exceeds the rank over the rationals.
inline std::size_t modular_rank(const IntMatrix& g) {
  const auto rows = static_cast<std::size_t>(g.rows());
  const auto cols = static_cast<std::size_t>(g.cols());
  std::vector<std::vector<std::uint64_t>> m(rows, std::vector<std::uint64_t>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = static_cast<std::uint64_t>(g(i, j));

  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t pivot = rank;
    while (pivot < rows && m[pivot][c] == 0) ++pivot;
    if (pivot == rows) continue;
    std::swap(m[pivot], m[rank]);
    const std::uint64_t inv = powmod61(m[rank][c], kMersenne61 - 2);
    for (std::size_t i = rank + 1; i < rows; ++i) {
      if (m[i][c] == 0) continue;
      const std::uint64_t factor = mulmod61(m[i][c], inv);
      for (std::size_t j = c; j < cols; ++j) {
        const std::uint64_t sub = mulmod61(factor, m[rank][j]);
        m[i][j] = m[i][j] >= sub ? m[i][j] - sub : m[i][j] + kMersenne61 - sub;
      }
    }
    ++rank;
  }
  return rank;
}

inline bool checked_mul_sub_div(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d,
                                std::int64_t divisor, std::int64_t& out) {
  std::int64_t ab = 0;
  std::int64_t cd = 0;
  std::int64_t diff = 0;
  if (__builtin_mul_overflow(a, b, &ab) || __builtin_mul_overflow(c, d, &cd) ||
      __builtin_sub_overflow(ab, cd, &diff)) {
    return false;
  }
  out = diff / divisor;
  return true;
}

// Fraction-free (Bareiss) elimination. Every intermediate entry is a minor of
// the input, so each division is exact. Returns nullopt on int64 overflow.
template <typename Int>
std::optional<std::size_t> bareiss_rank(const IntMatrix& g) {
  const auto rows = static_cast<std::size_t>(g.rows());
  const auto cols = static_cast<std::size_t>(g.cols());
  std::vector<std::vector<Int>> m(rows, std::vector<Int>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = g(i, j);

  Int prev = 1;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t pivot = rank;
    while (pivot < rows && m[pivot][c] == 0) ++pivot;
    if (pivot == rows) continue;
    std::swap(m[pivot], m[rank]);
    for (std::size_t i = rank + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        if constexpr (std::is_same_v<Int, std::int64_t>) {
          if (!checked_mul_sub_div(m[rank][c], m[i][j], m[i][c], m[rank][j], prev, m[i][j])) {
            return std::nullopt;
          }
        } else {
          m[i][j] = (m[rank][c] * m[i][j] - m[i][c] * m[rank][j]) / prev;
        }
      }
      m[i][c] = 0;
    }
    prev = m[rank][c];
    ++rank;
  }
  return rank;
}

}  // namespace detail

/// Rank over the rationals of a 0/1 matrix, computed without floating point.
///
/// A full rank found modulo the prime 2^61 − 1 is already exact (modular rank
/// never exceeds rational rank). Otherwise Bareiss elimination decides, first
/// in int64 and in arbitrary precision if an intermediate minor overflows.
inline std::size_t binary_rank(const IntMatrix& g) {
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (g(i, j) != 0 && g(i, j) != 1) {
        throw Error(ErrorKind::InvalidSpec, "binary_rank: entry (" + std::to_string(i) + "," +
                                                std::to_string(j) + ") is not 0/1");
      }
    }
  }
  if (g.size() == 0) return 0;
  const auto full = static_cast<std::size_t>(std::min(g.rows(), g.cols()));
  if (detail::modular_rank(g) == full) return full;
  if (auto rank = detail::bareiss_rank<std::int64_t>(g)) return *rank;
  return *detail::bareiss_rank<boost::multiprecision::cpp_int>(g);
}

}  // namespace codedml
