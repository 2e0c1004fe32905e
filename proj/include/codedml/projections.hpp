#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "codedml/error.hpp"
#include "codedml/numerics.hpp"

namespace codedml {

/// Data-independent random feature map x ↦ cos(xᵀθᵢ + bᵢ), i = 1..D, with
/// θᵢ ~ N(0, I/(2d)) and bᵢ ~ unif(−π, π). No 1/√D scaling is applied.
/// The map is frozen at creation and reused for training, prediction and
/// unlearning.
struct ProjectionMap {
  std::size_t input_dim = 0;   // d
  std::size_t output_dim = 0;  // D
  Matrix thetas;               // d × D, column i is θᵢ
  Vector biases;               // D
  std::uint64_t seed = 0;

  bool operator==(const ProjectionMap& other) const {
    return input_dim == other.input_dim && output_dim == other.output_dim && seed == other.seed &&
           thetas == other.thetas && biases == other.biases;
  }
};

inline ProjectionMap make_projection(std::size_t d, std::size_t D, std::uint64_t seed) {
  if (d < 1 || D < 1) throw Error(ErrorKind::InvalidSpec, "make_projection: d and D must be >= 1");
  ProjectionMap map;
  map.input_dim = d;
  map.output_dim = D;
  map.seed = seed;
  map.thetas.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(D));
  map.biases.resize(static_cast<Eigen::Index>(D));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(1.0 / (2.0 * static_cast<double>(d))));
  for (Eigen::Index i = 0; i < map.thetas.cols(); ++i)
    for (Eigen::Index k = 0; k < map.thetas.rows(); ++k) map.thetas(k, i) = normal(rng);

  std::uniform_real_distribution<double> uniform(-std::numbers::pi, std::numbers::pi);
  for (Eigen::Index i = 0; i < map.biases.size(); ++i) {
    double b = uniform(rng);
    while (b <= -std::numbers::pi || b >= std::numbers::pi) b = uniform(rng);
    map.biases(i) = b;
  }
  return map;
}

/// Entry (k, i) = cos(x_kᵀθᵢ + bᵢ). Each dot product is accumulated in input
/// order, so projecting rows one at a time matches the batch bit for bit.
inline Matrix project(const ProjectionMap& map, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != map.input_dim) {
    throw Error(ErrorKind::DimensionMismatch, "project: input has " + std::to_string(x.cols()) +
                                                  " columns, map expects " + std::to_string(map.input_dim));
  }
  const auto d = x.cols();
  Matrix out(x.rows(), static_cast<Eigen::Index>(map.output_dim));
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    for (Eigen::Index i = 0; i < out.cols(); ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) acc += x(k, j) * map.thetas(j, i);
      out(k, i) = std::cos(acc + map.biases(i));
    }
  }
  return out;
}

// Binary layout (little-endian host order):
//   "CMLPROJ1" | u64 seed | u64 d | u64 D | f64 thetas[d*D] (column-major) | f64 biases[D]
inline constexpr char kProjectionMagic[8] = {'C', 'M', 'L', 'P', 'R', 'O', 'J', '1'};

inline void save_projection(const ProjectionMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  const std::uint64_t header[3] = {map.seed, map.input_dim, map.output_dim};
  out.write(kProjectionMagic, sizeof kProjectionMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(map.thetas.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(map.thetas.size())));
  out.write(reinterpret_cast<const char*>(map.biases.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(map.biases.size())));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

inline ProjectionMap load_projection(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  char magic[sizeof kProjectionMagic];
  std::uint64_t header[3];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(magic, kProjectionMagic, sizeof magic) != 0) {
    throw Error(ErrorKind::ParseError, path + ": not a projection map file");
  }
  ProjectionMap map;
  map.seed = header[0];
  map.input_dim = header[1];
  map.output_dim = header[2];
  if (map.input_dim == 0 || map.output_dim == 0 || map.input_dim > (1U << 24) || map.output_dim > (1U << 24)) {
    throw Error(ErrorKind::ParseError, path + ": implausible projection dimensions");
  }
  map.thetas.resize(static_cast<Eigen::Index>(map.input_dim), static_cast<Eigen::Index>(map.output_dim));
  map.biases.resize(static_cast<Eigen::Index>(map.output_dim));
  in.read(reinterpret_cast<char*>(map.thetas.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(map.thetas.size())));
  in.read(reinterpret_cast<char*>(map.biases.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(map.biases.size())));
  if (!in) throw Error(ErrorKind::ParseError, path + ": truncated projection map");
  require_finite(map.thetas, "projection thetas");
  require_finite(map.biases, "projection biases");
  return map;
}

}  // namespace codedml
