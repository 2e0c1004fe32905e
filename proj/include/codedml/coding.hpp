#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "codedml/dataset.hpp"
#include "codedml/error.hpp"
#include "codedml/numerics.hpp"

namespace codedml {

enum class DensityMode { Bernoulli, Minimal };

NLOHMANN_JSON_SERIALIZE_ENUM(DensityMode, {
                                              {DensityMode::Bernoulli, "bernoulli"},
                                              {DensityMode::Minimal, "minimal"},
                                          })

inline std::string to_string(DensityMode mode) { return mode == DensityMode::Minimal ? "minimal" : "bernoulli"; }

inline DensityMode parse_density_mode(const std::string& text) {
  if (text == "minimal") return DensityMode::Minimal;
  if (text == "bernoulli") return DensityMode::Bernoulli;
  throw Error(ErrorKind::InvalidSpec, "unknown density mode '" + text + "' (expected minimal|bernoulli)");
}

/// Upper bound on whole-matrix resamples before a generator gives up.
inline constexpr std::size_t kMaxResamples = 1'000'000;

/// s × r binary code matrix mapping uncoded shards (rows) to coded shards
/// (columns). Construction enforces r ≤ s, binary entries, no all-zero row
/// and full column rank.
class GeneratorMatrix {
 public:
  GeneratorMatrix(IntMatrix entries, double rho, std::uint64_t seed, DensityMode mode)
      : entries_(std::move(entries)), rho_(rho), seed_(seed), mode_(mode) {
    if (entries_.rows() < 1 || entries_.cols() < 1 || entries_.cols() > entries_.rows()) {
      throw Error(ErrorKind::InvalidSpec, "generator: need 1 <= r <= s, got " +
                                              shape_str(entries_.rows(), entries_.cols()));
    }
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
      bool nonzero = false;
      for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
        if (entries_(i, j) != 0 && entries_(i, j) != 1) throw Error(ErrorKind::InvalidSpec, "generator: non-binary entry");
        nonzero = nonzero || entries_(i, j) == 1;
      }
      if (!nonzero) throw Error(ErrorKind::InvalidSpec, "generator: row " + std::to_string(i) + " is all zero");
    }
    if (binary_rank(entries_) != static_cast<std::size_t>(entries_.cols())) {
      throw Error(ErrorKind::InvalidSpec, "generator: not full column rank");
    }
  }

  /// The uncoded single-learner code G = [1].
  static GeneratorMatrix single() { return GeneratorMatrix(IntMatrix::Ones(1, 1), 1.0, 0, DensityMode::Minimal); }

  std::size_t s() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t r() const { return static_cast<std::size_t>(entries_.cols()); }
  double rho() const { return rho_; }
  std::uint64_t seed() const { return seed_; }
  DensityMode mode() const { return mode_; }
  const IntMatrix& entries() const { return entries_; }
  int operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  /// Coded shards that uncoded shard `i` contributes to, ascending.
  std::vector<std::size_t> row_support(std::size_t i) const {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < r(); ++j)
      if ((*this)(i, j) != 0) cols.push_back(j);
    return cols;
  }

  std::size_t row_weight(std::size_t i) const { return row_support(i).size(); }

  double density() const { return static_cast<double>(entries_.sum()) / static_cast<double>(entries_.size()); }

  bool operator==(const GeneratorMatrix& other) const {
    return entries_ == other.entries_ && rho_ == other.rho_ && seed_ == other.seed_ && mode_ == other.mode_;
  }

 private:
  IntMatrix entries_;
  double rho_;
  std::uint64_t seed_;
  DensityMode mode_;
};

inline void to_json(nlohmann::json& j, const GeneratorMatrix& g) {
  std::vector<std::vector<int>> rows(g.s(), std::vector<int>(g.r()));
  for (std::size_t i = 0; i < g.s(); ++i)
    for (std::size_t c = 0; c < g.r(); ++c) rows[i][c] = g(i, c);
  j = nlohmann::json{{"s", g.s()}, {"r", g.r()}, {"rho", g.rho()}, {"seed", g.seed()}, {"mode", g.mode()}, {"rows", rows}};
}

inline GeneratorMatrix generator_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<std::vector<std::vector<int>>>();
  const auto s = j.at("s").get<std::size_t>();
  const auto r = j.at("r").get<std::size_t>();
  if (rows.size() != s) throw Error(ErrorKind::ParseError, "generator json: row count differs from s");
  IntMatrix entries(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < s; ++i) {
    if (rows[i].size() != r) throw Error(ErrorKind::ParseError, "generator json: row width differs from r");
    for (std::size_t c = 0; c < r; ++c) entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  }
  return GeneratorMatrix(std::move(entries), j.at("rho").get<double>(), j.at("seed").get<std::uint64_t>(),
                         parse_density_mode(j.value("mode", std::string("bernoulli"))));
}

namespace detail {

inline bool has_zero_row(const IntMatrix& g) {
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    if ((g.row(i).array() == 0).all()) return true;
  return false;
}

inline void check_code_shape(std::size_t s, std::size_t r) {
  if (r < 1 || r > s) {
    throw Error(ErrorKind::InvalidSpec, "code: need 1 <= r <= s, got s=" + std::to_string(s) + " r=" + std::to_string(r));
  }
}

}  // namespace detail

/// Random binary generator with i.i.d. Bernoulli(rho) entries. The whole
/// matrix is redrawn until it has no all-zero row, and that draw is repeated
/// until the matrix has full column rank. Requires 1/r ≤ rho ≤ 1, except
/// that s = 1 yields [1] for any rho in (0, 1].
inline GeneratorMatrix rand_matrix(std::size_t s, std::size_t r, double rho, std::uint64_t seed) {
  detail::check_code_shape(s, r);
  if (s == 1 && rho > 0.0 && rho <= 1.0) return GeneratorMatrix(IntMatrix::Ones(1, 1), rho, seed, DensityMode::Bernoulli);
  const double min_rho = 1.0 / static_cast<double>(r);
  if (!(rho >= min_rho * (1.0 - 1e-12) && rho <= 1.0)) {
    throw Error(ErrorKind::DensityOutOfRange,
                "rho=" + detail::format_double(rho) + " outside [1/r, 1] for r=" + std::to_string(r));
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(std::min(rho, 1.0));
  IntMatrix g(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(r));
  std::size_t draws = 0;
  do {
    g.setZero();
    do {
      if (++draws > kMaxResamples) {
        throw Error(ErrorKind::NonTermination, "rand_matrix(s=" + std::to_string(s) + ", r=" + std::to_string(r) +
                                                   ", rho=" + detail::format_double(rho) +
                                                   ") found no valid matrix in " + std::to_string(kMaxResamples) +
                                                   " draws");
      }
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = coin(rng) ? 1 : 0;
    } while (detail::has_zero_row(g));
  } while (binary_rank(g) != r);
  return GeneratorMatrix(std::move(g), rho, seed, DensityMode::Bernoulli);
}

/// Minimum-density generator: one 1 per row in a uniformly chosen column,
/// conditioned on every column being used (equivalent to full column rank).
/// Rows are drawn sequentially with the exact conditional probabilities, so
/// the result has the distribution of resampling until all columns are hit
/// without ever resampling.
inline GeneratorMatrix rand_matrix_minimal(std::size_t s, std::size_t r, std::uint64_t seed) {
  detail::check_code_shape(s, r);
  // cover[m][u]: probability that m more uniform rows hit all r - u unused columns.
  std::vector<std::vector<long double>> cover(s + 1, std::vector<long double>(r + 1, 0.0L));
  cover[0][r] = 1.0L;
  const auto cols = static_cast<long double>(r);
  for (std::size_t m = 1; m <= s; ++m)
    for (std::size_t u = 0; u <= r; ++u)
      cover[m][u] = (static_cast<long double>(u) / cols) * cover[m - 1][u] +
                    (u < r ? (static_cast<long double>(r - u) / cols) * cover[m - 1][u + 1] : 0.0L);
  if (!(cover[s][0] > 0.0L)) {
    throw Error(ErrorKind::NonTermination, "rand_matrix_minimal: covering probability underflows for s=" +
                                               std::to_string(s) + ", r=" + std::to_string(r));
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<long double> unit(0.0L, 1.0L);
  std::vector<std::size_t> order(r);  // order[0..used) are the columns hit so far
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t used = 0;
  IntMatrix g = IntMatrix::Zero(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t left = s - i - 1;
    const long double fresh = used < r ? (static_cast<long double>(r - used) / cols) * cover[left][used + 1] : 0.0L;
    std::size_t col;
    if (unit(rng) * cover[left + 1][used] < fresh) {
      const auto k = std::uniform_int_distribution<std::size_t>(used, r - 1)(rng);
      std::swap(order[used], order[k]);
      col = order[used++];
    } else {
      col = order[std::uniform_int_distribution<std::size_t>(0, used - 1)(rng)];
    }
    g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) = 1;
  }
  return GeneratorMatrix(std::move(g), 1.0 / static_cast<double>(r), seed, DensityMode::Minimal);
}

/// Code rate τ = s/r as a reduced fraction.
struct Rate {
  std::size_t num = 1;
  std::size_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rate&) const = default;
};

inline Rate rate(const GeneratorMatrix& g) {
  const auto div = std::gcd(g.s(), g.r());
  return {g.s() / div, g.r() / div};
}

// ---------------------------------------------------------------------------
// Coded store

struct CodedShard {
  Matrix features;  // n̄ × D'
  Vector response;  // n̄
};

/// Position of an uncoded sample: uncoded shard and row within it.
struct ShardSlot {
  std::size_t shard = 0;
  std::size_t row = 0;
};

/// Staged result of subtracting samples from the coded shards; nothing in
/// the store changes until CodedStore::commit.
struct RemovalPlan {
  std::vector<SampleId> ids;
  std::vector<std::size_t> affected;           // unique coded shard indices, ascending
  std::map<std::size_t, CodedShard> updated;   // new contents of each affected shard
};

/// The r coded shards plus the bookkeeping needed to locate any uncoded
/// sample: coded shard j row i' always equals Σ_{s'} g_{s'j} · (sample at
/// uncoded slot (s', i')) over samples not yet unlearned.
class CodedStore {
 public:
  CodedStore(GeneratorMatrix generator, std::vector<CodedShard> shards,
             std::vector<std::vector<SampleId>> members, std::vector<SampleId> dropped,
             std::set<SampleId> unlearned = {})
      : generator_(std::move(generator)),
        shards_(std::move(shards)),
        members_(std::move(members)),
        dropped_(std::move(dropped)),
        unlearned_(std::move(unlearned)) {
    if (shards_.size() != generator_.r() || members_.size() != generator_.s()) {
      throw Error(ErrorKind::DimensionMismatch, "coded store: shard or member count disagrees with generator");
    }
    shard_size_ = members_.front().size();
    for (const auto& shard : shards_) {
      if (static_cast<std::size_t>(shard.features.rows()) != shard_size_ ||
          static_cast<std::size_t>(shard.response.size()) != shard_size_ ||
          shard.features.cols() != shards_.front().features.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "coded store: shards must all be n̄ × D'");
      }
    }
    for (std::size_t s = 0; s < members_.size(); ++s) {
      if (members_[s].size() != shard_size_) throw Error(ErrorKind::DimensionMismatch, "coded store: ragged shards");
      for (std::size_t i = 0; i < shard_size_; ++i) {
        if (!slots_.emplace(members_[s][i], ShardSlot{s, i}).second) {
          throw Error(ErrorKind::InvalidSpec, "coded store: sample id " + std::to_string(members_[s][i]) + " repeated");
        }
      }
    }
    for (auto id : dropped_) {
      if (slots_.contains(id) || !dropped_set_.insert(id).second) {
        throw Error(ErrorKind::InvalidSpec, "coded store: dropped id " + std::to_string(id) + " repeated");
      }
    }
    for (auto id : unlearned_) {
      if (!slots_.contains(id) && !dropped_set_.contains(id)) {
        throw Error(ErrorKind::InvalidSpec, "coded store: unlearned id is not a member");
      }
    }
  }

  const GeneratorMatrix& generator() const { return generator_; }
  const std::vector<CodedShard>& shards() const { return shards_; }
  const CodedShard& shard(std::size_t j) const { return shards_.at(j); }
  std::size_t shard_size() const { return shard_size_; }
  std::size_t feature_dim() const { return static_cast<std::size_t>(shards_.front().features.cols()); }
  const std::vector<std::vector<SampleId>>& members() const { return members_; }
  const std::vector<SampleId>& dropped_ids() const { return dropped_; }
  const std::set<SampleId>& unlearned_ids() const { return unlearned_; }

  std::optional<ShardSlot> slot_of(SampleId id) const {
    auto it = slots_.find(id);
    if (it == slots_.end()) return std::nullopt;
    return it->second;
  }

  bool is_active(SampleId id) const { return slots_.contains(id) && !unlearned_.contains(id); }

  /// Number of training samples still represented in the coded shards.
  std::size_t active_count() const {
    std::size_t gone = 0;
    for (auto id : unlearned_) gone += slots_.contains(id) ? 1 : 0;
    return slots_.size() - gone;
  }

  /// Subtracts each sample's mapped row from every coded shard it feeds,
  /// in request order, on copies of the affected shards. Dropped samples
  /// feed no shard and are only recorded.
  RemovalPlan plan_removal(std::span<const SampleId> ids, const Matrix& rows, const Vector& responses) const {
    if (static_cast<std::size_t>(rows.rows()) != ids.size() || static_cast<std::size_t>(responses.size()) != ids.size()) {
      throw Error(ErrorKind::DimensionMismatch, "removal: one mapped row and response per id required");
    }
    if (rows.cols() != static_cast<Eigen::Index>(feature_dim())) {
      throw Error(ErrorKind::DimensionMismatch, "removal: mapped rows have " + std::to_string(rows.cols()) +
                                                    " columns, shards have " + std::to_string(feature_dim()));
    }
    std::set<SampleId> seen;
    for (auto id : ids) {
      if (!slots_.contains(id) && !dropped_set_.contains(id)) throw Error(ErrorKind::UnknownSample, "sample " + std::to_string(id) + " is not in the coded store");
      if (unlearned_.contains(id) || !seen.insert(id).second) {
        throw Error(ErrorKind::AlreadyUnlearned, "sample " + std::to_string(id) + " was already unlearned");
      }
    }
    RemovalPlan plan;
    plan.ids.assign(ids.begin(), ids.end());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto found = slots_.find(ids[k]);
      if (found == slots_.end()) continue;
      const auto slot = found->second;
      for (auto j : generator_.row_support(slot.shard)) {
        auto [it, inserted] = plan.updated.try_emplace(j, shards_[j]);
        const double g = generator_(slot.shard, j);
        const auto row = static_cast<Eigen::Index>(slot.row);
        it->second.features.row(row) -= g * rows.row(static_cast<Eigen::Index>(k));
        it->second.response(row) -= g * responses(static_cast<Eigen::Index>(k));
      }
    }
    for (const auto& entry : plan.updated) plan.affected.push_back(entry.first);
    return plan;
  }

  void commit(RemovalPlan&& plan) {
    for (auto& [j, shard] : plan.updated) shards_[j] = std::move(shard);
    unlearned_.insert(plan.ids.begin(), plan.ids.end());
  }

 private:
  GeneratorMatrix generator_;
  std::vector<CodedShard> shards_;
  std::vector<std::vector<SampleId>> members_;
  std::vector<SampleId> dropped_;
  std::set<SampleId> unlearned_;
  std::unordered_map<SampleId, ShardSlot> slots_;
  std::set<SampleId> dropped_set_;
  std::size_t shard_size_ = 0;
};

/// Splits the rows (in current order) into s contiguous shards of n̄ = ⌊n/s⌋
/// rows, drops the n mod s trailing rows, and forms coded shard
/// j = Σᵢ gᵢⱼ · shardᵢ summing over i ascending.
inline CodedStore encode(const Matrix& features, const Vector& response, std::span<const SampleId> ids,
                         const GeneratorMatrix& generator) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (static_cast<std::size_t>(response.size()) != n || ids.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "encode: features, response and ids disagree in length");
  }
  const std::size_t s = generator.s();
  if (n < s) {
    throw Error(ErrorKind::TooFewSamples, "encode: " + std::to_string(n) + " samples cannot fill " + std::to_string(s) + " shards");
  }
  const std::size_t shard_rows = n / s;
  const auto nbar = static_cast<Eigen::Index>(shard_rows);

  std::vector<std::vector<SampleId>> members(s);
  for (std::size_t i = 0; i < s; ++i) members[i].assign(ids.begin() + static_cast<std::ptrdiff_t>(i * shard_rows),
                                                         ids.begin() + static_cast<std::ptrdiff_t>((i + 1) * shard_rows));
  std::vector<SampleId> dropped(ids.begin() + static_cast<std::ptrdiff_t>(s * shard_rows), ids.end());

  std::vector<CodedShard> shards(generator.r());
  for (std::size_t j = 0; j < generator.r(); ++j) {
    CodedShard coded{Matrix::Zero(nbar, features.cols()), Vector::Zero(nbar)};
    for (std::size_t i = 0; i < s; ++i) {
      const int g = generator(i, j);
      if (g == 0) continue;
      const auto first = static_cast<Eigen::Index>(i * shard_rows);
      coded.features += static_cast<double>(g) * features.middleRows(first, nbar);
      coded.response += static_cast<double>(g) * response.segment(first, nbar);
    }
    shards[j] = std::move(coded);
  }
  return CodedStore(generator, std::move(shards), std::move(members), std::move(dropped));
}

/// Coded shards recomputed from scratch for the store's layout, using only
/// the samples present in `row_of` (id → row of `features`/`response`).
/// Summation order matches encode, so an untouched store is reproduced bit
/// for bit.
inline std::vector<CodedShard> rebuild_coded_shards(const CodedStore& layout, const Matrix& features,
                                                    const Vector& response,
                                                    const std::unordered_map<SampleId, std::size_t>& row_of) {
  const auto& g = layout.generator();
  const auto nbar = static_cast<Eigen::Index>(layout.shard_size());
  std::vector<CodedShard> shards(g.r());
  for (std::size_t j = 0; j < g.r(); ++j) {
    CodedShard coded{Matrix::Zero(nbar, features.cols()), Vector::Zero(nbar)};
    for (Eigen::Index row = 0; row < nbar; ++row) {
      for (std::size_t i = 0; i < g.s(); ++i) {
        if (g(i, j) == 0) continue;
        auto it = row_of.find(layout.members()[i][static_cast<std::size_t>(row)]);
        if (it == row_of.end()) continue;
        const auto src = static_cast<Eigen::Index>(it->second);
        coded.features.row(row) += static_cast<double>(g(i, j)) * features.row(src);
        coded.response(row) += static_cast<double>(g(i, j)) * response(src);
      }
    }
    shards[j] = std::move(coded);
  }
  return shards;
}

}  // namespace codedml
