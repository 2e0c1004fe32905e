#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cstdint>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "codedml/coding.hpp"
#include "codedml/dataset.hpp"
#include "codedml/ensemble.hpp"
#include "codedml/error.hpp"
#include "codedml/projections.hpp"

namespace codedml {

namespace fs = std::filesystem;

// Session directory:
//   manifest.json        config echo, layout, normalization, per-file hashes
//   generator.json       the s × r generator matrix
//   projection.bin       random feature map (only when D > 0)
//   shards/shard_<j>.csv current coded shard j (mapped features, then y)
//   model.csv            D' × r learner weights
//   train.csv            retained raw training rows with their ids
//   unlearn_log.jsonl    one line per unlearn call

namespace detail {

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << bytes;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string matrix_csv(const std::vector<std::string>& header, const Matrix& m) {
  std::ostringstream out;
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
  return out.str();
}

inline Matrix parse_matrix_csv(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, name + ": missing header");
  const auto cols = split_commas(line).size();
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != cols) throw Error(ErrorKind::ParseError, name + ": ragged row");
    for (auto cell : cells) {
      auto v = parse_double(cell);
      if (!v) throw Error(ErrorKind::ParseError, name + ": '" + std::string(cell) + "' is not a finite number");
      values.push_back(*v);
    }
    ++rows;
  }
  return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

inline std::string dataset_csv(const Dataset& ds) {
  std::ostringstream out;
  out << "id";
  for (const auto& name : ds.feature_names) out << ',' << name;
  out << ',' << ds.response_name << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out << ds.ids[i];
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) out << ',' << format_double(ds.features(row, j));
    out << ',' << format_double(ds.response(row)) << '\n';
  }
  return out.str();
}

}  // namespace detail

/// Exclusive ownership of a session directory for one process, via a lock
/// file created with O_EXCL.
class SessionLock {
 public:
  explicit SessionLock(const fs::path& dir) : path_(dir / ".lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) throw Error(ErrorKind::SessionLocked, "session " + dir.string() + " is in use (remove " + path_.string() + " if stale)");
    const auto pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto written = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~SessionLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  SessionLock(const SessionLock&) = delete;
  SessionLock& operator=(const SessionLock&) = delete;

 private:
  fs::path path_;
};

/// Everything needed to predict, unlearn and verify after training.
struct Session {
  nlohmann::json config;            // resolved training configuration
  NormalizationRecord normalization;
  Dataset train;                    // retained raw training rows
  EnsembleModel model;
  CodedStore store;

  /// Retained training rows in the units the learners were trained in.
  Dataset normalized_train() const { return normalization.apply(train); }
};

namespace detail {

inline std::vector<std::string> artifact_names(const Session& session) {
  std::vector<std::string> names = {"generator.json", "model.csv", "train.csv", "unlearn_log.jsonl"};
  if (session.model.features.projection) names.push_back("projection.bin");
  for (std::size_t j = 0; j < session.store.generator().r(); ++j) names.push_back("shards/shard_" + std::to_string(j) + ".csv");
  return names;
}

}  // namespace detail

/// Writes all artifacts, then the manifest with their hashes.
inline void save_session(const Session& session, const fs::path& dir) {
  fs::create_directories(dir / "shards");
  const auto& model = session.model;
  const auto& store = session.store;

  detail::write_file(dir / "generator.json", nlohmann::json(store.generator()).dump(2) + "\n");
  if (model.features.projection) save_projection(*model.features.projection, (dir / "projection.bin").string());

  std::vector<std::string> shard_header;
  for (std::size_t c = 0; c < store.feature_dim(); ++c) shard_header.push_back("f" + std::to_string(c));
  shard_header.push_back("y");
  for (std::size_t j = 0; j < store.generator().r(); ++j) {
    const auto& shard = store.shard(j);
    Matrix joined(shard.features.rows(), shard.features.cols() + 1);
    joined << shard.features, shard.response;
    detail::write_file(dir / "shards" / ("shard_" + std::to_string(j) + ".csv"), detail::matrix_csv(shard_header, joined));
  }

  std::vector<std::string> model_header;
  for (std::size_t j = 0; j < model.learners(); ++j) model_header.push_back("w" + std::to_string(j));
  detail::write_file(dir / "model.csv", detail::matrix_csv(model_header, model.weights));
  detail::write_file(dir / "train.csv", detail::dataset_csv(session.train));
  if (!fs::exists(dir / "unlearn_log.jsonl")) detail::write_file(dir / "unlearn_log.jsonl", "");

  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& name : detail::artifact_names(session)) hashes[name] = detail::hex64(detail::fnv1a(detail::read_file(dir / name)));

  nlohmann::json manifest{
      {"format", "codedml-session-1"},
      {"config", session.config},
      {"lambda", model.lambda},
      {"s", store.generator().s()},
      {"r", store.generator().r()},
      {"feature_dim", store.feature_dim()},
      {"projection", model.features.projection.has_value()},
      {"intercept", model.features.intercept},
      {"normalization", session.normalization},
      {"feature_names", session.train.feature_names},
      {"response_name", session.train.response_name},
      {"shard_size", store.shard_size()},
      {"members", store.members()},
      {"dropped", store.dropped_ids()},
      {"unlearned", store.unlearned_ids()},
      {"hashes", hashes}};
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline Session load_session(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "manifest.json")) {
    throw Error(ErrorKind::SessionNotFound, "no session at " + dir.string() + " (manifest.json missing)");
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(detail::read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, "manifest.json: " + std::string(e.what()));
  }

  for (const auto& [name, expected] : manifest.at("hashes").items()) {
    if (!fs::exists(dir / name)) throw Error(ErrorKind::StaleSession, "session artifact " + name + " is missing");
    const auto actual = detail::hex64(detail::fnv1a(detail::read_file(dir / name)));
    if (actual != expected.get<std::string>()) {
      throw Error(ErrorKind::StaleSession, "session artifact " + name + " does not match the manifest hash");
    }
  }

  auto generator = generator_from_json(nlohmann::json::parse(detail::read_file(dir / "generator.json")));
  const auto r = generator.r();
  const auto dim = manifest.at("feature_dim").get<std::size_t>();

  std::vector<CodedShard> shards;
  for (std::size_t j = 0; j < r; ++j) {
    const auto name = "shards/shard_" + std::to_string(j) + ".csv";
    const Matrix joined = detail::parse_matrix_csv(detail::read_file(dir / name), name);
    if (static_cast<std::size_t>(joined.cols()) != dim + 1) throw Error(ErrorKind::StaleSession, name + ": wrong width");
    shards.push_back({joined.leftCols(static_cast<Eigen::Index>(dim)), joined.col(static_cast<Eigen::Index>(dim))});
  }

  Session session{manifest.at("config"), manifest.at("normalization").get<NormalizationRecord>(), Dataset{},
                  EnsembleModel{},
                  CodedStore(std::move(generator), std::move(shards),
                             manifest.at("members").get<std::vector<std::vector<SampleId>>>(),
                             manifest.at("dropped").get<std::vector<SampleId>>(),
                             manifest.at("unlearned").get<std::set<SampleId>>())};

  auto& model = session.model;
  model.lambda = manifest.at("lambda").get<double>();
  model.features.intercept = manifest.at("intercept").get<bool>();
  if (manifest.at("projection").get<bool>()) model.features.projection = load_projection((dir / "projection.bin").string());
  model.weights = detail::parse_matrix_csv(detail::read_file(dir / "model.csv"), "model.csv");
  if (static_cast<std::size_t>(model.weights.rows()) != dim || model.learners() != r) {
    throw Error(ErrorKind::StaleSession, "model.csv shape disagrees with the manifest");
  }
  model.recompute_aggregate();

  auto train = load_csv((dir / "train.csv").string(), ColumnRef(manifest.at("response_name").get<std::string>()),
                        std::string("id"));
  session.train = std::move(train);
  return session;
}

/// Rows of `path` restricted to the named feature columns, in that order.
/// The response column is returned as well when the file has it.
struct FeatureRows {
  Matrix features;
  std::optional<Vector> response;
};

inline FeatureRows load_feature_rows(const std::string& path, const std::vector<std::string>& names,
                                     const std::string& response_name) {
  const auto text = detail::read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, path + ": missing header row");
  std::vector<std::string> header;
  for (auto cell : detail::split_commas(line)) header.emplace_back(cell);
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    auto at = resolve_column(ColumnRef(name), header);
    if (!at) throw Error(ErrorKind::MissingColumn, path + ": feature column '" + name + "' not found");
    cols.push_back(*at);
  }
  const auto response_col = resolve_column(ColumnRef(response_name), header);
  const bool has_response = response_col && std::find(header.begin(), header.end(), response_name) != header.end();

  const Matrix all = detail::parse_matrix_csv(text, path);
  FeatureRows rows;
  rows.features.resize(all.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    rows.features.col(static_cast<Eigen::Index>(k)) = all.col(static_cast<Eigen::Index>(cols[k]));
  if (has_response) rows.response = all.col(static_cast<Eigen::Index>(*response_col));
  return rows;
}

/// Appends one audit line and re-hashes the session.
inline void record_unlearn(const fs::path& dir, const Session& session, const AffectedReport& report) {
  nlohmann::json line{{"ids", report.ids},
                      {"affected", report.affected},
                      {"retrain_seconds", report.total_retrain_seconds},
                      {"active_remaining", session.store.active_count()}};
  std::ofstream log(dir / "unlearn_log.jsonl", std::ios::app);
  if (!log) throw Error(ErrorKind::Io, "cannot append to unlearn_log.jsonl");
  log << line.dump() << '\n';
  log.close();
  save_session(session, dir);
}

}  // namespace codedml
