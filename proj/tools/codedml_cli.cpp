// codedml: command-line front end for coded ensemble training, unlearning and
// the benchmark sweeps.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "codedml/bench.hpp"
#include "codedml/coding.hpp"
#include "codedml/dataset.hpp"
#include "codedml/ensemble.hpp"
#include "codedml/session.hpp"

namespace {

using namespace codedml;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitVerify = 4;

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  std::size_t threads = 1;
  std::string format = "csv";
};

/// Options of the chosen subcommand and the global ones, as resolved after
/// flags and config file have been merged.
json resolved_config(const CLI::App& app, const CLI::App& sub) {
  json cfg{{"command", sub.get_name()}};
  auto collect = [&cfg](const CLI::App& from) {
    for (const auto* opt : from.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      if (opt->get_type_size() == 0) {
        cfg[name] = opt->count() > 0;
      } else if (opt->count() > 0) {
        const auto& values = opt->results();
        cfg[name] = values.size() == 1 ? json(values.front()) : json(values);
      } else if (!opt->get_default_str().empty()) {
        cfg[name] = opt->get_default_str();
      }
    }
  };
  collect(app);
  collect(sub);
  return cfg;
}

/// Turns config-file entries into flags for every key not already given on
/// the command line; flags therefore override the file.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  std::string path;
  if (it != args.end() && std::next(it) != args.end()) {
    path = *std::next(it);
  } else {
    for (const auto& a : args)
      if (a.rfind("--config=", 0) == 0) path = a.substr(9);
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, "config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw Error(ErrorKind::ParseError, "config " + path + ": expected a JSON object");

  auto given = [&args](const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      args.push_back(joined);
    } else {
      args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return args;
}

json report_json(const AffectedReport& report) {
  return {{"ids", report.ids},
          {"affected", report.affected},
          {"affected_count", report.affected.size()},
          {"retrain_seconds", report.retrain_seconds},
          {"total_retrain_seconds", report.total_retrain_seconds}};
}

json verification_json(const VerificationReport& report) {
  auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json learners = json::array();
  for (double d : report.learner_discrepancy) learners.push_back(finite(d));
  return {{"passed", report.passed},
          {"tolerance", report.tolerance},
          {"max_discrepancy", finite(report.max_discrepancy)},
          {"aggregate_discrepancy", finite(report.aggregate_discrepancy)},
          {"max_shard_difference", report.max_shard_difference},
          {"learner_discrepancy", learners},
          {"failures", report.failures}};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::string kind = "gaussian-linear";
  std::size_t n = 1000;
  std::size_t d = 10;
  std::optional<double> mu, sigma2, dof;
  std::optional<int> degree;
  std::vector<int> hidden;
  bool expanded = false;
};

int cmd_gen_data(const Globals& g, const GenDataArgs& a, const json&) {
  if (g.out.empty()) throw CLI::RequiredError("--out");
  auto spec = SyntheticSpec::recipe(parse_synthetic_kind(a.kind), a.n, a.d, g.seed);
  if (a.mu) spec.mu = *a.mu;
  if (a.sigma2) spec.sigma2 = *a.sigma2;
  if (a.dof) spec.dof = *a.dof;
  if (a.degree) spec.degree = *a.degree;
  if (!a.hidden.empty()) spec.hidden = a.hidden;
  spec.expose_expanded = a.expanded;
  const auto ds = gen_synthetic(spec);
  write_csv(ds, g.out);
  write_text(g.out + ".spec.json", json(spec).dump(2) + "\n");
  std::cout << json{{"rows", ds.size()}, {"columns", ds.dim() + 1}, {"out", g.out}, {"spec", spec}}.dump() << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string data;
  std::string response = "y";
  std::string id_column;
  std::size_t s = 1;
  std::optional<std::size_t> r, tau;
  std::string density = "minimal";
  double rho = 1.0;
  double lambda = 0.0;
  std::size_t projection_dim = 0;
  bool intercept = false;
};

int cmd_train(const Globals& g, const TrainArgs& a, const json& config) {
  if (g.out.empty()) throw CLI::RequiredError("--out");
  if (a.r && a.tau) throw CLI::ValidationError("--r and --tau are mutually exclusive");
  std::size_t r = a.s;
  if (a.r) r = *a.r;
  if (a.tau) {
    if (*a.tau == 0 || a.s % *a.tau != 0) throw CLI::ValidationError("--tau must divide --s");
    r = a.s / *a.tau;
  }

  auto data = load_csv(a.data, ColumnRef(a.response),
                       a.id_column.empty() ? std::nullopt : std::optional<std::string>(a.id_column));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(g.seed, {1}));
  std::shuffle(order.begin(), order.end(), rng);
  const auto train = select_rows(data, order);
  const auto record = NormalizationRecord::fit(train);
  const auto normalized = record.apply(train);

  FeatureMap features;
  features.intercept = a.intercept;
  if (a.projection_dim > 0) features.projection = make_projection(train.dim(), a.projection_dim, derive_seed(g.seed, {2}));

  LearnConfig lc;
  lc.s = a.s;
  lc.r = r;
  lc.mode = parse_density_mode(a.density);
  lc.rho = lc.mode == DensityMode::Minimal ? 1.0 / static_cast<double>(r) : a.rho;
  lc.lambda = a.lambda;
  lc.seed = derive_seed(g.seed, {3});
  lc.threads = g.threads;
  auto learned = learn(normalized, lc, features);

  fs::create_directories(g.out);
  SessionLock lock(g.out);
  for (const auto& w : learned.warnings) std::cerr << "warning: " << w << '\n';
  Session session{config, record, train, std::move(learned.model), std::move(learned.store)};
  save_session(session, g.out);

  double learn_total = 0.0;
  for (double t : learned.learner_seconds) learn_total += t;
  const auto rt = rate(session.store.generator());
  std::cout << json{{"session", g.out},
                    {"s", lc.s},
                    {"r", r},
                    {"rate", std::to_string(rt.num) + "/" + std::to_string(rt.den)},
                    {"feature_dim", session.store.feature_dim()},
                    {"shard_size", session.store.shard_size()},
                    {"dropped", session.store.dropped_ids().size()},
                    {"learn_seconds", learn_total},
                    {"warnings", learned.warnings},
                    {"config", config}}
                   .dump()
            << '\n';
  return kExitOk;
}

struct PredictArgs {
  std::string session;
  std::string data;
};

int cmd_predict(const Globals& g, const PredictArgs& a, const json& config) {
  const auto session = load_session(a.session);
  const auto rows = load_feature_rows(a.data, session.train.feature_names, session.train.response_name);
  const Vector normalized = session.model.predict(session.normalization.apply_features(rows.features));
  Vector predictions(normalized.size());
  for (Eigen::Index i = 0; i < normalized.size(); ++i)
    predictions(i) = session.normalization.denormalize_response(normalized(i));

  std::optional<double> error;
  if (rows.response) error = mse(predictions, *rows.response);

  if (parse_output_format(g.format) == OutputFormat::Json) {
    json doc{{"config", config}, {"predictions", std::vector<double>(predictions.begin(), predictions.end())}};
    if (error) doc["mse"] = *error;
    write_text(g.out, doc.dump(2) + "\n");
  } else {
    std::string text = "prediction\n";
    for (Eigen::Index i = 0; i < predictions.size(); ++i) text += detail::format_double(predictions(i)) + "\n";
    write_text(g.out, text);
    if (!g.out.empty() && g.out != "-") write_text(g.out + ".config.json", config.dump(2) + "\n");
  }
  if (error) std::cerr << "mse " << detail::format_double(*error) << '\n';
  return kExitOk;
}

struct UnlearnArgs {
  std::string session;
  std::vector<SampleId> ids;
  std::string request;
};

/// Ids from a JSON list, or from a CSV with an `id` column whose rows must
/// equal the retained training rows.
std::vector<SampleId> request_ids(const std::string& path, const Session& session) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    try {
      return json::parse(in).get<std::vector<SampleId>>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, path + ": expected a JSON list of ids (" + e.what() + ")");
    }
  }
  const auto rows = load_csv(path, ColumnRef(session.train.response_name), std::string("id"));
  std::map<SampleId, std::size_t> row_of;
  for (std::size_t i = 0; i < session.train.size(); ++i) row_of.emplace(session.train.ids[i], i);
  if (rows.dim() != session.train.dim()) throw Error(ErrorKind::DimensionMismatch, path + ": feature count differs from training data");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto it = row_of.find(rows.ids[k]);
    if (it == row_of.end()) continue;  // reported as UnknownSample / AlreadyUnlearned below
    const auto i = static_cast<Eigen::Index>(it->second);
    const auto row = static_cast<Eigen::Index>(k);
    if (rows.features.row(row) != session.train.features.row(i) || rows.response(row) != session.train.response(i)) {
      throw Error(ErrorKind::DimensionMismatch, path + ": row for id " + std::to_string(rows.ids[k]) +
                                                    " does not match the retained training data");
    }
  }
  return rows.ids;
}

int cmd_unlearn(const Globals& g, const UnlearnArgs& a, const json&) {
  if (!fs::is_regular_file(fs::path(a.session) / "manifest.json")) {
    throw Error(ErrorKind::SessionNotFound, "no session at " + a.session);
  }
  SessionLock lock(a.session);
  auto session = load_session(a.session);
  auto ids = a.ids;
  if (!a.request.empty()) {
    const auto more = request_ids(a.request, session);
    ids.insert(ids.end(), more.begin(), more.end());
  }
  if (ids.empty()) throw CLI::ValidationError("nothing to unlearn: give --ids or --request");

  for (auto id : ids) {
    if (session.store.unlearned_ids().contains(id)) {
      throw Error(ErrorKind::AlreadyUnlearned, "sample " + std::to_string(id) + " was already unlearned");
    }
  }
  const auto normalized = session.normalized_train();
  const auto request = make_request(normalized, ids);
  const auto report = unlearn(session.model, session.store, request, g.threads);
  session.train = without_ids(session.train, ids);
  record_unlearn(a.session, session, report);
  write_text(g.out, report_json(report).dump() + "\n");
  return kExitOk;
}

struct VerifyArgs {
  std::string session;
  double tolerance = kPerfectUnlearningTolerance;
};

int cmd_verify(const Globals& g, const VerifyArgs& a, const json&) {
  const auto session = load_session(a.session);
  const auto report = verify_perfect_unlearning(session.model, session.store, session.normalized_train(), a.tolerance);
  auto doc = verification_json(report);
  doc["unlearned"] = session.store.unlearned_ids().size();
  write_text(g.out, doc.dump() + "\n");
  return report.passed ? kExitOk : kExitVerify;
}

struct BenchArgs {
  std::string spec;
  std::optional<std::size_t> runs;
};

template <typename Spec>
Spec read_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    return json::parse(in).get<Spec>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidSpec, path + ": " + e.what());
  }
}

int cmd_bench_tradeoff(const Globals& g, const BenchArgs& a, const CLI::App& app, const json& config) {
  if (g.out.empty()) throw CLI::RequiredError("--out");
  auto spec = read_spec<SweepSpec>(a.spec);
  if (app.count("--seed")) spec.seed = g.seed;
  if (app.count("--threads")) spec.threads = g.threads;
  if (a.runs) spec.runs = *a.runs;
  const auto records = run_tradeoff(spec);
  emit_results(records, g.out, parse_output_format(g.format), json{{"cli", config}, {"sweep", spec}});
  std::size_t failed = 0;
  for (const auto& rec : records) {
    if (!rec.error.empty()) {
      ++failed;
      std::cerr << "cell s=" << rec.s << " tau=" << rec.tau << " lambda=" << rec.lambda << ": " << rec.error << '\n';
    }
  }
  std::cout << json{{"records", records.size()}, {"failed_cells", failed}, {"out", g.out}}.dump() << '\n';
  return kExitOk;
}

int cmd_bench_influence(const Globals& g, const BenchArgs& a, const CLI::App& app, const json& config) {
  if (g.out.empty()) throw CLI::RequiredError("--out");
  auto spec = read_spec<InfluenceSpec>(a.spec);
  if (app.count("--seed")) spec.seed = g.seed;
  if (a.runs) spec.runs = *a.runs;
  const auto records = run_influence(spec);
  emit_results(records, g.out, parse_output_format(g.format), json{{"cli", config}, {"influence", spec}});
  std::cout << json{{"records", records.size()}, {"out", g.out}}.dump() << '\n';
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec:
    case ErrorKind::DensityOutOfRange:
      return kExitUsage;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coded machine unlearning for regression"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--config", g.config, "JSON file with option defaults; flags override it");
  app.add_option("--out", g.out, "Output file or session directory");
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str();
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset CSV and its spec sidecar");
  gen_cmd->add_option("--kind", gen.kind, "lognormal-poly | chisquare-poly | mlp | gaussian-linear")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Samples")->capture_default_str();
  gen_cmd->add_option("--d", gen.d, "Original features")->capture_default_str();
  gen_cmd->add_option("--mu", gen.mu);
  gen_cmd->add_option("--sigma2", gen.sigma2);
  gen_cmd->add_option("--dof", gen.dof);
  gen_cmd->add_option("--degree", gen.degree);
  gen_cmd->add_option("--hidden", gen.hidden)->delimiter(',');
  gen_cmd->add_flag("--expanded", gen.expanded, "Write the polynomial expansion as features");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Encode a training CSV and fit the weak learners into a session");
  train_cmd->add_option("--data", train.data)->required();
  train_cmd->add_option("--response", train.response, "Response column name or index")->capture_default_str();
  train_cmd->add_option("--id-column", train.id_column, "Column holding sample ids (default: row order)");
  train_cmd->add_option("--s", train.s, "Uncoded shards")->capture_default_str();
  train_cmd->add_option("--r", train.r, "Coded shards");
  train_cmd->add_option("--tau", train.tau, "Rate s/r");
  train_cmd->add_option("--density", train.density)->check(CLI::IsMember({"minimal", "bernoulli"}))->capture_default_str();
  train_cmd->add_option("--rho", train.rho, "Bernoulli density")->capture_default_str();
  train_cmd->add_option("--lambda", train.lambda)->capture_default_str();
  train_cmd->add_option("--D", train.projection_dim, "Random projection dimension (0: none)")->capture_default_str();
  train_cmd->add_flag("--intercept", train.intercept, "Append a constant feature");

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Predict with a trained session");
  predict_cmd->add_option("--session", predict.session)->required();
  predict_cmd->add_option("--data", predict.data)->required();

  UnlearnArgs unl;
  auto* unlearn_cmd = app.add_subcommand("unlearn", "Unlearn samples from a session in place");
  unlearn_cmd->add_option("--session", unl.session)->required();
  unlearn_cmd->add_option("--ids", unl.ids, "Comma-separated sample ids")->delimiter(',');
  unlearn_cmd->add_option("--request", unl.request, "JSON id list or CSV of rows with an id column");

  VerifyArgs ver;
  auto* verify_cmd = app.add_subcommand("verify", "Compare the session against retraining from scratch");
  verify_cmd->add_option("--session", ver.session)->required();
  verify_cmd->add_option("--tolerance", ver.tolerance)->capture_default_str();

  BenchArgs tradeoff;
  auto* tradeoff_cmd = app.add_subcommand("bench-tradeoff", "Run a performance vs unlearning-cost sweep");
  tradeoff_cmd->add_option("--spec", tradeoff.spec, "Sweep JSON")->required();
  tradeoff_cmd->add_option("--runs", tradeoff.runs);

  BenchArgs influence;
  auto* influence_cmd = app.add_subcommand("bench-influence", "Run the outlier vs inlier removal experiment");
  influence_cmd->add_option("--spec", influence.spec, "Influence JSON")->required();
  influence_cmd->add_option("--runs", influence.runs);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);

    const CLI::App* sub = app.get_subcommands().front();
    const auto config = resolved_config(app, *sub);
    if (sub == gen_cmd) return cmd_gen_data(g, gen, config);
    if (sub == train_cmd) return cmd_train(g, train, config);
    if (sub == predict_cmd) return cmd_predict(g, predict, config);
    if (sub == unlearn_cmd) return cmd_unlearn(g, unl, config);
    if (sub == verify_cmd) return cmd_verify(g, ver, config);
    if (sub == tradeoff_cmd) return cmd_bench_tradeoff(g, tradeoff, app, config);
    if (sub == influence_cmd) return cmd_bench_influence(g, influence, app, config);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
