#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "codedml/session.hpp"

using namespace codedml;
namespace fs = std::filesystem;

namespace {

Session trained_session() {
  const auto raw = gen_synthetic(SyntheticSpec::recipe(SyntheticKind::LognormalPoly, 233, 3, 4));
  const auto record = NormalizationRecord::fit(raw);
  LearnConfig config;
  config.s = 10;
  config.r = 2;
  config.lambda = 1e-3;
  config.seed = 8;
  FeatureMap features{make_projection(3, 6, 1), true};
  auto learned = learn(record.apply(raw), config, features);
  return Session{nlohmann::json{{"seed", 8}}, record, raw, std::move(learned.model), std::move(learned.store)};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "codedml_test_session" / name;
  fs::remove_all(dir);
  return dir;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no codedml::Error thrown";
  return ErrorKind::Io;
}

}  // namespace

TEST(Session, SaveLoadRoundTripIsExact) {
  const auto dir = fresh_dir("roundtrip");
  auto session = trained_session();
  save_session(session, dir);
  const auto back = load_session(dir);
  EXPECT_EQ(back.model.weights, session.model.weights);
  EXPECT_EQ(back.model.agg, session.model.agg);
  EXPECT_EQ(back.model.features, session.model.features);
  EXPECT_EQ(back.store.generator(), session.store.generator());
  EXPECT_EQ(back.store.members(), session.store.members());
  EXPECT_EQ(back.store.dropped_ids(), session.store.dropped_ids());
  for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(back.store.shard(j).features, session.store.shard(j).features);
  EXPECT_EQ(back.train, session.train);
  EXPECT_EQ(back.config, session.config);
}

TEST(Session, UnlearnPersistsAndVerifies) {
  const auto dir = fresh_dir("unlearn");
  auto session = trained_session();
  save_session(session, dir);

  auto live = load_session(dir);
  const std::vector<SampleId> ids{3, 50, 232};  // 232 is a dropped tail sample
  ASSERT_EQ(live.store.dropped_ids().size(), 3U);
  const auto report = unlearn(live.model, live.store, make_request(live.normalized_train(), ids));
  live.train = without_ids(live.train, ids);
  record_unlearn(dir, live, report);

  const auto back = load_session(dir);
  EXPECT_EQ(back.store.unlearned_ids().size(), 3U);
  EXPECT_EQ(back.train.size(), 230U);
  const auto verdict = verify_perfect_unlearning(back.model, back.store, back.normalized_train());
  EXPECT_TRUE(verdict.passed) << verdict.max_discrepancy;

  std::ifstream log(dir / "unlearn_log.jsonl");
  std::string line;
  ASSERT_TRUE(std::getline(log, line));
  EXPECT_EQ(nlohmann::json::parse(line).at("ids"), nlohmann::json(ids));
}

TEST(Session, MissingStaleAndLocked) {
  EXPECT_EQ(kind_of([] { load_session(fresh_dir("nothing")); }), ErrorKind::SessionNotFound);

  const auto dir = fresh_dir("stale");
  save_session(trained_session(), dir);
  {
    std::ofstream tamper(dir / "shards" / "shard_1.csv", std::ios::app);
    tamper << "0,0,0,0,0,0,0,0\n";
  }
  EXPECT_EQ(kind_of([&] { load_session(dir); }), ErrorKind::StaleSession);

  const auto locked = fresh_dir("locked");
  fs::create_directories(locked);
  SessionLock first(locked);
  EXPECT_EQ(kind_of([&] { SessionLock second(locked); }), ErrorKind::SessionLocked);
}

TEST(Session, FeatureRowsByName) {
  const auto dir = fresh_dir("rows");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "rows.csv");
    out << "b,y,a\n2,9,1\n4,9,3\n";
  }
  const auto rows = load_feature_rows((dir / "rows.csv").string(), {"a", "b"}, "y");
  EXPECT_EQ(rows.features(1, 0), 3.0);
  EXPECT_EQ(rows.features(1, 1), 4.0);
  ASSERT_TRUE(rows.response.has_value());
  const auto no_response = load_feature_rows((dir / "rows.csv").string(), {"a"}, "target");
  EXPECT_FALSE(no_response.response.has_value());
  EXPECT_THROW(load_feature_rows((dir / "rows.csv").string(), {"c"}, "y"), Error);
}
