// Config parsing, scenario generation and trajectory files.
#include <sstream>

#include <gtest/gtest.h>

#include "common/fixtures.hpp"
#include "uavsim/config.hpp"
#include "uavsim/trajectory.hpp"

using namespace uavsim;
using nlohmann::json;

TEST(Config, ProfilesValidate) {
  EXPECT_NO_THROW(validate(profile_config("desk")));
  EXPECT_NO_THROW(validate(profile_config("paper")));
  const auto paper = profile_config("paper");
  EXPECT_EQ(paper.uavs, 16);
  EXPECT_EQ(paper.stations, 4);
  EXPECT_EQ(paper.tasks, 110);
  const auto desk = profile_config("desk");
  EXPECT_EQ(desk.uavs, 4);
  EXPECT_EQ(desk.stations, 2);
  EXPECT_EQ(desk.tasks, 30);
  EXPECT_EQ(desk.training.episodes, 300);
  EXPECT_THROW(profile_config("laptop"), ValidationError);
}

TEST(Config, JsonRoundTrip) {
  auto c = profile_config("desk");
  c.learn.t0_sync = 7;
  c.uav.rotor.weight_N = 25.0;
  c.classes[1].value.k_m = 2.5;
  EXPECT_EQ(config_from_json(json::parse(config_to_json(c).dump())), c);
}

TEST(Config, MissingKeysTakeDefaults) {
  const auto c = parse_config(R"({"tasks": 12})");
  EXPECT_EQ(c.tasks, 12);
  EXPECT_EQ(c.uavs, ScenarioConfig{}.uavs);
}

TEST(Config, UnknownKeyIsRejectedWithItsPath) {
  try {
    parse_config(R"({"learn": {"gama": 0.9}})");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(e.field().find("gama"), std::string::npos);
  }
}

TEST(Config, OutOfRangeFieldIsNamed) {
  try {
    parse_config(R"({"learn": {"gamma": 1.5}})");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "learn.gamma");
  }
  auto c = profile_config("desk");
  c.stations = 5;
  EXPECT_THROW(validate(c), ValidationError);
  c = profile_config("desk");
  c.classes[0].fraction = 0.5;
  EXPECT_THROW(validate(c), ValidationError);
}

TEST(Config, SyntaxErrorReportsLine) {
  try {
    parse_config("{\n  \"tasks\": 3,\n  oops\n}");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Scenario, GenerationIsSeedDeterministic) {
  const auto cfg = fixture::small_config(4, 2, 25);
  EXPECT_EQ(generate_scenario(cfg, 3), generate_scenario(cfg, 3));
  EXPECT_FALSE(generate_scenario(cfg, 3) == generate_scenario(cfg, 4));
}

TEST(Scenario, TasksRespectClassRanges) {
  const auto cfg = profile_config("desk");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto sc = generate_scenario(cfg, seed);
    ASSERT_EQ(sc.tasks.size(), 30u);
    for (const auto& t : sc.tasks) {
      const auto& cl = cfg.classes[class_index(t.cls)];
      EXPECT_GE(t.data_size_bytes, cl.size_min_bytes);
      EXPECT_LE(t.data_size_bytes, cl.size_max_bytes);
      EXPECT_GE(t.dwell_time_s, cl.dwell_min_s);
      EXPECT_LE(t.dwell_time_s, cl.dwell_max_s);
      EXPECT_EQ(t.priority, cl.priority);
      EXPECT_GE(t.position.x, 0.0);
      EXPECT_LE(t.position.x, cfg.region.side_length_m);
    }
  }
}

TEST(Scenario, StationsOnCornersAndUavsRoundRobin) {
  const auto sc = generate_scenario(profile_config("paper"), 0);
  ASSERT_EQ(sc.station_count(), 4);
  EXPECT_EQ(sc.region.station_positions[1], (Vec3{1500, 1500, 0}));
  for (int s = 0; s < 4; ++s) EXPECT_EQ(sc.uavs_of_station(s).size(), 4u);
}

TEST(Scenario, ClassMixFollowsFractions) {
  auto cfg = profile_config("desk");
  cfg.tasks = 3000;
  const auto sc = generate_scenario(cfg, 1);
  std::array<int, 3> n{};
  for (const auto& t : sc.tasks) ++n[class_index(t.cls)];
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(n[k] / 3000.0, 1.0 / 3.0, 0.04);
}

TEST(Scenario, JsonRoundTrip) {
  const auto sc = fixture::small_scenario(4, 2, 9, 5);
  EXPECT_EQ(scenario_from_json(json::parse(scenario_to_json(sc).dump())), sc);
}

namespace {

EpisodeLog short_log() {
  Env env(fixture::small_scenario(2, 2, 4, 2));
  env.reset(0);
  TrajectoryRecorder rec;
  rec.begin(env, "noop", 7, 3);
  for (int i = 0; i < 3; ++i) rec.record(env.step(env.noop_actions()));
  rec.finish(env);
  return rec.take();
}

}  // namespace

TEST(Trajectory, WriteThenParseRoundTrips) {
  const auto log = short_log();
  std::stringstream ss;
  write_trajectory(log, ss);
  write_trajectory(log, ss);
  const auto back = parse_trajectories(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].header, log.header);
  EXPECT_EQ(back[1].steps, log.steps);
  EXPECT_EQ(back[0].final_record, log.final_record);
  EXPECT_EQ(back[0].header.at("seed"), 7);
}

TEST(Trajectory, TruncatedEpisodeIsAnError) {
  auto log = short_log();
  log.final_record = nullptr;
  std::stringstream ss;
  write_trajectory(log, ss);
  EXPECT_THROW(parse_trajectories(ss), Error);
  EXPECT_EQ(audit_trajectory(log).size(), 1u);
}

TEST(Trajectory, MalformedLineIsAnError) {
  std::stringstream ss("{\"type\": \"header\"\n");
  EXPECT_THROW(parse_trajectories(ss), Error);
}

TEST(Trajectory, AuditCatchesDoubleCollectionAndNegativeBattery) {
  auto log = short_log();
  EXPECT_TRUE(audit_trajectory(log).empty());
  log.steps[0]["collections"].push_back({{"task", 1}, {"uav", 0}, {"time_s", 1.0}});
  log.steps[1]["collections"].push_back({{"task", 1}, {"uav", 1}, {"time_s", 2.0}});
  log.steps[2]["flight_left_J"][0] = -5.0;
  EXPECT_EQ(audit_trajectory(log).size(), 2u);
}
