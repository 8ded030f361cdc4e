#include <random>

#include <gtest/gtest.h>

#include "common/fixtures.hpp"
#include "common/oracle_values.hpp"
#include "uavsim/baselines.hpp"
#include "uavsim/env.hpp"
#include "uavsim/sac.hpp"
#include "uavsim/trajectory.hpp"

using namespace uavsim;

namespace {

std::vector<std::string> rollout_digests(Env& env, std::uint64_t action_seed) {
  env.reset(0);
  std::mt19937_64 rng(action_seed);
  std::vector<std::string> out;
  while (!env.done()) out.push_back(env.step(random_actions(env, rng)).digest);
  return out;
}

}  // namespace

TEST(Reward, MatchesOracle) {
  LearnParams lp;
  EXPECT_NEAR(reward_fn({{3, 1.0, 0.0}}, 1.0, lp), oracle::at("reward_single"), 1e-12);
  EXPECT_NEAR(reward_fn({{3, 0.5, 200.0}, {1, 0.25, 50.0}}, 0.4, lp), oracle::at("reward_mixed"), 1e-12);
  lp.reward_mu = 2.0;
  lp.reward_omega = 1.5;
  lp.reward_phi = 10.0;
  EXPECT_NEAR(reward_fn({{2, 0.8, 1000.0}}, 0.7, lp), oracle::at("reward_phi10"), 1e-11);
  EXPECT_DOUBLE_EQ(reward_fn({}, 0.9, lp), 0.0);
}

TEST(Env, ShapesAndInitialState) {
  Env env(fixture::small_scenario(4, 2, 10, 1));
  env.reset(3);
  EXPECT_EQ(env.agent_count(), 2);
  EXPECT_EQ(env.action_count(), 2 + env.scenario().env.k_candidates);
  for (int a = 0; a < env.agent_count(); ++a) {
    const auto obs = env.observe(a);
    EXPECT_EQ(static_cast<int>(obs.size()), env.obs_dim(a));
    for (double v : obs) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
    const auto mask = env.action_mask(a);
    EXPECT_EQ(mask.size(), env.agent_uavs(a).size() * static_cast<std::size_t>(env.action_count()));
    for (std::size_t u = 0; u < env.agent_uavs(a).size(); ++u) EXPECT_TRUE(mask[u * env.action_count()]);
  }
  EXPECT_EQ(env.state().time_step, 0);
  EXPECT_DOUBLE_EQ(env.true_collection_rate(), 0.0);
  for (const auto& u : env.state().uavs) EXPECT_EQ(u.phase, Phase::AtStation);
}

TEST(Env, AllNoopLeavesFleetGroundedWithoutReward) {
  Env env(fixture::small_scenario(2, 2, 5, 1));
  env.reset(0);
  const auto& info = env.step(env.noop_actions());
  for (double r : info.rewards) EXPECT_DOUBLE_EQ(r, 0.0);
  EXPECT_TRUE(info.collections.empty());
  for (const auto& u : env.state().uavs) {
    EXPECT_EQ(u.phase, Phase::AtStation);
    EXPECT_DOUBLE_EQ(u.flight_spent_J, 0.0);
  }
}

TEST(Env, MaskedOrMalformedActionsAreContractViolations) {
  Env env(fixture::small_scenario(2, 2, 5, 1));
  env.reset(0);
  auto acts = env.noop_actions();
  acts[0][0] = kActionReturn;  // nothing to return from at the station
  const auto mask = env.action_mask(0);
  if (!mask[kActionReturn]) {
    EXPECT_THROW(env.step(acts), ContractViolation);
  }
  auto short_acts = env.noop_actions();
  short_acts.pop_back();
  EXPECT_THROW(env.step(short_acts), ContractViolation);
  auto bad = env.noop_actions();
  bad[0][0] = env.action_count();
  EXPECT_THROW(env.step(bad), ContractViolation);
}

TEST(Env, SameActionsGiveSameTrajectory) {
  Env a(fixture::small_scenario(4, 2, 12, 5));
  Env b(fixture::small_scenario(4, 2, 12, 5));
  EXPECT_EQ(rollout_digests(a, 99), rollout_digests(b, 99));
  EXPECT_EQ(a.state(), b.state());
}

TEST(Env, EpisodesEndByTheHorizon) {
  Env env(fixture::small_scenario(4, 2, 12, 5));
  const auto d = rollout_digests(env, 1);
  EXPECT_LE(static_cast<int>(d.size()), env.scenario().env.horizon_steps);
  EXPECT_TRUE(env.done());
  EXPECT_THROW(env.step(env.noop_actions()), ContractViolation);
}

TEST(Env, RandomRolloutsPassTheSafetyAudit) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Env env(fixture::small_scenario(4, 2, 15, seed));
    env.reset(seed);
    std::mt19937_64 rng(seed + 100);
    TrajectoryRecorder rec;
    rec.begin(env, "random", seed, 0);
    while (!env.done()) {
      const auto& info = env.step(random_actions(env, rng));
      for (double f : info.flight_left_J) EXPECT_GE(f, -1e-6);
      for (double p : info.process_left_J) EXPECT_GE(p, -1e-6);
      for (double s : info.storage_free_bytes) EXPECT_GE(s, -1e-6);
      rec.record(info);
    }
    rec.finish(env);
    const auto problems = audit_trajectory(rec.log());
    EXPECT_TRUE(problems.empty()) << "seed " << seed << ": " << (problems.empty() ? "" : problems.front());
    for (const auto& u : env.state().uavs) EXPECT_NE(u.phase, Phase::Transit);
  }
}

TEST(Env, NoopStaysLegalEverywhere) {
  Env env(fixture::small_scenario(4, 2, 12, 8));
  env.reset(0);
  std::mt19937_64 rng(4);
  while (!env.done()) {
    for (int a = 0; a < env.agent_count(); ++a) {
      const auto m = env.action_mask(a);
      for (std::size_t u = 0; u < env.agent_uavs(a).size(); ++u) EXPECT_TRUE(m[u * env.action_count()]);
    }
    env.step(random_actions(env, rng));
  }
}

TEST(Env, CentralizedAgentSeesEveryStation) {
  const auto sc = fixture::small_scenario(4, 2, 10, 2);
  Env dist(sc);
  Env cent(sc, EnvOptions{ControlMode::Centralized});
  dist.reset(0);
  cent.reset(0);
  ASSERT_EQ(cent.agent_count(), 1);
  EXPECT_EQ(cent.agent_uavs(0).size(), 4u);
  EXPECT_EQ(cent.obs_dim(0), static_cast<int>(cent.observe(0).size()));
  EXPECT_GT(cent.obs_dim(0), dist.obs_dim(0));
}

TEST(Env, CentralizedDegeneratesToDistributedWithOneStation) {
  const auto sc = fixture::small_scenario(2, 1, 8, 6);
  Env dist(sc);
  Env cent(sc, EnvOptions{ControlMode::Centralized});
  dist.reset(1);
  cent.reset(1);
  ASSERT_EQ(dist.agent_count(), 1);
  EXPECT_EQ(dist.observe(0), cent.observe(0));
  std::mt19937_64 r1(5), r2(5);
  while (!dist.done()) {
    const auto& a = dist.step(random_actions(dist, r1));
    const auto& b = cent.step(random_actions(cent, r2));
    EXPECT_EQ(a.digest, b.digest);
    EXPECT_EQ(a.rewards, b.rewards);
  }
  EXPECT_TRUE(cent.done());
}

TEST(Env, SharingAblationMatchesUnreachableSharing) {
  auto off_cfg = fixture::small_config(4, 2, 12);
  off_cfg.env.sharing_enabled = false;
  auto never_cfg = off_cfg;
  never_cfg.env.sharing_enabled = true;
  never_cfg.learn.t0_sync = 100000;
  never_cfg.learn.d_threshold_m = 0.0;
  Env off(generate_scenario(off_cfg, 4));
  Env never(generate_scenario(never_cfg, 4));
  off.reset(0);
  never.reset(0);
  std::mt19937_64 r1(8), r2(8);
  while (!off.done()) {
    const auto& a = off.step(random_actions(off, r1));
    const auto& b = never.step(random_actions(never, r2));
    EXPECT_TRUE(a.share_events.empty());
    ASSERT_EQ(a.actions, b.actions);
    EXPECT_EQ(a.rewards, b.rewards);
    EXPECT_EQ(a.collections.size(), b.collections.size());
  }
  EXPECT_TRUE(never.done());
}

TEST(Env, PeriodicSyncFiresOnSchedule) {
  auto cfg = fixture::small_config(2, 2, 6);
  cfg.learn.t0_sync = 3;
  cfg.learn.d_threshold_m = 0.0;
  Env env(generate_scenario(cfg, 1));
  env.reset(0);
  while (!env.done()) {
    const auto& info = env.step(env.noop_actions());
    int periodic = 0;
    for (const auto& e : info.share_events) periodic += e.kind == ShareEvent::Kind::Periodic;
    EXPECT_EQ(periodic, info.step % 3 == 0 ? 1 : 0) << "step " << info.step;
  }
}

TEST(Env, StaticExecutionFliesTheAssignment) {
  const auto sc = fixture::small_scenario(4, 2, 12, 3);
  const auto a = greedy_allocate(sc);
  const auto log = execute_assignment(sc, a, 0, "greedy");
  ASSERT_TRUE(log.complete());
  EXPECT_TRUE(audit_trajectory(log).empty());
  std::size_t executed = 0;
  for (const auto& u : log.final_record.at("uavs")) executed += u.at("executed").size();
  EXPECT_GT(executed, 0u);
  EXPECT_LE(executed, a.assigned_count());
}

TEST(Env, AssignRouteRejectsAirborneUav) {
  const auto sc = fixture::small_scenario(1, 1, 3, 3);
  Env env(sc, EnvOptions{ControlMode::Distributed, true});
  env.reset(0);
  env.assign_route(0, {{0, 0.0}});
  env.step(env.noop_actions());
  if (env.state().uavs[0].airborne()) {
    EXPECT_THROW(env.assign_route(0, {{1, 0.0}}), ContractViolation);
  }
}
