#include <algorithm>

#include <gtest/gtest.h>

#include "common/fixtures.hpp"
#include "uavsim/baselines.hpp"

using namespace uavsim;

TEST(GaConfig, ValidationNamesTheField) {
  GaConfig c;
  c.population = 1;
  try {
    c.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "ga.population");
  }
  c = {};
  c.mutation_rate = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.elitism = 60;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Baselines, AllAllocatorsProduceFeasiblePartitions) {
  GaConfig ga;
  ga.generations = 20;
  ga.population = 20;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto sc = fixture::small_scenario(4, 2, 14, seed);
    for (const auto& a : {rnd_allocate(sc, seed), greedy_allocate(sc), ga_allocate(sc, ga)}) {
      const auto rep = check_feasible(a, sc);
      EXPECT_TRUE(rep.feasible()) << rep.summary();
      EXPECT_EQ(a.assigned_count() + a.unassigned.size(), sc.tasks.size());
      EXPECT_GE(objective(a, sc), 0.0);
    }
  }
}

TEST(Baselines, NoTasksGivesEmptyAssignments) {
  const auto sc = fixture::small_scenario(2, 2, 0, 1);
  EXPECT_TRUE(rnd_allocate(sc, 1).routes.empty());
  EXPECT_TRUE(greedy_allocate(sc).routes.empty());
  EXPECT_TRUE(ga_allocate(sc, {}).routes.empty());
}

TEST(Baselines, SingleProfitableTaskIsTaken) {
  auto cfg = fixture::small_config(1, 1, 1);
  cfg.classes[0].fraction = 0.0;
  cfg.classes[1].fraction = 0.0;
  cfg.classes[2].fraction = 1.0;
  auto sc = generate_scenario(cfg, 2);
  // close enough that the detour costs less than the task is worth
  const Vec3 home = sc.region.station_positions[0];
  sc.tasks[0].position = {home.x + 100.0, home.y + 100.0, 0.0};
  EXPECT_EQ(greedy_allocate(sc).assigned_count(), 1u);
  GaConfig ga;
  ga.generations = 5;
  EXPECT_EQ(ga_allocate(sc, ga).assigned_count(), 1u);
  sc.tasks[0].position = {home.x + 900.0, home.y + 900.0, 0.0};
  EXPECT_EQ(greedy_allocate(sc).assigned_count(), 0u);
}

TEST(Baselines, GreedyIsDeterministicAndRndDependsOnSeed) {
  const auto sc = fixture::small_scenario(4, 2, 16, 9);
  EXPECT_EQ(assignment_to_json(greedy_allocate(sc)), assignment_to_json(greedy_allocate(sc)));
  EXPECT_EQ(assignment_to_json(rnd_allocate(sc, 4)), assignment_to_json(rnd_allocate(sc, 4)));
  bool differs = false;
  for (std::uint64_t s = 5; s < 10 && !differs; ++s) {
    differs = assignment_to_json(rnd_allocate(sc, 4)) != assignment_to_json(rnd_allocate(sc, s));
  }
  EXPECT_TRUE(differs);
}

TEST(Ga, ClonedPopulationWithoutMutationStaysPut) {
  const auto sc = fixture::small_scenario(2, 2, 8, 3);
  const CostModel cm(sc);
  Genome g(8);
  for (int t = 0; t < 8; ++t) g[t] = t % 3 == 0 ? -1 : t % 2;
  Genome decoded = g;
  decode_genome(cm, decoded);
  GaConfig cfg;
  cfg.population = 10;
  cfg.generations = 15;
  cfg.mutation_rate = 0.0;
  const auto res = ga_run(sc, cfg, std::vector<Genome>(10, g));
  EXPECT_EQ(res.best_genome, decoded);
  ASSERT_EQ(res.best_per_generation.size(), 15u);
  for (double f : res.best_per_generation) EXPECT_DOUBLE_EQ(f, res.best_per_generation.front());
}

TEST(Ga, BestFitnessNeverDecreases) {
  const auto sc = fixture::small_scenario(4, 2, 20, 5);
  GaConfig cfg;
  cfg.generations = 40;
  cfg.population = 30;
  cfg.seed = 3;
  const auto res = ga_run(sc, cfg);
  for (std::size_t i = 1; i < res.best_per_generation.size(); ++i) {
    EXPECT_GE(res.best_per_generation[i], res.best_per_generation[i - 1]);
  }
  EXPECT_NEAR(res.best_fitness, objective(res.best, sc), 1e-9 * std::max(1.0, std::abs(res.best_fitness)));
}

TEST(Ga, InitialPopulationSizeMustMatch) {
  const auto sc = fixture::small_scenario(2, 2, 4, 3);
  GaConfig cfg;
  cfg.population = 4;
  EXPECT_THROW(ga_run(sc, cfg, std::vector<Genome>(3, Genome(4, -1))), ValidationError);
}

TEST(Ga, DecodeRejectsBadGenomes) {
  const auto sc = fixture::small_scenario(2, 2, 4, 3);
  const CostModel cm(sc);
  Genome shorter(3, 0);
  EXPECT_THROW(decode_genome(cm, shorter), ContractViolation);
  Genome unknown(4, 7);
  EXPECT_THROW(decode_genome(cm, unknown), ContractViolation);
}

TEST(Ga, DecodeRepairsOverloadedRoutes) {
  auto cfg = fixture::small_config(1, 1, 10);
  cfg.uav.battery_flight_J = 20e3;
  const auto sc = generate_scenario(cfg, 6);
  const CostModel cm(sc);
  Genome all(10, 0);
  const auto a = decode_genome(cm, all);
  EXPECT_TRUE(check_feasible(a, cm).feasible());
  const auto kept = std::count(all.begin(), all.end(), 0);
  EXPECT_EQ(static_cast<std::size_t>(kept), a.assigned_count());
  EXPECT_LT(kept, 10);
}

TEST(Ga, BeatsRandomOnMedian) {
  std::vector<double> ga_obj, rnd_obj;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto sc = fixture::small_scenario(4, 2, 12, seed);
    GaConfig cfg;
    cfg.generations = 60;
    cfg.seed = seed;
    ga_obj.push_back(objective(ga_allocate(sc, cfg), sc));
    rnd_obj.push_back(objective(rnd_allocate(sc, seed), sc));
  }
  std::sort(ga_obj.begin(), ga_obj.end());
  std::sort(rnd_obj.begin(), rnd_obj.end());
  EXPECT_GE(ga_obj[2], rnd_obj[2]);
}

TEST(Assignment, JsonRoundTripRecomputesTotals) {
  const auto sc = fixture::small_scenario(4, 2, 10, 2);
  const auto a = greedy_allocate(sc);
  const auto back = assignment_from_json(nlohmann::json::parse(assignment_to_json(a).dump()), sc);
  EXPECT_EQ(back.unassigned, a.unassigned);
  ASSERT_EQ(back.routes.size(), a.routes.size());
  for (const auto& [u, r] : a.routes) {
    EXPECT_EQ(back.routes.at(u).stops, r.stops);
    EXPECT_NEAR(back.routes.at(u).curved_length_m, r.curved_length_m, 1e-9);
  }
  EXPECT_DOUBLE_EQ(objective(back, sc), objective(a, sc));
}

TEST(Assignment, JsonWithUnknownUavIsRejected) {
  const auto sc = fixture::small_scenario(2, 2, 3, 2);
  nlohmann::json j{{"routes", {{{"uav", 9}, {"stops", nlohmann::json::array()}}}}, {"unassigned", {0, 1, 2}}};
  EXPECT_THROW(assignment_from_json(j, sc), ValidationError);
}
