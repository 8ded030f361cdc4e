#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "common/fixtures.hpp"
#include "common/oracle_values.hpp"
#include "uavsim/compute.hpp"
#include "uavsim/routing.hpp"

using namespace uavsim;

namespace {

// Two same-class tasks d metres apart whose load ratio C_n S_n / C_m S_m is `ratio`.
std::pair<Task, Task> pair_with_ratio(double d, double ratio) {
  const double s_m = 1e6;
  Task n = fixture::make_task(0, 0, 0, TaskClass::SensorData, s_m * std::sqrt(ratio));
  Task m = fixture::make_task(1, d, 0, TaskClass::SensorData, s_m);
  return {n, m};
}

Assignment assignment_from_orders(const CostModel& cm, const std::vector<std::vector<int>>& orders, bool zero_beta) {
  Assignment a;
  std::vector<char> used(cm.task_count(), 0);
  for (int u = 0; u < static_cast<int>(orders.size()); ++u) {
    if (orders[u].empty()) continue;
    Route r = make_route(cm, u, orders[u]);
    if (zero_beta) {
      for (auto& s : r.stops) s.beta = 0.0;
    }
    for (int t : orders[u]) used[t] = 1;
    a.routes[u] = r;
  }
  for (int t = 0; t < cm.task_count(); ++t) {
    if (!used[t]) a.unassigned.insert(t);
  }
  return a;
}

// Brute force over every task -> {none, uav 0, uav 1, ...} map and every visiting order.
double enumerate_best(const Scenario& sc, long* feasible_count = nullptr) {
  const CostModel cm(sc);
  const int nt = cm.task_count(), nu = cm.uav_count();
  double best = 0.0;  // the empty assignment
  long count = 0;
  std::vector<int> owner(nt, -1);
  for (;;) {
    std::vector<std::vector<int>> orders(nu);
    for (int t = 0; t < nt; ++t) {
      if (owner[t] >= 0) orders[owner[t]].push_back(t);
    }
    // Walk the product of permutations with an odometer over next_permutation.
    for (auto& o : orders) std::sort(o.begin(), o.end());
    for (;;) {
      for (bool zero : {false, true}) {
        const Assignment a = assignment_from_orders(cm, orders, zero);
        if (check_feasible(a, cm).feasible()) {
          ++count;
          best = std::max(best, objective(a, cm));
        }
      }
      int u = 0;
      while (u < nu && !std::next_permutation(orders[u].begin(), orders[u].end())) ++u;
      if (u == nu) break;
    }
    int t = 0;
    while (t < nt && ++owner[t] == nu) owner[t++] = -1;
    if (t == nt) break;
  }
  if (feasible_count) *feasible_count = count;
  return best;
}

}  // namespace

TEST(CurvedMetric, MatchesOracle) {
  const ComputeParams cp;
  {
    auto [n, m] = pair_with_ratio(100, std::exp(3.0));
    EXPECT_NEAR(curved_distance(n, m, cp), oracle::at("curved_theta2_d100"), 1e-9 * 120);
  }
  {
    auto [n, m] = pair_with_ratio(250, 10);
    EXPECT_NEAR(curved_distance(n, m, cp), oracle::at("curved_ratio10_d250"), 1e-9 * 270);
  }
  {
    auto [n, m] = pair_with_ratio(77, 20);
    EXPECT_NEAR(curved_distance(n, m, cp), oracle::at("curved_ratio20_d77"), 1e-9 * 92);
  }
  {
    auto [n, m] = pair_with_ratio(100, 2.0);  // ln 2 - 1 < 0: no bend
    EXPECT_DOUBLE_EQ(curved_distance(n, m, cp), 100.0);
  }
}

TEST(CurvedMetric, NeverShorterThanEuclideanAndEqualOnlyWithoutBend) {
  const ComputeParams cp;
  fixture::Gen g(101);
  for (int i = 0; i < 10000; ++i) {
    const Task n = g.task(0), m = g.task(1);
    const double d = euclidean_distance(n.position, m.position);
    const double c = curved_distance(n, m, cp);
    const double theta =
        central_angle(task_flops(n, 1.0, cp) * n.data_size_bytes, task_flops(m, 1.0, cp) * m.data_size_bytes);
    EXPECT_GE(c, d);
    if (theta == 0.0) {
      EXPECT_EQ(c, d);
    } else if (d > 0.0) {
      EXPECT_GT(c, d);
    }
  }
}

TEST(CurvedMetric, IsNotSymmetric) {
  const ComputeParams cp;
  auto [n, m] = pair_with_ratio(100, 50);
  EXPECT_GT(curved_distance(n, m, cp), curved_distance(m, n, cp));
  EXPECT_DOUBLE_EQ(curved_distance(m, n, cp), 100.0);
}

TEST(CurvedMetric, AngleDomainAndClamp) {
  EXPECT_THROW(central_angle(0.0, 1.0), DomainError);
  EXPECT_THROW(central_angle(1.0, -1.0), DomainError);
  EXPECT_DOUBLE_EQ(central_angle(1.0, 1.0), 0.0);
  EXPECT_NEAR(central_angle(std::exp(3.0), 1.0), 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(central_angle(1e30, 1.0), kMaxCentralAngle);
}

TEST(Feasibility, EmptyAssignmentIsFeasibleWithZeroObjective) {
  const auto sc = fixture::small_scenario(2, 2, 5, 1);
  const auto a = empty_assignment(sc);
  EXPECT_TRUE(check_feasible(a, sc).feasible());
  EXPECT_DOUBLE_EQ(objective(a, sc), 0.0);
}

TEST(Feasibility, DetectsDoubleAssignment) {
  const auto sc = fixture::small_scenario(2, 2, 3, 2);
  const CostModel cm(sc);
  Assignment a;
  a.routes[0] = make_route(cm, 0, {0, 1});
  a.routes[1] = make_route(cm, 1, {1, 2});
  const auto rep = check_feasible(a, cm);
  EXPECT_TRUE(rep.has(Constraint::Uniqueness));
  EXPECT_THROW(objective(a, cm), InfeasibleError);
}

TEST(Feasibility, UnknownIdsAreValidationErrors) {
  const auto sc = fixture::small_scenario(2, 2, 3, 2);
  const CostModel cm(sc);
  Assignment a = empty_assignment(sc);
  a.unassigned.insert(7);
  EXPECT_THROW(check_feasible(a, cm), ValidationError);

  Assignment b = empty_assignment(sc);
  b.unassigned.erase(0);
  EXPECT_THROW(check_feasible(b, cm), ValidationError);  // task 0 nowhere

  Assignment c = empty_assignment(sc);
  c.unassigned.erase(0);
  Route r = make_route(cm, 0, {0});
  r.uav_id = 5;
  c.routes[5] = r;
  EXPECT_THROW(check_feasible(c, cm), ValidationError);
}

TEST(Feasibility, TinyBatteryViolatesFlightEnergy) {
  auto cfg = fixture::small_config(1, 1, 2);
  cfg.uav.battery_flight_J = 500.0;
  const auto sc = generate_scenario(cfg, 4);
  const CostModel cm(sc);
  Assignment a;
  a.routes[0] = make_route(cm, 0, {0, 1});
  const auto rep = check_feasible(a, cm);
  EXPECT_TRUE(rep.has(Constraint::FlightEnergy));
  EXPECT_FALSE(rep.summary().empty());
}

TEST(Feasibility, BadFractionIsReported) {
  const auto sc = fixture::small_scenario(1, 1, 1, 4);
  const CostModel cm(sc);
  Assignment a;
  a.routes[0] = make_route(cm, 0, {0});
  a.routes[0].stops[0].beta = 1.5;
  EXPECT_TRUE(check_feasible(a, cm).has(Constraint::ProcessingFraction));
}

TEST(Routing, MakeRouteTotalsAgreeWithEvaluation) {
  fixture::Gen g(7);
  for (int i = 0; i < 20; ++i) {
    const auto sc = fixture::small_scenario(2, 2, 6, 100 + i);
    const CostModel cm(sc);
    std::vector<int> order{0, 1, 2, 3, 4, 5};
    std::shuffle(order.begin(), order.end(), g.rng);
    order.resize(g.integer(1, 6));
    const Route r = make_route(cm, 1, order);
    const auto ev = evaluate_route(cm, 1, r.stops);
    EXPECT_DOUBLE_EQ(r.curved_length_m, ev.curved_length_m);
    EXPECT_DOUBLE_EQ(r.flight_energy_J, ev.flight_energy_J);
    EXPECT_DOUBLE_EQ(curved_route_length(cm, 1, order), ev.curved_length_m);
    EXPECT_GE(ev.curved_length_m, ev.euclidean_length_m - 1e-9);
    for (const auto& s : r.stops) {
      EXPECT_GE(s.beta, 0.0);
      EXPECT_LE(s.beta, 1.0);
    }
  }
}

TEST(Routing, OrderRouteReturnsAPermutation) {
  const auto sc = fixture::small_scenario(1, 1, 9, 12);
  const CostModel cm(sc);
  std::vector<int> tasks{8, 3, 1, 5, 0};
  auto out = order_route(cm, 0, tasks);
  std::sort(out.begin(), out.end());
  std::sort(tasks.begin(), tasks.end());
  EXPECT_EQ(out, tasks);
  EXPECT_TRUE(order_route(cm, 0, {}).empty());
}

TEST(ExactSolver, RefusesLargeInstances) {
  const auto sc = fixture::small_scenario(2, 2, 9, 1);
  EXPECT_THROW(solve_exact(sc, 8), Error);
}

TEST(ExactSolver, MatchesBruteForceOnSmallInstances) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto sc = fixture::small_scenario(2, 2, 4, seed);
    long feasible = 0;
    const double brute = enumerate_best(sc, &feasible);
    const auto a = solve_exact(sc);
    EXPECT_TRUE(check_feasible(a, sc).feasible());
    EXPECT_GT(feasible, 0);
    EXPECT_NEAR(objective(a, sc), brute, 1e-9 * std::max(1.0, std::abs(brute))) << "seed " << seed;
  }
}

TEST(ExactSolver, NoTasksGivesEmptyAssignment) {
  const auto sc = fixture::small_scenario(2, 2, 0, 1);
  const auto a = solve_exact(sc);
  EXPECT_TRUE(a.routes.empty());
  EXPECT_DOUBLE_EQ(objective(a, sc), 0.0);
}
