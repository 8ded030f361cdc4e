#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "uavsim/config.hpp"
#include "uavsim/scenario.hpp"

namespace fixture {

inline uavsim::Task make_task(int id, double x, double y, uavsim::TaskClass cls = uavsim::TaskClass::SensorData,
                              double bytes = 1e6, double dwell = 10.0) {
  uavsim::Task t;
  t.id = id;
  t.position = {x, y, 0.0};
  t.cls = cls;
  t.priority = 4 - static_cast<int>(cls);
  t.data_size_bytes = bytes;
  t.dwell_time_s = cls == uavsim::TaskClass::EdgeVideo ? 0.0 : dwell;
  return t;
}

/// Small config: `uavs` UAVs over `stations` stations, `tasks` tasks on a 1 km square.
inline uavsim::ScenarioConfig small_config(int uavs, int stations, int tasks) {
  auto c = uavsim::profile_config("desk");
  c.uavs = uavs;
  c.stations = stations;
  c.tasks = tasks;
  c.region.side_length_m = 1000.0;
  c.density.clusters = 0;
  return c;
}

inline uavsim::Scenario small_scenario(int uavs, int stations, int tasks, std::uint64_t seed) {
  return uavsim::generate_scenario(small_config(uavs, stations, tasks), seed);
}

/// One UAV, one station, one task a few hundred metres out.
inline uavsim::ScenarioConfig toy_config() {
  auto c = small_config(1, 1, 1);
  c.region.side_length_m = 500.0;
  c.env.horizon_steps = 12;
  c.env.k_candidates = 1;
  return c;
}

// Hand-rolled generators for property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }
  uavsim::Task task(int id, double side = 1500.0) {
    const auto cls = static_cast<uavsim::TaskClass>(integer(1, 3));
    return make_task(id, uniform(0, side), uniform(0, side), cls, log_uniform(1e5, 1e8), uniform(1, 60));
  }
};

}  // namespace fixture
