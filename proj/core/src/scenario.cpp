#include "uavsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "uavsim/error.hpp"

namespace uavsim {

double task_value(const Task& task) {
  const auto& v = task.value;
  return v.k_m * (1.0 + std::pow(v.r_m, v.tau_exp));
}

std::array<ClassGenParams, kTaskClassCount> ScenarioConfig::default_classes() {
  std::array<ClassGenParams, kTaskClassCount> c;
  c[0] = {1.0 / 3.0, 100e6, 200e6, 60.0, 120.0, 3, {3.0, 0.5, 1.0}};
  c[1] = {1.0 / 3.0, 300e6, 500e6, 0.0, 0.0, 2, {2.0, 0.5, 1.0}};
  c[2] = {1.0 / 3.0, 1e6, 10e6, 5.0, 5.0, 1, {1.0, 0.5, 1.0}};
  return c;
}

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ValidationError(field, what);
}

void validate_uav(const UavSpec& u) {
  require(u.battery_flight_J > 0, "uav.battery_flight_J", "must be positive");
  require(u.battery_process_J > 0, "uav.battery_process_J", "must be positive");
  require(u.storage_bytes > 0, "uav.storage_bytes", "must be positive");
  require(u.n_cores > 0, "uav.n_cores", "must be positive");
  require(u.cpu_hz > 0, "uav.cpu_hz", "must be positive");
  require(u.flops_per_cycle > 0, "uav.flops_per_cycle", "must be positive");
  require(u.transmit_power_W > 0, "uav.transmit_power_W", "must be positive");
  require(u.cruise_speed_mps > 0, "uav.cruise_speed_mps", "must be positive");
  require(u.cruise_low_speed_mps > 0, "uav.cruise_low_speed_mps", "must be positive");
  require(u.cruise_low_speed_mps < u.cruise_speed_mps, "uav.cruise_low_speed_mps",
          "must be below cruise_speed_mps");
  require(u.ascend_speed_mps > 0, "uav.ascend_speed_mps", "must be positive");
  require(u.descend_speed_mps > 0, "uav.descend_speed_mps", "must be positive");
  require(u.z_min_m > 0, "uav.z_min_m", "must be positive");
  require(u.z_min_m < u.z_max_m, "uav.z_max_m", "must exceed z_min_m");
  const auto& r = u.rotor;
  require(r.weight_N > 0, "rotor.weight_N", "must be positive");
  require(r.n_rotors > 0, "rotor.n_rotors", "must be positive");
  require(r.air_density > 0, "rotor.air_density", "must be positive");
  require(r.rotor_disk_area_m2 > 0, "rotor.rotor_disk_area_m2", "must be positive");
  require(r.thrust_coeff > 0, "rotor.thrust_coeff", "must be positive");
  require(r.profile_drag_coeff > 0, "rotor.profile_drag_coeff", "must be positive");
  require(r.rotor_solidity > 0, "rotor.rotor_solidity", "must be positive");
  require(r.induced_power_factor > 0, "rotor.induced_power_factor", "must be positive");
  require(r.hover_induced_velocity_mps > 0, "rotor.hover_induced_velocity_mps",
          "must be positive");
  require(r.flat_plate_area_horiz_m2 > 0, "rotor.flat_plate_area_horiz_m2", "must be positive");
  require(r.flat_plate_area_vert_m2 > 0, "rotor.flat_plate_area_vert_m2", "must be positive");
}

}  // namespace

void validate(const ScenarioConfig& c) {
  require(c.uavs >= 0, "uavs", "must be nonnegative");
  require(c.tasks >= 0, "tasks", "must be nonnegative");
  require(c.stations >= 1 && c.stations <= 4, "stations", "must be in [1, 4]");
  require(c.uavs == 0 || c.uavs >= c.stations, "uavs", "every station needs at least one UAV");
  require(c.region.side_length_m > 0, "region.side_length_m", "must be positive");
  require(c.region.grid_resolution_m > 0, "region.grid_resolution_m", "must be positive");
  {
    const double q = c.region.side_length_m / c.region.grid_resolution_m;
    require(std::abs(q - std::round(q)) < 1e-9, "region.grid_resolution_m",
            "must divide side_length_m");
  }
  validate_uav(c.uav);

  const auto& ch = c.channel;
  require(ch.bandwidth_u2g_hz > 0, "channel.bandwidth_u2g_hz", "must be positive");
  require(ch.bandwidth_u2u_hz > 0, "channel.bandwidth_u2u_hz", "must be positive");
  require(ch.noise_psd_u2g > 0, "channel.noise_psd_u2g", "must be positive");
  require(ch.noise_psd_u2u > 0, "channel.noise_psd_u2u", "must be positive");
  require(ch.carrier_hz > 0, "channel.carrier_hz", "must be positive");
  require(ch.light_speed_mps > 0, "channel.light_speed_mps", "must be positive");
  require(ch.gain_nlos > 0, "channel.gain_nlos", "must be positive");
  require(ch.gain_nlos <= ch.gain_los, "channel.gain_los", "must be at least gain_nlos");
  require(ch.antenna_gain_tx > 0, "channel.antenna_gain_tx", "must be positive");
  require(ch.antenna_gain_rx > 0, "channel.antenna_gain_rx", "must be positive");

  for (int k = 0; k < kTaskClassCount; ++k) {
    require(c.compute.gamma_per_class[k] > 0, "compute.gamma_per_class", "must be positive");
  }
  require(c.compute.overhead_s >= 0, "compute.overhead_s", "must be nonnegative");

  const auto& l = c.learn;
  require(l.actor_lr >= 0, "learn.actor_lr", "must be nonnegative");
  require(l.critic_lr >= 0, "learn.critic_lr", "must be nonnegative");
  require(l.tau_soft > 0 && l.tau_soft <= 1, "learn.tau_soft", "must be in (0, 1]");
  require(l.gamma >= 0 && l.gamma < 1, "learn.gamma", "must be in [0, 1)");
  require(l.batch_size > 0, "learn.batch_size", "must be positive");
  require(l.entropy_alpha >= 0, "learn.entropy_alpha", "must be nonnegative");
  require(l.replay_capacity > 0, "learn.replay_capacity", "must be positive");
  require(l.t0_sync >= 1, "learn.t0_sync", "must be at least 1");
  require(l.lambda_decay >= 0, "learn.lambda_decay", "must be nonnegative");
  require(l.move_energy_scale >= 0, "learn.move_energy_scale", "must be nonnegative");
  require(l.process_energy_per_byte > 0, "learn.process_energy_per_byte", "must be positive");

  require(c.env.decision_dt_s > 0, "env.decision_dt_s", "must be positive");
  require(c.env.horizon_steps > 0, "env.horizon_steps", "must be positive");
  require(c.env.k_candidates > 0, "env.k_candidates", "must be positive");
  require(c.env.max_pending >= 0, "env.max_pending", "must be nonnegative");

  require(!c.network.hidden_sizes.empty(), "network.hidden_sizes", "must not be empty");
  for (int h : c.network.hidden_sizes) require(h > 0, "network.hidden_sizes", "must be positive");

  require(c.training.episodes >= 0, "training.episodes", "must be nonnegative");
  require(c.training.eval_episodes >= 1, "training.eval_episodes", "must be at least 1");
  require(c.training.warmup_steps >= 0, "training.warmup_steps", "must be nonnegative");
  require(c.training.utd_ratio >= 0, "training.utd_ratio", "must be nonnegative");

  double fraction_sum = 0.0;
  for (int k = 0; k < kTaskClassCount; ++k) {
    const auto& cl = c.classes[k];
    const std::string base = "task_classes." + std::to_string(k + 1) + ".";
    require(cl.fraction >= 0, base + "fraction", "must be nonnegative");
    require(cl.size_min_bytes > 0, base + "size_min_bytes", "must be positive");
    require(cl.size_min_bytes <= cl.size_max_bytes, base + "size_max_bytes",
            "must be at least size_min_bytes");
    require(cl.dwell_min_s >= 0, base + "dwell_min_s", "must be nonnegative");
    require(cl.dwell_min_s <= cl.dwell_max_s, base + "dwell_max_s",
            "must be at least dwell_min_s");
    require(cl.priority > 0, base + "priority", "must be positive");
    require(cl.value.k_m >= 0, base + "value.k_m", "must be nonnegative");
    require(cl.value.r_m >= 0, base + "value.r_m", "must be nonnegative");
    fraction_sum += cl.fraction;
  }
  require(std::abs(fraction_sum - 1.0) < 1e-9, "task_classes", "fractions must sum to 1");
  require(c.classes[0].priority > c.classes[1].priority &&
              c.classes[1].priority > c.classes[2].priority,
          "task_classes", "priorities must strictly decrease from class 1 to class 3");
  require(c.density.clusters >= 0, "density.clusters", "must be nonnegative");
  require(c.density.cluster_fraction >= 0 && c.density.cluster_fraction <= 1,
          "density.cluster_fraction", "must be in [0, 1]");
  require(c.density.cluster_sigma_m > 0, "density.cluster_sigma_m", "must be positive");
  require(c.task_altitude_min_m >= 0, "task_altitude_min_m", "must be nonnegative");
  require(c.task_altitude_min_m <= c.task_altitude_max_m, "task_altitude_max_m",
          "must be at least task_altitude_min_m");
  require(c.task_altitude_max_m < c.uav.z_min_m, "task_altitude_max_m",
          "must be below uav.z_min_m");
}

std::vector<int> Scenario::uavs_of_station(int station) const {
  std::vector<int> out;
  for (const auto& u : uavs) {
    if (u.home_station == station) out.push_back(u.id);
  }
  return out;
}

std::vector<Vec3> corner_stations(double a, int count) {
  const std::array<Vec3, 4> corners{Vec3{0, 0, 0}, Vec3{a, a, 0}, Vec3{a, 0, 0}, Vec3{0, a, 0}};
  return {corners.begin(), corners.begin() + std::clamp(count, 0, 4)};
}

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  validate(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Scenario s;
  s.seed = seed;
  s.region = config.region;
  s.region.station_positions = corner_stations(config.region.side_length_m, config.stations);
  s.channel = config.channel;
  s.compute = config.compute;
  s.learn = config.learn;
  s.env = config.env;

  for (int i = 0; i < config.uavs; ++i) {
    UavSpec u = config.uav;
    u.id = i;
    u.home_station = i % config.stations;
    s.uavs.push_back(u);
  }

  const double a = config.region.side_length_m;
  std::vector<Vec3> centers;
  for (int c = 0; c < config.density.clusters; ++c) {
    centers.push_back({a * (0.15 + 0.7 * unit(rng)), a * (0.15 + 0.7 * unit(rng)), 0.0});
  }
  std::normal_distribution<double> gauss(0.0, config.density.cluster_sigma_m);

  for (int m = 0; m < config.tasks; ++m) {
    Task t;
    t.id = m;

    double pick = unit(rng);
    int k = 0;
    for (; k < kTaskClassCount - 1; ++k) {
      if (pick < config.classes[k].fraction) break;
      pick -= config.classes[k].fraction;
    }
    const auto& cl = config.classes[k];
    t.cls = static_cast<TaskClass>(k + 1);
    t.priority = cl.priority;
    t.value = cl.value;
    t.data_size_bytes = cl.size_min_bytes + (cl.size_max_bytes - cl.size_min_bytes) * unit(rng);
    t.dwell_time_s = cl.dwell_min_s + (cl.dwell_max_s - cl.dwell_min_s) * unit(rng);

    const bool clustered = !centers.empty() && unit(rng) < config.density.cluster_fraction;
    if (clustered) {
      const auto& c = centers[static_cast<std::size_t>(unit(rng) * centers.size()) %
                              centers.size()];
      t.position.x = std::clamp(c.x + gauss(rng), 0.0, a);
      t.position.y = std::clamp(c.y + gauss(rng), 0.0, a);
    } else {
      t.position.x = a * unit(rng);
      t.position.y = a * unit(rng);
    }
    t.position.z = config.task_altitude_min_m +
                   (config.task_altitude_max_m - config.task_altitude_min_m) * unit(rng);
    s.tasks.push_back(t);
  }
  return s;
}

}  // namespace uavsim
