#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uavsim/geometry.hpp"

namespace uavsim {

enum class TaskClass : int { UavVideo = 1, EdgeVideo = 2, SensorData = 3 };

inline constexpr int kTaskClassCount = 3;
inline int class_index(TaskClass c) { return static_cast<int>(c) - 1; }

struct TaskValueParams {
  double k_m = 1.0;      // intrinsic value
  double r_m = 0.5;      // characteristic parameter
  double tau_exp = 1.0;  // exponent on r_m

  friend bool operator==(const TaskValueParams&, const TaskValueParams&) = default;
};

struct Task {
  int id = 0;
  Vec3 position;
  TaskClass cls = TaskClass::SensorData;
  int priority = 1;
  double data_size_bytes = 0.0;
  double dwell_time_s = 0.0;  // recording time for classes 1 and 3, 0 for class 2
  TaskValueParams value;

  friend bool operator==(const Task&, const Task&) = default;
};

/// Intrinsic value k_m * (1 + r_m^tau). The assignment indicator is applied by callers.
double task_value(const Task& task);

struct RegionSpec {
  double side_length_m = 1500.0;
  std::vector<Vec3> station_positions;
  double grid_resolution_m = 50.0;

  friend bool operator==(const RegionSpec&, const RegionSpec&) = default;
};

struct RotorParams {
  double weight_N = 20.0;
  int n_rotors = 4;
  double air_density = 1.225;
  double rotor_disk_area_m2 = 0.05;
  double thrust_coeff = 0.1;
  double profile_drag_coeff = 0.01;
  double rotor_solidity = 0.05;
  double induced_power_factor = 0.1;
  double hover_induced_velocity_mps = 6.39;
  double flat_plate_area_horiz_m2 = 0.01;
  double flat_plate_area_vert_m2 = 0.02;

  friend bool operator==(const RotorParams&, const RotorParams&) = default;
};

struct UavSpec {
  int id = 0;
  int home_station = 0;
  double battery_flight_J = 90e3;
  double battery_process_J = 4e3;
  double storage_bytes = 2e9;
  int n_cores = 4;
  double cpu_hz = 1.8e9;
  double flops_per_cycle = 4.0;
  double transmit_power_W = 5.0;
  double cruise_speed_mps = 15.0;
  double cruise_low_speed_mps = 5.0;
  double ascend_speed_mps = 3.0;
  double descend_speed_mps = 2.0;
  double z_min_m = 50.0;
  double z_max_m = 100.0;
  RotorParams rotor;

  friend bool operator==(const UavSpec&, const UavSpec&) = default;
};

struct ChannelParams {
  double bandwidth_u2g_hz = 10e6;
  double bandwidth_u2u_hz = 40e6;
  // -100 dBm of noise integrated over each band.
  double noise_psd_u2g = 1e-13 / 10e6;
  double noise_psd_u2u = 1e-13 / 40e6;
  double carrier_hz = 2e9;
  double light_speed_mps = 299792458.0;
  double los_a = 9.61;
  double los_b = 0.16;
  double gain_los = 1.0;
  double gain_nlos = 0.2;
  double antenna_gain_tx = 1.0;
  double antenna_gain_rx = 1.0;

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct ComputeParams {
  // FLOPs per byte for classes 1..3.
  std::array<double, kTaskClassCount> gamma_per_class{22500.0, 22500.0, 1e3};
  double overhead_s = 0.1;

  friend bool operator==(const ComputeParams&, const ComputeParams&) = default;
};

struct LearnParams {
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double tau_soft = 0.005;
  double gamma = 0.99;
  int batch_size = 64;
  double entropy_alpha = 0.2;
  int replay_capacity = 100000;
  int t0_sync = 10;
  double d_threshold_m = 300.0;
  double lambda_decay = 0.1;
  double reward_mu = 1.0;
  double reward_omega = 1.0;
  double reward_epsilon = 1e-5;
  double reward_phi = 1.0;
  double alpha_weight = 1.0;
  double beta_weight = 1.0;
  double move_energy_scale = 1e-3;
  double process_energy_per_byte = 5e-6;

  friend bool operator==(const LearnParams&, const LearnParams&) = default;
};

struct EnvParams {
  double decision_dt_s = 30.0;
  int horizon_steps = 60;
  int k_candidates = 8;
  int max_pending = 2;
  bool sharing_enabled = true;
  bool shared_reward = false;

  friend bool operator==(const EnvParams&, const EnvParams&) = default;
};

struct NetworkParams {
  std::vector<int> hidden_sizes{128, 128};

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

struct TrainingParams {
  int episodes = 300;
  int eval_episodes = 1;
  int warmup_steps = 64;
  double utd_ratio = 1.0;
  bool vary_scenario = false;

  friend bool operator==(const TrainingParams&, const TrainingParams&) = default;
};

struct ClassGenParams {
  double fraction = 1.0 / 3.0;
  double size_min_bytes = 0.0;
  double size_max_bytes = 0.0;
  double dwell_min_s = 0.0;
  double dwell_max_s = 0.0;
  int priority = 1;
  TaskValueParams value;

  friend bool operator==(const ClassGenParams&, const ClassGenParams&) = default;
};

struct DensityParams {
  int clusters = 3;
  double cluster_fraction = 0.5;  // share of tasks drawn from Gaussian clusters
  double cluster_sigma_m = 120.0;

  friend bool operator==(const DensityParams&, const DensityParams&) = default;
};

/// Everything needed to generate a Scenario. Defaults follow the main experimental table.
struct ScenarioConfig {
  int uavs = 16;
  int tasks = 110;
  int stations = 4;
  RegionSpec region;  // station_positions is derived from `stations` at generation
  UavSpec uav;        // template copied for every UAV
  ChannelParams channel;
  ComputeParams compute;
  LearnParams learn;
  EnvParams env;
  NetworkParams network;
  TrainingParams training;
  std::array<ClassGenParams, kTaskClassCount> classes = default_classes();
  DensityParams density;
  double task_altitude_min_m = 0.0;
  double task_altitude_max_m = 0.0;

  static std::array<ClassGenParams, kTaskClassCount> default_classes();

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Throws ValidationError naming the first offending field.
void validate(const ScenarioConfig& config);

struct Scenario {
  RegionSpec region;
  std::vector<UavSpec> uavs;
  std::vector<Task> tasks;
  ChannelParams channel;
  ComputeParams compute;
  LearnParams learn;
  EnvParams env;
  std::uint64_t seed = 0;

  int station_count() const { return static_cast<int>(region.station_positions.size()); }
  std::vector<int> uavs_of_station(int station) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Corner positions in the order (0,0), (A,A), (A,0), (0,A): two stations sit on opposite corners.
std::vector<Vec3> corner_stations(double side_length_m, int count);

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed);

}  // namespace uavsim
