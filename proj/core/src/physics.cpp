#include "uavsim/physics.hpp"

#include <cmath>
#include <string>

#include "uavsim/error.hpp"

namespace uavsim {

double distance_u2t(const Vec3& uav_pos, const Vec3& task_pos) {
  return horizontal_distance(uav_pos, task_pos) + std::abs(task_pos.z - uav_pos.z);
}

namespace {

void check_rotor(const RotorParams& r) {
  if (!(r.weight_N > 0 && r.n_rotors > 0 && r.air_density > 0 && r.rotor_disk_area_m2 > 0 &&
        r.thrust_coeff > 0 && r.profile_drag_coeff > 0 && r.rotor_solidity > 0 &&
        r.induced_power_factor >= 0)) {
    throw DomainError("rotor parameters must be positive");
  }
}

double blade_profile_power(const RotorParams& r) {
  const double n_rho_a = r.n_rotors * r.air_density * r.rotor_disk_area_m2;
  return std::pow(r.weight_N, 1.5) / std::sqrt(n_rho_a) * std::pow(r.thrust_coeff, -1.5) *
         (r.profile_drag_coeff / 8.0) * r.rotor_solidity;
}

double induced_power(const RotorParams& r) {
  const double n_rho_a = r.n_rotors * r.air_density * r.rotor_disk_area_m2;
  return std::pow(r.weight_N, 1.5) / std::sqrt(2.0 * n_rho_a) * (1.0 + r.induced_power_factor);
}

}  // namespace

double hover_power(const RotorParams& r) {
  check_rotor(r);
  return blade_profile_power(r) + induced_power(r);
}

double cruise_power(const RotorParams& r, double v) {
  check_rotor(r);
  if (!(r.hover_induced_velocity_mps > 0)) throw DomainError("hover induced velocity must be positive");
  if (v < 0) throw DomainError("speed must be nonnegative");
  const double v0 = r.hover_induced_velocity_mps;
  const double v2 = v * v;
  const double blade_speed_term = 0.375 * r.profile_drag_coeff *
                                  std::sqrt(r.weight_N * r.n_rotors * r.air_density *
                                            r.rotor_disk_area_m2 / r.thrust_coeff) *
                                  r.rotor_solidity * v2;
  const double ratio = v2 / (v0 * v0);
  const double induced_factor = std::sqrt(std::sqrt(1.0 + ratio * ratio / 4.0) - ratio / 2.0);
  const double parasite = 0.5 * r.n_rotors * r.flat_plate_area_horiz_m2 * r.air_density * v2 * v;
  return blade_profile_power(r) + blade_speed_term + induced_power(r) * induced_factor + parasite;
}

double ascent_power(const RotorParams& r, double v) {
  check_rotor(r);
  if (v < 0) throw DomainError("speed must be nonnegative");
  const double q = 0.25 * r.n_rotors * r.flat_plate_area_vert_m2 * r.air_density;
  const double n_rho_a = r.n_rotors * r.air_density * r.rotor_disk_area_m2;
  const double radicand =
      (1.0 + r.flat_plate_area_vert_m2 / r.rotor_disk_area_m2) * v * v + 2.0 * r.weight_N / n_rho_a;
  return 0.5 * r.weight_N * v + q * v * v * v + (0.5 * r.weight_N + q * v * v) * std::sqrt(radicand);
}

double descent_power(const RotorParams& r, double v) {
  check_rotor(r);
  if (v < 0) throw DomainError("speed must be nonnegative");
  const double q = 0.25 * r.n_rotors * r.flat_plate_area_vert_m2 * r.air_density;
  const double n_rho_a = r.n_rotors * r.air_density * r.rotor_disk_area_m2;
  const double radicand =
      (1.0 - r.flat_plate_area_vert_m2 / r.rotor_disk_area_m2) * v * v + 2.0 * r.weight_N / n_rho_a;
  if (radicand < 0) {
    throw DomainError("descent power undefined at speed " + std::to_string(v) +
                      " m/s: negative radicand");
  }
  return 0.5 * r.weight_N * v - q * v * v * v + (0.5 * r.weight_N - q * v * v) * std::sqrt(radicand);
}

PowerProfile make_power_profile(const UavSpec& uav) {
  PowerProfile p;
  p.p_hover_W = hover_power(uav.rotor);
  p.p_cruise_W = cruise_power(uav.rotor, uav.cruise_speed_mps);
  p.p_cruise_low_W = cruise_power(uav.rotor, uav.cruise_low_speed_mps);
  p.p_ascent_W = ascent_power(uav.rotor, uav.ascend_speed_mps);
  p.p_descent_W = descent_power(uav.rotor, uav.descend_speed_mps);
  p.t_ascend_s = std::abs(uav.z_min_m - uav.z_max_m) / uav.ascend_speed_mps;
  p.t_descend_s = std::abs(uav.z_max_m - uav.z_min_m) / uav.descend_speed_mps;
  if (!(p.p_hover_W > 0 && p.p_cruise_W > 0 && p.p_cruise_low_W > 0 && p.p_ascent_W > 0)) {
    throw DomainError("power profile has a nonpositive power");
  }
  if (p.p_descent_W < 0) {
    throw DomainError("descent power is negative at " + std::to_string(uav.descend_speed_mps) +
                      " m/s");
  }
  return p;
}

Vec3 edge_link_position(const Task& task, const UavSpec& uav) {
  return {task.position.x, task.position.y, task.position.z + uav.z_min_m};
}

std::vector<Segment> collection_segments(const Task& task, const UavSpec& uav,
                                         const PowerProfile& profile, double link_rate_bps) {
  const Vec3 top = task_waypoint(task, uav);
  double bottom_z = uav.z_min_m;
  double t_down = profile.t_descend_s;
  double t_up = profile.t_ascend_s;
  double dwell_power = 0.0;
  double dwell_time = task.dwell_time_s;
  switch (task.cls) {
    case TaskClass::UavVideo:
      dwell_power = profile.p_cruise_low_W;
      break;
    case TaskClass::EdgeVideo:
      if (!(link_rate_bps > 0.0)) throw DomainError("edge video collection needs a positive link rate");
      bottom_z = 0.0;
      t_down = uav.z_max_m / uav.descend_speed_mps;
      t_up = uav.z_max_m / uav.ascend_speed_mps;
      dwell_power = profile.p_hover_W;
      dwell_time = task.data_size_bytes * 8.0 / link_rate_bps;
      break;
    case TaskClass::SensorData:
      dwell_power = profile.p_cruise_W;
      break;
  }
  const Vec3 bottom{top.x, top.y, bottom_z};
  return {Segment{top, bottom, profile.p_descent_W, t_down},
          Segment{bottom, bottom, dwell_power, dwell_time},
          Segment{bottom, top, profile.p_ascent_W, t_up}};
}

double task_energy(const Task& task, const UavSpec& uav, const PowerProfile& profile,
                   double link_rate_bps) {
  double e = 0.0;
  for (const auto& s : collection_segments(task, uav, profile, link_rate_bps)) e += s.energy_J();
  return e;
}

double task_duration(const Task& task, const UavSpec& uav, double link_rate_bps) {
  switch (task.cls) {
    case TaskClass::EdgeVideo:
      if (!(link_rate_bps > 0.0)) throw DomainError("edge video collection needs a positive link rate");
      return uav.z_max_m / uav.descend_speed_mps + task.data_size_bytes * 8.0 / link_rate_bps +
             uav.z_max_m / uav.ascend_speed_mps;
    default:
      return (uav.z_max_m - uav.z_min_m) / uav.descend_speed_mps + task.dwell_time_s +
             (uav.z_max_m - uav.z_min_m) / uav.ascend_speed_mps;
  }
}

std::vector<Segment> leg_segments(const Vec3& from, const Vec3& to, const UavSpec& uav,
                                  const PowerProfile& profile) {
  std::vector<Segment> out;
  const double h = horizontal_distance(from, to);
  const double dz = to.z - from.z;
  if (dz > 0) {
    const Vec3 up{from.x, from.y, to.z};
    out.push_back({from, up, profile.p_ascent_W, dz / uav.ascend_speed_mps});
    if (h > 0) out.push_back({up, to, profile.p_cruise_W, h / uav.cruise_speed_mps});
  } else {
    const Vec3 over{to.x, to.y, from.z};
    if (h > 0) out.push_back({from, over, profile.p_cruise_W, h / uav.cruise_speed_mps});
    if (dz < 0) out.push_back({over, to, profile.p_descent_W, -dz / uav.descend_speed_mps});
  }
  return out;
}

double leg_flight_energy(const Vec3& from, const Vec3& to, const UavSpec& uav,
                         const PowerProfile& profile) {
  const double h = horizontal_distance(from, to);
  const double dz = to.z - from.z;
  double e = h / uav.cruise_speed_mps * profile.p_cruise_W;
  if (dz > 0) e += dz / uav.ascend_speed_mps * profile.p_ascent_W;
  if (dz < 0) e += -dz / uav.descend_speed_mps * profile.p_descent_W;
  return e;
}

}  // namespace uavsim
