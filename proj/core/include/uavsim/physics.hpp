#pragma once

#include <vector>

#include "uavsim/geometry.hpp"
#include "uavsim/scenario.hpp"

namespace uavsim {

/// Constant-power piece of flight. Position moves linearly from `from` to `to`.
struct Segment {
  Vec3 from;
  Vec3 to;
  double power_W = 0.0;
  double duration_s = 0.0;

  double energy_J() const { return power_W * duration_s; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct PowerProfile {
  double p_hover_W = 0.0;
  double p_cruise_W = 0.0;
  double p_cruise_low_W = 0.0;
  double p_ascent_W = 0.0;
  double p_descent_W = 0.0;
  double t_ascend_s = 0.0;   // z_min -> z_max
  double t_descend_s = 0.0;  // z_max -> z_min
};

/// Horizontal distance plus |dz| (the additive form, not the 3D norm).
double distance_u2t(const Vec3& uav_pos, const Vec3& task_pos);

double hover_power(const RotorParams& r);
double cruise_power(const RotorParams& r, double v);
double ascent_power(const RotorParams& r, double v);
/// Throws DomainError if (1 - S_perp/A) v^2 + 2W/(n rho A) goes negative.
double descent_power(const RotorParams& r, double v);

/// Evaluated once per UAV spec. Throws DomainError if a power comes out nonpositive.
PowerProfile make_power_profile(const UavSpec& uav);

/// Class-2 transfer link: the UAV hovers at z_min directly above the edge node.
Vec3 edge_link_position(const Task& task, const UavSpec& uav);

/// Collection sequence at the task's cruise waypoint (descend, collect, ascend).
/// `link_rate_bps` is only used for class 2 and must be positive there.
std::vector<Segment> collection_segments(const Task& task, const UavSpec& uav,
                                         const PowerProfile& profile, double link_rate_bps);

double task_energy(const Task& task, const UavSpec& uav, const PowerProfile& profile,
                   double link_rate_bps);

double task_duration(const Task& task, const UavSpec& uav, double link_rate_bps);

/// Climb first when the destination is higher, otherwise cruise first then descend.
std::vector<Segment> leg_segments(const Vec3& from, const Vec3& to, const UavSpec& uav,
                                  const PowerProfile& profile);

double leg_flight_energy(const Vec3& from, const Vec3& to, const UavSpec& uav,
                         const PowerProfile& profile);

/// Cruise-altitude waypoint above a task.
inline Vec3 task_waypoint(const Task& task, const UavSpec& uav) {
  return {task.position.x, task.position.y, uav.z_max_m};
}

}  // namespace uavsim
