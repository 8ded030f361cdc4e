#pragma once

#include "uavsim/geometry.hpp"
#include "uavsim/scenario.hpp"

namespace uavsim {

struct LinkBudget {
  double distance_m = 0.0;
  double elevation_deg = 0.0;
  double path_loss = 0.0;
  double p_los = 0.0;
  double gain = 0.0;
  double snr = 0.0;
  double rate_bps = 0.0;
};

/// Free-space loss (4 pi f_c d / c)^2. Throws DomainError for d <= 0.
double path_loss_u2g(double distance_m, const ChannelParams& params);

/// Sigmoid LoS probability in the elevation angle (degrees).
double p_los(double elevation_deg, const ChannelParams& params);

/// atan2(height difference, horizontal distance) in degrees, clamped to [0, 90].
double elevation_deg(const Vec3& uav_pos, const Vec3& node_pos);

double channel_gain_u2g(const Vec3& uav_pos, const Vec3& node_pos, const ChannelParams& params);

double rate_u2g(const UavSpec& uav, const Vec3& uav_pos, const Vec3& node_pos,
                const ChannelParams& params);

/// Free-space U2U link with optional antenna gains (default unity).
double rate_u2u(const UavSpec& uav_i, const Vec3& pos_i, const Vec3& pos_j,
                const ChannelParams& params);

LinkBudget link_budget_u2g(const UavSpec& uav, const Vec3& uav_pos, const Vec3& node_pos,
                           const ChannelParams& params);

}  // namespace uavsim
