#include "uavsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uavsim/error.hpp"

namespace uavsim {

double path_loss_u2g(double distance_m, const ChannelParams& params) {
  if (!(distance_m > 0.0)) throw DomainError("path loss needs a positive distance");
  const double x = 4.0 * std::numbers::pi * params.carrier_hz * distance_m / params.light_speed_mps;
  return x * x;
}

double p_los(double elevation_deg, const ChannelParams& params) {
  return 1.0 / (1.0 + params.los_a * std::exp(-params.los_b * (elevation_deg - params.los_a)));
}

double elevation_deg(const Vec3& uav_pos, const Vec3& node_pos) {
  const double h = horizontal_distance(uav_pos, node_pos);
  const double dz = std::abs(uav_pos.z - node_pos.z);
  return std::clamp(std::atan2(dz, h) * 180.0 / std::numbers::pi, 0.0, 90.0);
}

double channel_gain_u2g(const Vec3& uav_pos, const Vec3& node_pos, const ChannelParams& params) {
  const double d = euclidean_distance(uav_pos, node_pos);
  if (!(d > 0.0)) throw DomainError("channel gain needs distinct UAV and node positions");
  const double plos = p_los(elevation_deg(uav_pos, node_pos), params);
  return (plos * params.gain_los + (1.0 - plos) * params.gain_nlos) / path_loss_u2g(d, params);
}

namespace {
double shannon(double bandwidth, double power, double gain, double noise_psd) {
  return bandwidth * std::log2(1.0 + power * gain / (noise_psd * bandwidth));
}
}  // namespace

double rate_u2g(const UavSpec& uav, const Vec3& uav_pos, const Vec3& node_pos,
                const ChannelParams& params) {
  const double h = channel_gain_u2g(uav_pos, node_pos, params);
  return shannon(params.bandwidth_u2g_hz, uav.transmit_power_W, h, params.noise_psd_u2g);
}

double rate_u2u(const UavSpec& uav_i, const Vec3& pos_i, const Vec3& pos_j,
                const ChannelParams& params) {
  const double d = euclidean_distance(pos_i, pos_j);
  if (!(d > 0.0)) throw DomainError("U2U rate needs distinct UAV positions");
  const double h = params.antenna_gain_tx * params.antenna_gain_rx / path_loss_u2g(d, params);
  return shannon(params.bandwidth_u2u_hz, uav_i.transmit_power_W, h, params.noise_psd_u2u);
}

LinkBudget link_budget_u2g(const UavSpec& uav, const Vec3& uav_pos, const Vec3& node_pos,
                           const ChannelParams& params) {
  LinkBudget b;
  b.distance_m = euclidean_distance(uav_pos, node_pos);
  b.elevation_deg = elevation_deg(uav_pos, node_pos);
  b.path_loss = path_loss_u2g(b.distance_m, params);
  b.p_los = p_los(b.elevation_deg, params);
  b.gain = (b.p_los * params.gain_los + (1.0 - b.p_los) * params.gain_nlos) / b.path_loss;
  b.snr = uav.transmit_power_W * b.gain / (params.noise_psd_u2g * params.bandwidth_u2g_hz);
  b.rate_bps = params.bandwidth_u2g_hz * std::log2(1.0 + b.snr);
  return b;
}

}  // namespace uavsim
