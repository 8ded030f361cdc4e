#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "uavsim/scenario.hpp"

namespace uavsim {

struct ProcessingPlan {
  int task_id = 0;
  double beta_onboard = 0.0;
  double flops_required = 0.0;
  double delay_s = 0.0;
  double energy_J = 0.0;
  double residual_bytes = 0.0;
};

/// beta * gamma_class * size. Throws DomainError when beta is outside [0, 1].
double task_flops(const Task& task, double beta, const ComputeParams& params);

/// N_cores * f_CPU * FLOPs-per-cycle.
double uav_capacity(const UavSpec& uav);

/// flops / capacity + overhead.
double processing_delay(double flops, const UavSpec& uav, const ComputeParams& params);

double processing_energy(const Task& task, double p_fraction, const LearnParams& learn);

double residual_storage(const Task& task, double p_fraction);

/// Largest onboard fraction that fits both the remaining processing energy and the
/// remaining FLOP budget: min(1, E_left / E_full, F_left / F_full).
double greedy_beta(double full_energy, double energy_left, double full_flops, double flops_left);

ProcessingPlan plan_processing(const Task& task, double beta, const UavSpec& uav,
                               const ComputeParams& compute, const LearnParams& learn);

struct TimingSample {
  double video_length_s = 0.0;
  double measured_delay_s = 0.0;
};

struct VideoCalibration {
  double gamma_flops_per_byte = 0.0;
  double overhead_s = 0.0;
};

/// Reads a CSV with header `video_length_s,measured_delay_s`.
std::vector<TimingSample> load_timing_csv(const std::filesystem::path& path);

/// Least-squares fit of delay = gamma * (bitrate * length) / capacity + overhead.
VideoCalibration fit_video_gamma(std::span<const TimingSample> samples,
                                 double video_bytes_per_second, double capacity_flops);

}  // namespace uavsim
