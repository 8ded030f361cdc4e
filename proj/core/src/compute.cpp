#include "uavsim/compute.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "uavsim/error.hpp"

namespace uavsim {

double task_flops(const Task& task, double beta, const ComputeParams& params) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("onboard fraction must lie in [0, 1]");
  return beta * params.gamma_per_class[class_index(task.cls)] * task.data_size_bytes;
}

double uav_capacity(const UavSpec& uav) {
  return static_cast<double>(uav.n_cores) * uav.cpu_hz * uav.flops_per_cycle;
}

double processing_delay(double flops, const UavSpec& uav, const ComputeParams& params) {
  const double cap = uav_capacity(uav);
  if (!(cap > 0.0)) throw DomainError("UAV processing capacity is zero");
  if (flops < 0.0) throw DomainError("FLOP count must be nonnegative");
  return flops / cap + params.overhead_s;
}

double processing_energy(const Task& task, double p_fraction, const LearnParams& learn) {
  return task.data_size_bytes * p_fraction * learn.process_energy_per_byte;
}

double residual_storage(const Task& task, double p_fraction) {
  return task.data_size_bytes * (1.0 - p_fraction);
}

double greedy_beta(double full_energy, double energy_left, double full_flops, double flops_left) {
  double beta = 1.0;
  if (full_energy > 0.0) beta = std::min(beta, std::max(0.0, energy_left) / full_energy);
  if (full_flops > 0.0) beta = std::min(beta, std::max(0.0, flops_left) / full_flops);
  return beta;
}

ProcessingPlan plan_processing(const Task& task, double beta, const UavSpec& uav,
                               const ComputeParams& compute, const LearnParams& learn) {
  ProcessingPlan p;
  p.task_id = task.id;
  p.beta_onboard = beta;
  p.flops_required = task_flops(task, beta, compute);
  p.delay_s = beta > 0.0 ? processing_delay(p.flops_required, uav, compute) : 0.0;
  p.energy_J = processing_energy(task, beta, learn);
  p.residual_bytes = residual_storage(task, beta);
  return p;
}

std::vector<TimingSample> load_timing_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open calibration fixture " + path.string());
  std::vector<TimingSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.find("video_length_s") != std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    TimingSample s;
    if (!(ss >> s.video_length_s >> s.measured_delay_s)) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno), "malformed row");
    }
    out.push_back(s);
  }
  return out;
}

VideoCalibration fit_video_gamma(std::span<const TimingSample> samples,
                                 double video_bytes_per_second, double capacity_flops) {
  if (samples.size() < 2) throw DomainError("calibration needs at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& s : samples) {
    sx += s.video_length_s;
    sy += s.measured_delay_s;
    sxx += s.video_length_s * s.video_length_s;
    sxy += s.video_length_s * s.measured_delay_s;
  }
  const double n = static_cast<double>(samples.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw DomainError("calibration samples need distinct video lengths");
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  return {slope * capacity_flops / video_bytes_per_second, intercept};
}

}  // namespace uavsim
