#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "uavsim/error.hpp"
#include "uavsim/physics.hpp"
#include "uavsim/scenario.hpp"

namespace uavsim {

/// Arc angle cap; ln-load ratios beyond this are clamped with a one-time warning.
inline constexpr double kMaxCentralAngle = 3.141592653589793 - 1e-9;

/// max(0, ln(C_n S_n / C_m S_m) - 1), clamped below pi. Throws DomainError on
/// nonpositive loads.
double central_angle(double load_n, double load_m);

/// Inter-task distance inflated by theta / (2 sin(theta/2)); Euclidean when theta = 0.
/// C is the full-task FLOP count and S the data size. Not symmetric.
double curved_distance(const Task& task_n, const Task& task_m, const ComputeParams& compute);

struct RouteStop {
  int task_id = 0;
  double beta = 0.0;  // onboard fraction p_{i,m}

  friend bool operator==(const RouteStop&, const RouteStop&) = default;
};

struct Route {
  int uav_id = 0;
  int depot = 0;
  std::vector<RouteStop> stops;
  double total_distance_m = 0.0;  // Euclidean depot -> stops -> depot
  double curved_length_m = 0.0;   // curved between tasks, Euclidean to/from the depot
  double flight_energy_J = 0.0;
  double process_energy_J = 0.0;
  double storage_used_bytes = 0.0;
  double flops = 0.0;
};

struct Assignment {
  std::map<int, Route> routes;  // keyed by UAV id
  std::set<int> unassigned;

  std::size_t assigned_count() const;
};

enum class Constraint {
  Uniqueness,          // (b) / Eq. 21
  FlightEnergy,        // (c) / Eq. 18
  Storage,             // (d) / Eq. 20
  ProcessingCapacity,  // (e)
  ProcessingEnergy,    // (f) / Eq. 19
  ProcessingFraction,  // p_{i,m} in [0, 1]
};

std::string constraint_name(Constraint c);

struct Violation {
  Constraint constraint;
  int uav_id = -1;
  int task_id = -1;
  double amount = 0.0;
  double limit = 0.0;
};

struct FeasibilityReport {
  std::vector<Violation> violations;
  bool feasible() const { return violations.empty(); }
  bool has(Constraint c) const;
  std::string summary() const;
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(FeasibilityReport report)
      : Error("infeasible assignment: " + report.summary()), report_(std::move(report)) {}
  const FeasibilityReport& report() const noexcept { return report_; }

 private:
  FeasibilityReport report_;
};

/// Precomputed per-UAV and per-task costs shared by routing, baselines and the env.
class CostModel {
 public:
  explicit CostModel(const Scenario& scenario);

  const Scenario& scenario() const { return *scenario_; }
  int uav_count() const { return static_cast<int>(scenario_->uavs.size()); }
  int task_count() const { return static_cast<int>(scenario_->tasks.size()); }

  const PowerProfile& profile(int uav) const { return profiles_[uav]; }
  double collection_energy(int uav, int task) const { return collect_energy_[idx(uav, task)]; }
  double collection_time(int uav, int task) const { return collect_time_[idx(uav, task)]; }
  double link_rate(int uav, int task) const { return link_rate_[idx(uav, task)]; }
  double curved(int from_task, int to_task) const;
  double task_load(int task) const { return load_[task]; }
  double full_process_energy(int task) const { return full_energy_[task]; }
  double full_flops(int task) const { return full_flops_[task]; }
  /// FLOP budget for constraint (e): capacity times mission duration.
  double flops_budget(int uav) const { return flops_budget_[uav]; }
  double value(int task) const { return values_[task]; }

  Vec3 depot(int uav) const;
  Vec3 waypoint(int uav, int task) const;

 private:
  std::size_t idx(int uav, int task) const {
    return static_cast<std::size_t>(uav) * scenario_->tasks.size() + task;
  }

  const Scenario* scenario_;
  std::vector<PowerProfile> profiles_;
  std::vector<double> collect_energy_, collect_time_, link_rate_;
  std::vector<double> load_, full_energy_, full_flops_, values_, flops_budget_;
  std::vector<double> curved_;
};

/// Resources used by a route with explicit onboard fractions, starting from full budgets.
struct RouteEval {
  double flight_energy_J = 0.0;
  double process_energy_J = 0.0;
  double storage_bytes = 0.0;
  double flops = 0.0;
  double euclidean_length_m = 0.0;
  double curved_length_m = 0.0;
};

RouteEval evaluate_route(const CostModel& cm, int uav, const std::vector<RouteStop>& stops);

/// Onboard fractions chosen greedily in visiting order from the given remaining budgets.
std::vector<double> greedy_betas(const CostModel& cm, int uav, const std::vector<int>& order,
                                 double energy_left, double flops_left);

/// Builds a route over `order` with greedy fractions and cached totals.
Route make_route(const CostModel& cm, int uav, const std::vector<int>& order);

bool route_within_budgets(const CostModel& cm, int uav, const RouteEval& eval);

/// Curved route length through `order` (Euclidean first/last legs).
double curved_route_length(const CostModel& cm, int uav, const std::vector<int>& order);

/// Throws ValidationError on unknown UAV/task ids or a broken partition.
FeasibilityReport check_feasible(const Assignment& assignment, const Scenario& scenario);
FeasibilityReport check_feasible(const Assignment& assignment, const CostModel& cm);

/// Sum of assigned task values minus move_energy_scale * total curved length.
/// Throws InfeasibleError when the assignment violates a constraint.
double objective(const Assignment& assignment, const Scenario& scenario);
double objective(const Assignment& assignment, const CostModel& cm);

/// Empty assignment (all tasks unassigned, no routes).
Assignment empty_assignment(const Scenario& scenario);

/// Globally optimal assignment for small instances. Throws Error when the task count
/// exceeds max_tasks.
Assignment solve_exact(const Scenario& scenario, int max_tasks = 8);

/// Nearest-neighbour construction under the curved metric, then 2-opt.
std::vector<int> order_route(const CostModel& cm, int uav, std::vector<int> tasks);

}  // namespace uavsim
