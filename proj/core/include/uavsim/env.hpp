#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavsim/coordination.hpp"
#include "uavsim/routing.hpp"
#include "uavsim/state.hpp"

namespace uavsim {

enum class ControlMode { Distributed, Centralized };

/// Fixed action layout per UAV: Noop, Return, then one slot per candidate.
inline constexpr int kActionNoop = 0;
inline constexpr int kActionReturn = 1;
inline constexpr int kFirstCandidateAction = 2;

struct ProgressedTask {
  int priority = 1;
  double completion_ratio = 0.0;  // CR_m
  double process_energy_J = 0.0;
};

/// Sum over progressed tasks of C_t (mu (e^{omega CR} - 1) / 3 * Pr - eps E) * Phi.
double reward_fn(const std::vector<ProgressedTask>& tasks, double collection_rate,
                 const LearnParams& learn);

struct Candidate {
  int task_id = -1;
  int insert_at = 0;               // index into the UAV's plan
  double beta = 0.0;               // onboard fraction the stop would carry
  double marginal_energy_J = 0.0;  // extra flight energy of the extended route
  double distance_m = 0.0;         // horizontal distance from the planning anchor
};

struct CollectionEvent {
  int task_id = 0;
  int uav_id = 0;
  double time_s = 0.0;
};

struct CompletionEvent {
  int task_id = 0;
  int uav_id = 0;
  int agent = 0;
  double completion_ratio = 0.0;
  double energy_J = 0.0;
  double time_s = 0.0;
  bool partial = false;  // cut off by the horizon
};

struct AssignmentEvent {
  int task_id = 0;
  int uav_id = 0;
  int agent = 0;
  int insert_at = 0;
  double beta = 0.0;
};

struct LandingEvent {
  int uav_id = 0;
  double time_s = 0.0;
  bool forced = false;
};

struct StepInfo {
  int step = 0;  // time step after the transition
  std::vector<std::vector<int>> actions;
  std::vector<double> rewards;
  std::vector<double> collection_rate_believed;
  std::vector<CollectionEvent> collections;
  std::vector<CollectionEvent> duplicates;
  std::vector<CompletionEvent> completions;
  std::vector<AssignmentEvent> assignments;
  std::vector<Release> releases;
  std::vector<ShareEvent> share_events;
  std::vector<LandingEvent> landings;
  std::vector<double> flight_left_J;
  std::vector<double> process_left_J;
  std::vector<double> storage_free_bytes;
  int same_agent_conflicts = 0;
  int duplicate_planned = 0;
  bool done = false;
  std::string digest;
};

struct EnvOptions {
  ControlMode mode = ControlMode::Distributed;
  /// Static plans from assign_route: UAVs head home once their plan is empty, and the
  /// episode ends when every UAV has landed or stayed home and processing has drained.
  bool static_execution = false;
};

class Env {
 public:
  Env(Scenario scenario, EnvOptions options = {});
  Env(const Env&) = delete;  // the cost model points into scenario_
  Env& operator=(const Env&) = delete;

  const EnvState& reset(std::uint64_t seed = 0);

  const Scenario& scenario() const { return scenario_; }
  const CostModel& cost_model() const { return cm_; }
  const EnvState& state() const { return state_; }
  const EnvOptions& options() const { return options_; }
  std::uint64_t seed() const { return seed_; }
  bool done() const { return state_.done; }

  int agent_count() const { return static_cast<int>(agents_.size()); }
  /// UAV ids controlled by an agent, in action order.
  const std::vector<int>& agent_uavs(int agent) const;
  int action_count() const { return kFirstCandidateAction + scenario_.env.k_candidates; }
  int obs_dim(int agent) const;

  /// Values in [-1, 1]. Distributed agents see only their own UAVs plus beliefs.
  std::vector<double> observe(int agent) const;
  /// Row-major [uav][action], 1 = allowed. Noop is always allowed.
  std::vector<char> action_mask(int agent) const;
  const std::vector<Candidate>& candidates(int agent, int local_uav) const;

  /// One decision epoch. actions[agent][local_uav]. Throws ContractViolation on a masked
  /// action or a malformed action vector.
  const StepInfo& step(const std::vector<std::vector<int>>& actions);

  /// Static execution: replaces a UAV's plan (UAV must still be at its station).
  void assign_route(int uav, const std::vector<PlannedStop>& stops);

  /// All-Noop action vectors.
  std::vector<std::vector<int>> noop_actions() const;

  const StepInfo& last_info() const { return info_; }
  double true_collection_rate() const;
  std::string state_digest() const;

 private:
  struct Anchor {
    double committed_J = 0.0;
    Vec3 position;
    int task = -1;            // task whose waypoint is the anchor, or -1 for the UAV itself
    std::size_t first_slot = 0;  // first plan index open for insertion
  };

  int agent_of_uav(int uav) const { return uav_agent_[uav]; }
  std::vector<char> blocked_for(int agent) const;
  double believed_collection_rate(int agent) const;
  Anchor anchor_of(const UavState& u) const;
  double route_energy(const UavState& u, const Anchor& a, const std::vector<PlannedStop>& plan) const;
  bool evaluate_insertion(const UavState& u, int task, Candidate& out) const;
  void refresh_candidates();
  void append_block(std::vector<double>& obs, int agent, int station, bool truth) const;

  void launch_towards(UavState& u, int task);
  void start_return(UavState& u);
  void after_stop(UavState& u, double now, double step_end);
  void unreserve(UavState& u, const PlannedStop& stop);
  void advance(UavState& u, double to_time);
  void handle_motion_done(UavState& u, double now, double step_end);
  void apply_release(const Release& r, double now);
  void force_return_all(double now);
  bool loiter_ok(const UavState& u, double duration_s) const;
  void check_done();
  void update_status(int task);
  void process_jobs(UavState& u, double from, double to);

  Scenario scenario_;
  EnvOptions options_;
  CostModel cm_;
  std::uint64_t seed_ = 0;
  EnvState state_;
  StepInfo info_;
  std::vector<std::vector<int>> agents_;
  std::vector<int> agent_station_;  // -1 for the centralized agent
  std::vector<int> uav_agent_;
  std::vector<double> clock_;  // per-UAV simulated time within the current step
  std::vector<int> uav_local_;  // index of a UAV within its agent's list
  std::vector<int> plan_count_;  // UAV plans holding each task
  double max_task_bytes_ = 1.0;
  std::vector<std::vector<std::vector<Candidate>>> candidates_;  // [agent][local uav]
};

}  // namespace uavsim
