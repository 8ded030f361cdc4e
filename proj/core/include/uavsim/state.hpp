#pragma once

#include <deque>
#include <string>
#include <vector>

#include "uavsim/physics.hpp"
#include "uavsim/scenario.hpp"

namespace uavsim {

enum class Phase { AtStation, Transit, Collecting, Returning, Landed };
enum class TaskStatus { Unassigned, Assigned, Collected, PartiallyProcessed, Completed };

std::string phase_name(Phase p);
std::string task_status_name(TaskStatus s);

struct PlannedStop {
  int task_id = 0;
  double beta = 0.0;  // onboard fraction fixed at insertion

  friend bool operator==(const PlannedStop&, const PlannedStop&) = default;
};

// Onboard processing of one collected task.
struct Job {
  int task_id = 0;
  double beta = 0.0;
  double duration_s = 0.0;
  double energy_J = 0.0;
  double elapsed_s = 0.0;
  double billed_J = 0.0;

  friend bool operator==(const Job&, const Job&) = default;
};

struct UavState {
  int id = 0;
  int station = 0;
  Vec3 position;
  Phase phase = Phase::AtStation;

  double flight_capacity_J = 0.0;
  double process_capacity_J = 0.0;
  double flight_spent_J = 0.0;
  double process_spent_J = 0.0;
  double storage_free_bytes = 0.0;
  double flops_left = 0.0;  // remaining (e) budget

  // Budget already promised to planned-but-uncollected stops.
  double reserved_process_J = 0.0;
  double reserved_flops = 0.0;
  double reserved_storage_bytes = 0.0;

  std::vector<PlannedStop> plan;  // plan[0] is the current target while in Transit
  int collecting_task = -1;
  double collecting_beta = 0.0;
  bool return_requested = false;
  bool idle = false;  // airborne with nothing to do, hovering in place

  std::deque<Segment> motion;
  double segment_elapsed_s = 0.0;

  std::deque<Job> jobs;

  bool launched = false;
  double landed_time_s = -1.0;
  std::vector<PlannedStop> executed;  // collected tasks, in order

  double flight_left_J() const { return flight_capacity_J - flight_spent_J; }
  double process_left_J() const { return process_capacity_J - process_spent_J; }
  bool airborne() const { return phase != Phase::AtStation && phase != Phase::Landed; }
  bool can_accept(int max_pending) const {
    return phase != Phase::Returning && phase != Phase::Landed && !return_requested &&
           static_cast<int>(plan.size()) < max_pending;
  }

  friend bool operator==(const UavState&, const UavState&) = default;
};

struct TaskState {
  TaskStatus status = TaskStatus::Unassigned;
  int claimed_by = -1;  // UAV that arrived first
  double processed_fraction = 0.0;

  friend bool operator==(const TaskState&, const TaskState&) = default;
};

struct UavSummary {
  Vec3 position;
  double battery_fraction = 0.0;
  double availability = 0.0;  // 1 if able to take tasks, else 0
  Phase phase = Phase::AtStation;

  friend bool operator==(const UavSummary&, const UavSummary&) = default;
};

// What one station last heard about another.
struct PeerEntry {
  int last_update_step = 0;
  std::vector<UavSummary> uavs;
  std::vector<int> planned;    // task ids, sorted
  std::vector<int> collected;  // task ids, sorted

  friend bool operator==(const PeerEntry&, const PeerEntry&) = default;
};

struct StationBeliefs {
  int owner = 0;
  std::vector<PeerEntry> peers;  // indexed by station id; the owner's slot is unused
  std::vector<char> known_taken;  // learned on arrival at an already collected task

  friend bool operator==(const StationBeliefs&, const StationBeliefs&) = default;
};

struct EnvState {
  int time_step = 0;
  std::vector<UavState> uavs;
  std::vector<TaskState> tasks;
  std::vector<StationBeliefs> stations;
  bool done = false;

  double time_s(double dt) const { return time_step * dt; }

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

}  // namespace uavsim
