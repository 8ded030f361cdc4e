#include "uavsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fnv.hpp"
#include "uavsim/compute.hpp"
#include "uavsim/error.hpp"

namespace uavsim {

std::string phase_name(Phase p) {
  switch (p) {
    case Phase::AtStation: return "at_station";
    case Phase::Transit: return "transit";
    case Phase::Collecting: return "collecting";
    case Phase::Returning: return "returning";
    case Phase::Landed: return "landed";
  }
  return "?";
}

std::string task_status_name(TaskStatus s) {
  switch (s) {
    case TaskStatus::Unassigned: return "unassigned";
    case TaskStatus::Assigned: return "assigned";
    case TaskStatus::Collected: return "collected";
    case TaskStatus::PartiallyProcessed: return "partially_processed";
    case TaskStatus::Completed: return "completed";
  }
  return "?";
}

double reward_fn(const std::vector<ProgressedTask>& tasks, double collection_rate,
                 const LearnParams& learn) {
  double r = 0.0;
  for (const auto& t : tasks) {
    const double gain =
        learn.reward_mu * (std::exp(learn.reward_omega * t.completion_ratio) - 1.0) / 3.0 * t.priority;
    r += collection_rate * (gain - learn.reward_epsilon * t.process_energy_J) * learn.reward_phi;
  }
  return r;
}

namespace {

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

double remaining_motion_energy(const UavState& u) {
  double e = 0.0;
  bool first = true;
  for (const auto& s : u.motion) {
    e += s.power_W * (first ? s.duration_s - u.segment_elapsed_s : s.duration_s);
    first = false;
  }
  return e;
}

Vec3 ground(const Vec3& p) { return {p.x, p.y, 0.0}; }

}  // namespace

Env::Env(Scenario scenario, EnvOptions options)
    : scenario_(std::move(scenario)), options_(options), cm_(scenario_) {
  const int nu = static_cast<int>(scenario_.uavs.size());
  for (int u = 0; u < nu; ++u) {
    const int s = scenario_.uavs[u].home_station;
    if (s < 0 || s >= scenario_.station_count()) {
      throw ValidationError("uavs[" + std::to_string(u) + "].home_station", "no such station");
    }
  }
  uav_agent_.assign(nu, 0);
  uav_local_.assign(nu, 0);
  if (options_.mode == ControlMode::Distributed) {
    for (int s = 0; s < scenario_.station_count(); ++s) {
      agents_.push_back(scenario_.uavs_of_station(s));
      agent_station_.push_back(s);
    }
  } else {
    std::vector<int> all;
    for (int s = 0; s < scenario_.station_count(); ++s) {
      for (int u : scenario_.uavs_of_station(s)) all.push_back(u);
    }
    agents_.push_back(all);
    agent_station_.push_back(-1);
  }
  for (int a = 0; a < agent_count(); ++a) {
    for (std::size_t l = 0; l < agents_[a].size(); ++l) {
      uav_agent_[agents_[a][l]] = a;
      uav_local_[agents_[a][l]] = static_cast<int>(l);
    }
  }
  for (const auto& t : scenario_.tasks) max_task_bytes_ = std::max(max_task_bytes_, t.data_size_bytes);
  reset(0);
}

const EnvState& Env::reset(std::uint64_t seed) {
  seed_ = seed;
  state_ = {};
  for (const auto& spec : scenario_.uavs) {
    UavState u;
    u.id = spec.id;
    u.station = spec.home_station;
    u.position = cm_.depot(spec.id);
    u.flight_capacity_J = spec.battery_flight_J;
    u.process_capacity_J = spec.battery_process_J;
    u.storage_free_bytes = spec.storage_bytes;
    u.flops_left = cm_.flops_budget(spec.id);
    state_.uavs.push_back(u);
  }
  state_.tasks.assign(scenario_.tasks.size(), {});
  plan_count_.assign(scenario_.tasks.size(), 0);
  clock_.assign(scenario_.uavs.size(), 0.0);
  init_beliefs(state_, scenario_);
  info_ = {};
  refresh_candidates();
  check_done();
  info_.done = state_.done;
  info_.digest = state_digest();
  return state_;
}

const std::vector<int>& Env::agent_uavs(int agent) const {
  if (agent < 0 || agent >= agent_count()) throw Error("unknown agent " + std::to_string(agent));
  return agents_[agent];
}

int Env::obs_dim(int agent) const {
  const int k = scenario_.env.k_candidates;
  const int peers = scenario_.station_count() - 1;
  auto block = [&](int n_uavs) { return n_uavs * 8 + n_uavs * k * 8 + peers * 3 + 2; };
  if (agent_station_.at(agent) >= 0) return block(static_cast<int>(agents_[agent].size()));
  int d = 0;
  for (int s = 0; s < scenario_.station_count(); ++s) {
    d += block(static_cast<int>(scenario_.uavs_of_station(s).size()));
  }
  return d;
}

std::vector<char> Env::blocked_for(int agent) const {
  const int nt = cm_.task_count();
  std::vector<char> blocked(nt, 0);
  const int station = agent_station_[agent];
  if (station < 0) {
    for (int t = 0; t < nt; ++t) {
      blocked[t] = plan_count_[t] > 0 || state_.tasks[t].claimed_by >= 0;
    }
    return blocked;
  }
  for (const auto& u : state_.uavs) {
    if (u.station != station) continue;
    for (const auto& s : u.plan) blocked[s.task_id] = 1;
    if (u.collecting_task >= 0) blocked[u.collecting_task] = 1;
    for (const auto& s : u.executed) blocked[s.task_id] = 1;
  }
  const auto& beliefs = state_.stations[station];
  for (int t = 0; t < nt; ++t) {
    if (beliefs.known_taken[t]) blocked[t] = 1;
  }
  for (int p = 0; p < scenario_.station_count(); ++p) {
    if (p == station) continue;
    for (int t : beliefs.peers[p].planned) blocked[t] = 1;
    for (int t : beliefs.peers[p].collected) blocked[t] = 1;
  }
  return blocked;
}

double Env::believed_collection_rate(int agent) const {
  const int nt = cm_.task_count();
  if (nt == 0) return 0.0;
  const int station = agent_station_[agent];
  if (station < 0) return true_collection_rate();
  std::vector<char> seen(nt, 0);
  for (const auto& u : state_.uavs) {
    if (u.station != station) continue;
    for (const auto& s : u.executed) seen[s.task_id] = 1;
  }
  const auto& beliefs = state_.stations[station];
  for (int t = 0; t < nt; ++t) {
    if (beliefs.known_taken[t]) seen[t] = 1;
  }
  for (int p = 0; p < scenario_.station_count(); ++p) {
    if (p == station) continue;
    for (int t : beliefs.peers[p].collected) seen[t] = 1;
  }
  return static_cast<double>(std::count(seen.begin(), seen.end(), 1)) / nt;
}

double Env::true_collection_rate() const {
  const int nt = cm_.task_count();
  if (nt == 0) return 0.0;
  int n = 0;
  for (const auto& t : state_.tasks) {
    n += t.status == TaskStatus::Collected || t.status == TaskStatus::PartiallyProcessed ||
         t.status == TaskStatus::Completed;
  }
  return static_cast<double>(n) / nt;
}

Env::Anchor Env::anchor_of(const UavState& u) const {
  Anchor a;
  a.position = u.position;
  if (u.phase == Phase::Collecting) {
    a.committed_J = remaining_motion_energy(u);
    a.task = u.collecting_task;
    a.position = cm_.waypoint(u.id, a.task);
  } else if (u.phase == Phase::Transit && !u.idle && !u.plan.empty()) {
    a.task = u.plan.front().task_id;
    a.committed_J = remaining_motion_energy(u) + cm_.collection_energy(u.id, a.task);
    a.position = cm_.waypoint(u.id, a.task);
    a.first_slot = 1;
  }
  return a;
}

double Env::route_energy(const UavState& u, const Anchor& a,
                         const std::vector<PlannedStop>& plan) const {
  const auto& spec = scenario_.uavs[u.id];
  const auto& profile = cm_.profile(u.id);
  double e = a.committed_J;
  Vec3 at = a.position;
  for (std::size_t i = a.first_slot; i < plan.size(); ++i) {
    const Vec3 wp = cm_.waypoint(u.id, plan[i].task_id);
    e += leg_flight_energy(at, wp, spec, profile) + cm_.collection_energy(u.id, plan[i].task_id);
    at = wp;
  }
  return e + leg_flight_energy(at, cm_.depot(u.id), spec, profile);
}

bool Env::evaluate_insertion(const UavState& u, int task, Candidate& out) const {
  const auto& tasks = scenario_.tasks;
  const Anchor a = anchor_of(u);
  const Vec3 depot = cm_.depot(u.id);
  auto cost = [&](int from, const Vec3& from_pos, int to, const Vec3& to_pos) {
    if (from >= 0 && to >= 0) return cm_.curved(from, to);
    return euclidean_distance(ground(from_pos), ground(to_pos));
  };
  std::size_t best_at = a.first_slot;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = a.first_slot; i <= u.plan.size(); ++i) {
    const int prev = i == a.first_slot ? a.task : u.plan[i - 1].task_id;
    const Vec3 prev_pos = prev >= 0 ? tasks[prev].position : a.position;
    const int next = i == u.plan.size() ? -1 : u.plan[i].task_id;
    const Vec3 next_pos = next >= 0 ? tasks[next].position : depot;
    const double c = cost(prev, prev_pos, task, tasks[task].position) +
                     cost(task, tasks[task].position, next, next_pos) -
                     cost(prev, prev_pos, next, next_pos);
    if (c < best) {
      best = c;
      best_at = i;
    }
  }
  auto extended = u.plan;
  extended.insert(extended.begin() + static_cast<std::ptrdiff_t>(best_at), PlannedStop{task, 0.0});
  const double e_new = route_energy(u, a, extended);
  if (e_new > u.flight_left_J()) return false;
  const double beta = greedy_beta(cm_.full_process_energy(task),
                                  std::max(0.0, u.process_left_J() - u.reserved_process_J),
                                  cm_.full_flops(task), std::max(0.0, u.flops_left - u.reserved_flops));
  const double residual = tasks[task].data_size_bytes * (1.0 - beta);
  if (residual > u.storage_free_bytes - u.reserved_storage_bytes) return false;
  out.task_id = task;
  out.insert_at = static_cast<int>(best_at);
  out.beta = beta;
  out.marginal_energy_J = e_new - (u.airborne() ? route_energy(u, a, u.plan) : 0.0);
  out.distance_m = horizontal_distance(a.position, tasks[task].position);
  return true;
}

void Env::refresh_candidates() {
  const int k = scenario_.env.k_candidates;
  const int nt = cm_.task_count();
  candidates_.assign(agent_count(), {});
  for (int a = 0; a < agent_count(); ++a) {
    candidates_[a].assign(agents_[a].size(), {});
    if (state_.done) continue;
    const auto blocked = blocked_for(a);
    for (std::size_t l = 0; l < agents_[a].size(); ++l) {
      const auto& u = state_.uavs[agents_[a][l]];
      if (!u.can_accept(scenario_.env.max_pending)) continue;
      const Vec3 from = anchor_of(u).position;
      std::vector<std::pair<double, int>> pool;
      for (int t = 0; t < nt; ++t) {
        if (!blocked[t]) pool.emplace_back(horizontal_distance(from, scenario_.tasks[t].position), t);
      }
      std::sort(pool.begin(), pool.end());
      auto& out = candidates_[a][l];
      for (const auto& [d, t] : pool) {
        Candidate c;
        if (evaluate_insertion(u, t, c)) out.push_back(c);
        if (static_cast<int>(out.size()) == k) break;
      }
    }
  }
}

const std::vector<Candidate>& Env::candidates(int agent, int local_uav) const {
  return candidates_.at(agent).at(local_uav);
}

std::vector<char> Env::action_mask(int agent) const {
  const auto& uavs = agent_uavs(agent);
  const int na = action_count();
  std::vector<char> mask(uavs.size() * na, 0);
  for (std::size_t l = 0; l < uavs.size(); ++l) {
    const auto& u = state_.uavs[uavs[l]];
    char* row = mask.data() + l * na;
    row[kActionNoop] = 1;
    row[kActionReturn] = !state_.done && u.airborne() && u.phase != Phase::Returning && !u.return_requested;
    const auto& cands = candidates_[agent][l];
    for (std::size_t j = 0; j < cands.size(); ++j) row[kFirstCandidateAction + j] = 1;
  }
  return mask;
}

void Env::append_block(std::vector<double>& obs, int agent, int station, bool truth) const {
  const auto& env = scenario_.env;
  const double side = scenario_.region.side_length_m;
  const int k = env.k_candidates;
  const int t = state_.time_step;
  for (int id : scenario_.uavs_of_station(station)) {
    const auto& u = state_.uavs[id];
    const auto& spec = scenario_.uavs[id];
    obs.push_back(clamp1(u.flight_left_J() / u.flight_capacity_J));
    obs.push_back(clamp1(u.process_left_J() / u.process_capacity_J));
    obs.push_back(clamp1(u.storage_free_bytes / spec.storage_bytes));
    obs.push_back(clamp1(u.position.x / side * 2.0 - 1.0));
    obs.push_back(clamp1(u.position.y / side * 2.0 - 1.0));
    obs.push_back(u.can_accept(env.max_pending) ? 1.0 : 0.0);
    obs.push_back(u.airborne() ? 1.0 : 0.0);
    obs.push_back(clamp1(static_cast<double>(u.plan.size()) / std::max(1, env.max_pending)));
  }
  for (int id : scenario_.uavs_of_station(station)) {
    const auto& u = state_.uavs[id];
    const auto& cands = candidates_[agent][uav_local_[id]];
    for (int j = 0; j < k; ++j) {
      if (j < static_cast<int>(cands.size())) {
        const auto& c = cands[j];
        const auto& task = scenario_.tasks[c.task_id];
        obs.push_back(1.0);
        obs.push_back(clamp1((task.position.x - u.position.x) / side));
        obs.push_back(clamp1((task.position.y - u.position.y) / side));
        for (int cls = 1; cls <= kTaskClassCount; ++cls) {
          obs.push_back(static_cast<int>(task.cls) == cls ? 1.0 : 0.0);
        }
        obs.push_back(clamp1(task.data_size_bytes / max_task_bytes_));
        obs.push_back(clamp1(c.marginal_energy_J / u.flight_capacity_J));
      } else {
        obs.insert(obs.end(), 8, 0.0);
      }
    }
  }
  const auto& learn = scenario_.learn;
  for (int p = 0; p < scenario_.station_count(); ++p) {
    if (p == station) continue;
    PeerEntry fresh;
    const PeerEntry* e = &fresh;
    if (truth) {
      fresh = station_snapshot(state_, scenario_, p);
    } else {
      e = &state_.stations[station].peers[p];
    }
    double avail = 0.0;
    double battery = 0.0;
    for (const auto& s : e->uavs) {
      avail += s.availability;
      battery += s.battery_fraction;
    }
    const double n = std::max<std::size_t>(1, e->uavs.size());
    const int age = t - e->last_update_step;
    obs.push_back(clamp1(decay_estimate(avail / n, e->last_update_step, t, learn.lambda_decay)));
    obs.push_back(clamp1(decay_estimate(battery / n, e->last_update_step, t, learn.lambda_decay)));
    obs.push_back(static_cast<double>(age) / (age + std::max(1, learn.t0_sync)));
  }
  obs.push_back(truth ? true_collection_rate() : believed_collection_rate(agent));
  obs.push_back(clamp1(static_cast<double>(t) / std::max(1, env.horizon_steps)));
}

std::vector<double> Env::observe(int agent) const {
  agent_uavs(agent);
  std::vector<double> obs;
  obs.reserve(obs_dim(agent));
  const int station = agent_station_[agent];
  if (station >= 0) {
    append_block(obs, agent, station, false);
  } else {
    for (int s = 0; s < scenario_.station_count(); ++s) append_block(obs, agent, s, true);
  }
  return obs;
}

std::vector<std::vector<int>> Env::noop_actions() const {
  std::vector<std::vector<int>> a;
  for (const auto& uavs : agents_) a.emplace_back(uavs.size(), kActionNoop);
  return a;
}

void Env::update_status(int task) {
  auto& ts = state_.tasks[task];
  if (ts.status == TaskStatus::Collected || ts.status == TaskStatus::PartiallyProcessed ||
      ts.status == TaskStatus::Completed) {
    return;
  }
  ts.status = (ts.claimed_by >= 0 || plan_count_[task] > 0) ? TaskStatus::Assigned : TaskStatus::Unassigned;
}

void Env::unreserve(UavState& u, const PlannedStop& stop) {
  const double e = stop.beta * cm_.full_process_energy(stop.task_id);
  const double f = stop.beta * cm_.full_flops(stop.task_id);
  const double s = scenario_.tasks[stop.task_id].data_size_bytes * (1.0 - stop.beta);
  u.reserved_process_J = std::max(0.0, u.reserved_process_J - e);
  u.reserved_flops = std::max(0.0, u.reserved_flops - f);
  u.reserved_storage_bytes = std::max(0.0, u.reserved_storage_bytes - s);
}

void Env::launch_towards(UavState& u, int task) {
  const auto& spec = scenario_.uavs[u.id];
  u.launched = true;
  u.idle = false;
  u.phase = Phase::Transit;
  const auto legs = leg_segments(u.position, cm_.waypoint(u.id, task), spec, cm_.profile(u.id));
  u.motion.assign(legs.begin(), legs.end());
  u.segment_elapsed_s = 0.0;
}

void Env::start_return(UavState& u) {
  for (const auto& stop : u.plan) {
    unreserve(u, stop);
    --plan_count_[stop.task_id];
    update_status(stop.task_id);
  }
  u.plan.clear();
  u.idle = false;
  u.return_requested = false;
  u.phase = Phase::Returning;
  const auto& spec = scenario_.uavs[u.id];
  const auto legs = leg_segments(u.position, cm_.depot(u.id), spec, cm_.profile(u.id));
  u.motion.assign(legs.begin(), legs.end());
  u.segment_elapsed_s = 0.0;
  if (u.motion.empty()) {
    u.phase = Phase::Landed;
    u.position = cm_.depot(u.id);
    u.landed_time_s = clock_[u.id];
    info_.landings.push_back({u.id, clock_[u.id], false});
  }
}

bool Env::loiter_ok(const UavState& u, double duration_s) const {
  const auto& spec = scenario_.uavs[u.id];
  const double home = leg_flight_energy(u.position, cm_.depot(u.id), spec, cm_.profile(u.id));
  return u.flight_left_J() - cm_.profile(u.id).p_hover_W * duration_s >= home;
}

void Env::after_stop(UavState& u, double now, double step_end) {
  if (u.return_requested) {
    start_return(u);
  } else if (!u.plan.empty()) {
    launch_towards(u, u.plan.front().task_id);
  } else if (!options_.static_execution && loiter_ok(u, step_end - now)) {
    u.phase = Phase::Transit;
    u.idle = true;
    u.motion.clear();
  } else {
    start_return(u);
  }
}

void Env::process_jobs(UavState& u, double from, double to) {
  double c = from;
  while (!u.jobs.empty()) {
    Job& job = u.jobs.front();
    const double rem = job.duration_s - job.elapsed_s;
    if (c + rem <= to) {
      const double e = job.energy_J - job.billed_J;
      u.process_spent_J += e;
      u.reserved_process_J = std::max(0.0, u.reserved_process_J - e);
      c += rem;
      auto& ts = state_.tasks[job.task_id];
      ts.processed_fraction = job.beta;
      ts.status = job.beta >= 1.0 ? TaskStatus::Completed : TaskStatus::PartiallyProcessed;
      info_.completions.push_back({job.task_id, u.id, uav_agent_[u.id], job.beta, job.energy_J, c, false});
      u.jobs.pop_front();
      continue;
    }
    const double dt = to - c;
    if (dt > 0.0) {
      const double e = job.energy_J * dt / job.duration_s;
      u.process_spent_J += e;
      u.reserved_process_J = std::max(0.0, u.reserved_process_J - e);
      job.billed_J += e;
      job.elapsed_s += dt;
    }
    break;
  }
}

void Env::advance(UavState& u, double to) {
  double& clock = clock_[u.id];
  if (to <= clock) return;
  const double from = clock;
  if (!u.motion.empty()) {
    const Segment& seg = u.motion.front();
    const double rem = seg.duration_s - u.segment_elapsed_s;
    if (clock + rem <= to) {
      u.flight_spent_J += seg.power_W * rem;
      u.position = seg.to;
      u.motion.pop_front();
      u.segment_elapsed_s = 0.0;
      clock += rem;
    } else {
      const double dt = to - clock;
      u.flight_spent_J += seg.power_W * dt;
      u.segment_elapsed_s += dt;
      u.position = seg.duration_s > 0 ? lerp(seg.from, seg.to, u.segment_elapsed_s / seg.duration_s) : seg.to;
      clock = to;
    }
  } else {
    if (u.idle && u.airborne()) u.flight_spent_J += cm_.profile(u.id).p_hover_W * (to - clock);
    clock = to;
  }
  process_jobs(u, from, clock);
}

void Env::handle_motion_done(UavState& u, double now, double step_end) {
  switch (u.phase) {
    case Phase::Transit: {
      if (u.idle || u.plan.empty()) return;
      const PlannedStop stop = u.plan.front();
      u.plan.erase(u.plan.begin());
      --plan_count_[stop.task_id];
      auto& ts = state_.tasks[stop.task_id];
      if (ts.claimed_by >= 0) {
        info_.duplicates.push_back({stop.task_id, u.id, now});
        state_.stations[u.station].known_taken[stop.task_id] = 1;
        unreserve(u, stop);
        update_status(stop.task_id);
        after_stop(u, now, step_end);
        return;
      }
      ts.claimed_by = u.id;
      update_status(stop.task_id);
      u.phase = Phase::Collecting;
      u.collecting_task = stop.task_id;
      u.collecting_beta = stop.beta;
      const auto& spec = scenario_.uavs[u.id];
      const auto segs = collection_segments(scenario_.tasks[stop.task_id], spec, cm_.profile(u.id),
                                            cm_.link_rate(u.id, stop.task_id));
      u.motion.assign(segs.begin(), segs.end());
      u.segment_elapsed_s = 0.0;
      return;
    }
    case Phase::Collecting: {
      const int t = u.collecting_task;
      const double beta = u.collecting_beta;
      const auto& task = scenario_.tasks[t];
      const double residual = task.data_size_bytes * (1.0 - beta);
      u.storage_free_bytes -= residual;
      u.reserved_storage_bytes = std::max(0.0, u.reserved_storage_bytes - residual);
      const double f = beta * cm_.full_flops(t);
      u.flops_left -= f;
      u.reserved_flops = std::max(0.0, u.reserved_flops - f);
      Job job;
      job.task_id = t;
      job.beta = beta;
      job.energy_J = beta * cm_.full_process_energy(t);
      job.duration_s = beta > 0.0 ? processing_delay(f, scenario_.uavs[u.id], scenario_.compute) : 0.0;
      u.jobs.push_back(job);
      u.executed.push_back({t, beta});
      u.collecting_task = -1;
      state_.tasks[t].status = TaskStatus::Collected;
      info_.collections.push_back({t, u.id, now});
      process_jobs(u, now, now);
      after_stop(u, now, step_end);
      return;
    }
    case Phase::Returning:
      u.phase = Phase::Landed;
      u.position = cm_.depot(u.id);
      u.landed_time_s = now;
      info_.landings.push_back({u.id, now, false});
      return;
    default:
      return;
  }
}

void Env::apply_release(const Release& r, double now) {
  auto& u = state_.uavs[r.uav_id];
  auto it = std::find_if(u.plan.begin(), u.plan.end(),
                         [&](const PlannedStop& s) { return s.task_id == r.task_id; });
  if (it == u.plan.end()) return;
  const bool was_target = it == u.plan.begin() && u.phase == Phase::Transit && !u.idle;
  const PlannedStop stop = *it;
  u.plan.erase(it);
  --plan_count_[stop.task_id];
  unreserve(u, stop);
  update_status(stop.task_id);
  info_.releases.push_back(r);
  if (was_target) after_stop(u, now, now);
}

void Env::force_return_all(double now) {
  for (auto& u : state_.uavs) {
    if (u.airborne()) {
      if (u.phase == Phase::Collecting && u.collecting_task >= 0) {
        const int t = u.collecting_task;
        unreserve(u, {t, u.collecting_beta});
        state_.tasks[t].claimed_by = -1;
        u.collecting_task = -1;
        update_status(t);
      }
      for (const auto& stop : u.plan) {
        unreserve(u, stop);
        --plan_count_[stop.task_id];
        update_status(stop.task_id);
      }
      u.plan.clear();
      const auto& spec = scenario_.uavs[u.id];
      const auto legs = leg_segments(u.position, cm_.depot(u.id), spec, cm_.profile(u.id));
      double duration = 0.0;
      for (const auto& s : legs) {
        u.flight_spent_J += s.energy_J();
        duration += s.duration_s;
      }
      u.motion.clear();
      u.segment_elapsed_s = 0.0;
      u.idle = false;
      u.return_requested = false;
      u.position = cm_.depot(u.id);
      u.phase = Phase::Landed;
      u.landed_time_s = now + duration;
      info_.landings.push_back({u.id, u.landed_time_s, true});
    }
    for (auto& job : u.jobs) {
      const double frac = job.duration_s > 0.0 ? job.elapsed_s / job.duration_s : 0.0;
      const double cr = job.beta * frac;
      u.reserved_process_J = std::max(0.0, u.reserved_process_J - (job.energy_J - job.billed_J));
      auto& ts = state_.tasks[job.task_id];
      ts.processed_fraction = cr;
      if (cr > 0.0) ts.status = TaskStatus::PartiallyProcessed;
      info_.completions.push_back({job.task_id, u.id, uav_agent_[u.id], cr, job.billed_J, now, true});
    }
    u.jobs.clear();
  }
}

void Env::check_done() {
  if (state_.time_step >= scenario_.env.horizon_steps) {
    state_.done = true;
    return;
  }
  for (const auto& u : state_.uavs) {
    if (u.airborne() || !u.jobs.empty()) {
      state_.done = false;
      return;
    }
  }
  if (!options_.static_execution) {
    for (const auto& cands : candidates_) {
      for (const auto& c : cands) {
        if (!c.empty()) {
          state_.done = false;
          return;
        }
      }
    }
  }
  state_.done = true;
}

void Env::assign_route(int uav, const std::vector<PlannedStop>& stops) {
  if (uav < 0 || uav >= static_cast<int>(state_.uavs.size())) {
    throw ContractViolation("assign_route: unknown UAV " + std::to_string(uav));
  }
  auto& u = state_.uavs[uav];
  if (u.phase != Phase::AtStation || !u.plan.empty()) {
    throw ContractViolation("assign_route: UAV " + std::to_string(uav) + " already has a plan");
  }
  if (stops.empty()) return;
  for (const auto& s : stops) {
    if (s.task_id < 0 || s.task_id >= cm_.task_count() || !(s.beta >= 0.0 && s.beta <= 1.0)) {
      throw ContractViolation("assign_route: bad stop for task " + std::to_string(s.task_id));
    }
  }
  for (const auto& s : stops) {
    u.plan.push_back(s);
    u.reserved_process_J += s.beta * cm_.full_process_energy(s.task_id);
    u.reserved_flops += s.beta * cm_.full_flops(s.task_id);
    u.reserved_storage_bytes += scenario_.tasks[s.task_id].data_size_bytes * (1.0 - s.beta);
    ++plan_count_[s.task_id];
    update_status(s.task_id);
    info_.assignments.push_back({s.task_id, uav, uav_agent_[uav], static_cast<int>(u.plan.size()) - 1, s.beta});
  }
  launch_towards(u, u.plan.front().task_id);
  state_.done = false;
  refresh_candidates();
}

const StepInfo& Env::step(const std::vector<std::vector<int>>& actions) {
  if (state_.done) throw ContractViolation("step called on a finished episode");
  if (static_cast<int>(actions.size()) != agent_count()) {
    throw ContractViolation("expected actions for " + std::to_string(agent_count()) + " agents");
  }
  const int na = action_count();
  for (int a = 0; a < agent_count(); ++a) {
    if (actions[a].size() != agents_[a].size()) {
      throw ContractViolation("agent " + std::to_string(a) + ": wrong number of UAV actions");
    }
    const auto mask = action_mask(a);
    for (std::size_t l = 0; l < actions[a].size(); ++l) {
      const int act = actions[a][l];
      if (act < 0 || act >= na || !mask[l * na + act]) {
        throw ContractViolation("agent " + std::to_string(a) + " UAV " + std::to_string(agents_[a][l]) +
                                ": masked action " + std::to_string(act));
      }
    }
  }

  const auto& env = scenario_.env;
  const double t0 = state_.time_step * env.decision_dt_s;
  const double t_end = t0 + env.decision_dt_s;
  info_ = {};
  info_.actions = actions;
  std::fill(clock_.begin(), clock_.end(), t0);

  for (int a = 0; a < agent_count(); ++a) {
    std::vector<char> taken(cm_.task_count(), 0);
    for (std::size_t l = 0; l < actions[a].size(); ++l) {
      auto& u = state_.uavs[agents_[a][l]];
      int act = actions[a][l];
      if (act >= kFirstCandidateAction) {
        const auto& c = candidates_[a][l][act - kFirstCandidateAction];
        if (taken[c.task_id]) {
          ++info_.same_agent_conflicts;
          act = kActionNoop;
        } else {
          taken[c.task_id] = 1;
          u.plan.insert(u.plan.begin() + c.insert_at, PlannedStop{c.task_id, c.beta});
          u.reserved_process_J += c.beta * cm_.full_process_energy(c.task_id);
          u.reserved_flops += c.beta * cm_.full_flops(c.task_id);
          u.reserved_storage_bytes += scenario_.tasks[c.task_id].data_size_bytes * (1.0 - c.beta);
          ++plan_count_[c.task_id];
          update_status(c.task_id);
          info_.assignments.push_back({c.task_id, u.id, a, c.insert_at, c.beta});
          if (u.phase == Phase::AtStation || u.idle) launch_towards(u, u.plan.front().task_id);
          continue;
        }
      }
      if (act == kActionReturn) {
        if (u.phase == Phase::Collecting) {
          for (const auto& stop : u.plan) {
            unreserve(u, stop);
            --plan_count_[stop.task_id];
            update_status(stop.task_id);
          }
          u.plan.clear();
          u.return_requested = true;
        } else {
          start_return(u);
        }
        continue;
      }
      // Noop: an idle UAV keeps loitering only while that stays safe and useful.
      if (u.idle && u.airborne()) {
        const bool useful = !candidates_[a][l].empty();
        if (options_.static_execution || !useful || !loiter_ok(u, env.decision_dt_s)) start_return(u);
      }
    }
  }

  // Event loop in global time order, ties broken by UAV index.
  for (;;) {
    int next = -1;
    double when = std::numeric_limits<double>::infinity();
    for (auto& u : state_.uavs) {
      if (u.motion.empty()) continue;
      const double te = clock_[u.id] + (u.motion.front().duration_s - u.segment_elapsed_s);
      if (te <= t_end && te < when) {
        when = te;
        next = u.id;
      }
    }
    if (next < 0) break;
    auto& u = state_.uavs[next];
    advance(u, when);
    clock_[next] = when;
    if (u.motion.empty()) handle_motion_done(u, when, t_end);
  }
  for (auto& u : state_.uavs) advance(u, t_end);

  ++state_.time_step;

  if (env.sharing_enabled && options_.mode == ControlMode::Distributed) {
    std::vector<std::pair<int, int>> pairs;
    info_.share_events = proximity_exchange(state_, scenario_, scenario_.learn.d_threshold_m, &pairs);
    if (auto ev = periodic_sync(state_, scenario_, state_.time_step, scenario_.learn.t0_sync)) {
      info_.share_events.push_back(*ev);
      pairs.clear();
      for (int a = 0; a < scenario_.station_count(); ++a) {
        for (int b = a + 1; b < scenario_.station_count(); ++b) pairs.emplace_back(a, b);
      }
    }
    for (const auto& r : dedupe_on_refresh(state_, cm_, pairs)) apply_release(r, t_end);
  }

  if (state_.time_step >= env.horizon_steps) force_return_all(t_end);

  std::vector<std::vector<ProgressedTask>> progressed(agent_count());
  for (const auto& c : info_.completions) {
    progressed[c.agent].push_back(
        {scenario_.tasks[c.task_id].priority, c.completion_ratio, c.energy_J});
  }
  info_.rewards.assign(agent_count(), 0.0);
  for (int a = 0; a < agent_count(); ++a) {
    const double rate = believed_collection_rate(a);
    info_.collection_rate_believed.push_back(rate);
    info_.rewards[a] = reward_fn(progressed[a], rate, scenario_.learn);
  }
  if (env.shared_reward) {
    const double total = std::accumulate(info_.rewards.begin(), info_.rewards.end(), 0.0);
    std::fill(info_.rewards.begin(), info_.rewards.end(), total);
  }

  refresh_candidates();
  check_done();
  if (state_.done) candidates_.assign(agent_count(), {});
  for (int a = 0; a < agent_count(); ++a) candidates_[a].resize(agents_[a].size());

  info_.step = state_.time_step;
  info_.done = state_.done;
  info_.duplicate_planned = duplicate_planned_count(state_, scenario_);
  for (const auto& u : state_.uavs) {
    info_.flight_left_J.push_back(u.flight_left_J());
    info_.process_left_J.push_back(u.process_left_J());
    info_.storage_free_bytes.push_back(u.storage_free_bytes);
  }
  info_.digest = state_digest();
  return info_;
}

std::string Env::state_digest() const {
  detail::Fnv f;
  f.add(state_.time_step);
  for (const auto& u : state_.uavs) {
    f.add(u.position.x);
    f.add(u.position.y);
    f.add(u.position.z);
    f.add(u.flight_spent_J);
    f.add(u.process_spent_J);
    f.add(u.storage_free_bytes);
    f.add(static_cast<int>(u.phase));
    for (const auto& s : u.plan) f.add(s.task_id);
    f.add(-1);
  }
  for (const auto& t : state_.tasks) {
    f.add(static_cast<int>(t.status));
    f.add(t.claimed_by);
  }
  return f.hex();
}

}  // namespace uavsim
