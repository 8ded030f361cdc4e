#include "uavsim/coordination.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fnv.hpp"
#include "uavsim/error.hpp"

namespace uavsim {

namespace {

using detail::Fnv;

void digest_entry(Fnv& f, const PeerEntry& e) {
  for (const auto& u : e.uavs) {
    f.add(u.position.x);
    f.add(u.position.y);
    f.add(u.position.z);
    f.add(u.battery_fraction);
    f.add(u.availability);
  }
  for (int t : e.planned) f.add(t);
  f.add(std::uint64_t{~0ull});
  for (int t : e.collected) f.add(t);
}

void exchange_pair(EnvState& state, const Scenario& scenario, int a, int b) {
  const int t = state.time_step;
  auto snap_a = station_snapshot(state, scenario, a);
  auto snap_b = station_snapshot(state, scenario, b);
  snap_a.last_update_step = t;
  snap_b.last_update_step = t;
  auto& ba = state.stations[a];
  auto& bb = state.stations[b];
  const auto before_a = ba.peers;
  const auto before_b = bb.peers;
  for (int c = 0; c < static_cast<int>(state.stations.size()); ++c) {
    if (c == a || c == b) continue;
    if (before_b[c].last_update_step > before_a[c].last_update_step) ba.peers[c] = before_b[c];
    if (before_a[c].last_update_step > before_b[c].last_update_step) bb.peers[c] = before_a[c];
  }
  ba.peers[b] = std::move(snap_b);
  bb.peers[a] = std::move(snap_a);
}

}  // namespace

PeerEntry station_snapshot(const EnvState& state, const Scenario& scenario, int station) {
  PeerEntry e;
  e.last_update_step = state.time_step;
  std::set<int> planned;
  std::set<int> collected;
  for (const auto& u : state.uavs) {
    if (u.station != station) continue;
    UavSummary s;
    s.position = u.position;
    s.battery_fraction = u.flight_left_J() / u.flight_capacity_J;
    s.availability = u.can_accept(scenario.env.max_pending) ? 1.0 : 0.0;
    s.phase = u.phase;
    e.uavs.push_back(s);
    for (const auto& stop : u.plan) planned.insert(stop.task_id);
    if (u.collecting_task >= 0) planned.insert(u.collecting_task);
    for (const auto& stop : u.executed) collected.insert(stop.task_id);
  }
  const auto& known = state.stations[station].known_taken;
  for (std::size_t t = 0; t < known.size(); ++t) {
    if (known[t]) collected.insert(static_cast<int>(t));
  }
  e.planned.assign(planned.begin(), planned.end());
  e.collected.assign(collected.begin(), collected.end());
  return e;
}

void init_beliefs(EnvState& state, const Scenario& scenario) {
  const int k = scenario.station_count();
  state.stations.assign(k, {});
  for (int s = 0; s < k; ++s) {
    state.stations[s].owner = s;
    state.stations[s].known_taken.assign(scenario.tasks.size(), 0);
  }
  std::vector<PeerEntry> truth;
  for (int s = 0; s < k; ++s) truth.push_back(station_snapshot(state, scenario, s));
  for (int s = 0; s < k; ++s) state.stations[s].peers = truth;
}

std::vector<ShareEvent> proximity_exchange(EnvState& state, const Scenario& scenario,
                                           double d_threshold_m,
                                           std::vector<std::pair<int, int>>* refreshed) {
  std::vector<ShareEvent> events;
  std::set<std::pair<int, int>> pairs;
  const auto& uavs = state.uavs;
  for (std::size_t i = 0; i < uavs.size(); ++i) {
    for (std::size_t j = i + 1; j < uavs.size(); ++j) {
      if (uavs[i].station == uavs[j].station) continue;
      if (euclidean_distance(uavs[i].position, uavs[j].position) > d_threshold_m) continue;
      ShareEvent ev;
      ev.kind = ShareEvent::Kind::Proximity;
      ev.step = state.time_step;
      ev.uav_i = uavs[i].id;
      ev.uav_j = uavs[j].id;
      events.push_back(ev);
      pairs.insert(std::minmax(uavs[i].station, uavs[j].station));
    }
  }
  for (const auto& [a, b] : pairs) exchange_pair(state, scenario, a, b);
  for (auto& ev : events) {
    Fnv f;
    const int a = uavs[ev.uav_i].station;
    const int b = uavs[ev.uav_j].station;
    digest_entry(f, state.stations[a].peers[b]);
    digest_entry(f, state.stations[b].peers[a]);
    ev.digest = f.hex();
  }
  if (refreshed) refreshed->assign(pairs.begin(), pairs.end());
  return events;
}

std::optional<ShareEvent> periodic_sync(EnvState& state, const Scenario& scenario, int t, int t0) {
  if (t0 <= 0 || t <= 0 || t % t0 != 0) return std::nullopt;
  const int k = scenario.station_count();
  std::vector<PeerEntry> truth;
  Fnv f;
  for (int s = 0; s < k; ++s) {
    truth.push_back(station_snapshot(state, scenario, s));
    truth.back().last_update_step = t;
    digest_entry(f, truth.back());
  }
  for (int s = 0; s < k; ++s) {
    for (int p = 0; p < k; ++p) {
      if (p != s) state.stations[s].peers[p] = truth[p];
    }
  }
  ShareEvent ev;
  ev.kind = ShareEvent::Kind::Periodic;
  ev.step = t;
  ev.digest = f.hex();
  return ev;
}

double decay_estimate(double last_value, int last_update_step, int t, double lambda) {
  if (t < last_update_step) {
    throw ClockError("belief queried at step " + std::to_string(t) + " before its last update at " +
                     std::to_string(last_update_step));
  }
  return last_value * std::exp(-lambda * (t - last_update_step));
}

double worst_case_gap(double i0, double lambda, double t0) { return i0 * std::exp(-lambda * t0); }

double expected_gap(double i0, double lambda, int t0, double p, int k) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("expected_gap: p must lie in [0, 1]");
  if (k < 2) throw DomainError("expected_gap: need at least two stations");
  if (t0 < 0) throw DomainError("expected_gap: t0 must be nonnegative");
  const double q = std::pow(1.0 - p, k - 1);
  double num = 0.0;
  double den = 0.0;
  double binom = 1.0;
  for (int n = 0; n <= t0; ++n) {
    const double w = binom * std::pow(q, n) * std::pow(1.0 - q, t0 - n);
    if (w != 0.0) {
      num += w * std::exp(-lambda * n);
      den += w;
    }
    binom = binom * (t0 - n) / (n + 1);
  }
  return i0 * (num / den);
}

double marginal_cost(const UavState& uav, std::size_t index, const CostModel& cm) {
  const auto& tasks = cm.scenario().tasks;
  const Vec3 depot = cm.depot(uav.id);
  const int t = uav.plan.at(index).task_id;
  const bool first = index == 0;
  const bool last = index + 1 == uav.plan.size();
  // Ground projection of the UAV, so the first leg matches the Euclidean depot legs.
  const Vec3 here{uav.position.x, uav.position.y, 0.0};
  const int prev = first ? -1 : uav.plan[index - 1].task_id;
  const int next = last ? -1 : uav.plan[index + 1].task_id;
  const double in = first ? euclidean_distance(here, tasks[t].position) : cm.curved(prev, t);
  const double out = last ? euclidean_distance(tasks[t].position, depot) : cm.curved(t, next);
  double direct;
  if (first && last) {
    direct = euclidean_distance(here, depot);
  } else if (first) {
    direct = euclidean_distance(here, tasks[next].position);
  } else if (last) {
    direct = euclidean_distance(tasks[prev].position, depot);
  } else {
    direct = cm.curved(prev, next);
  }
  return in + out - direct;
}

std::vector<Release> dedupe_on_refresh(const EnvState& state, const CostModel& cm,
                                       const std::vector<std::pair<int, int>>& refreshed) {
  std::vector<Release> out;
  if (refreshed.empty()) return out;
  const int nt = cm.task_count();
  // For every task: the planning UAVs (with cost), the collector, per station.
  struct Plan {
    int uav;
    double cost;
  };
  std::vector<std::vector<Plan>> planners(nt);
  std::vector<int> taken_by_station(nt, -1);
  for (const auto& u : state.uavs) {
    for (std::size_t i = 0; i < u.plan.size(); ++i) {
      planners[u.plan[i].task_id].push_back({u.id, marginal_cost(u, i, cm)});
    }
    if (u.collecting_task >= 0) taken_by_station[u.collecting_task] = u.station;
    for (const auto& stop : u.executed) taken_by_station[stop.task_id] = u.station;
  }
  std::set<std::pair<int, int>> released;  // (task, uav)
  for (const auto& [a, b] : refreshed) {
    for (int t = 0; t < nt; ++t) {
      const auto& ps = planners[t];
      if (ps.empty()) continue;
      const Plan* pa = nullptr;
      const Plan* pb = nullptr;
      for (const auto& p : ps) {
        if (released.count({t, p.uav})) continue;
        const int s = state.uavs[p.uav].station;
        if (s == a && !pa) pa = &p;
        if (s == b && !pb) pb = &p;
      }
      auto release = [&](const Plan* p, bool taken) {
        if (released.insert({t, p->uav}).second) {
          out.push_back({t, p->uav, state.uavs[p->uav].station, taken});
        }
      };
      const int taker = taken_by_station[t];
      if (taker == b && pa) {
        release(pa, true);
        continue;
      }
      if (taker == a && pb) {
        release(pb, true);
        continue;
      }
      if (!pa || !pb) continue;
      // Lower station id keeps on ties; a < b by construction.
      if (pb->cost >= pa->cost) {
        release(pb, false);
      } else {
        release(pa, false);
      }
    }
  }
  return out;
}

int duplicate_planned_count(const EnvState& state, const Scenario& scenario) {
  const int nt = static_cast<int>(scenario.tasks.size());
  std::vector<std::set<int>> stations(nt);
  for (const auto& u : state.uavs) {
    for (const auto& stop : u.plan) stations[stop.task_id].insert(u.station);
    if (u.collecting_task >= 0) stations[u.collecting_task].insert(u.station);
  }
  int n = 0;
  for (const auto& s : stations) n += s.size() > 1 ? 1 : 0;
  return n;
}

}  // namespace uavsim
