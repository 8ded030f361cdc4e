#include "uavsim/routing.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>

#include "uavsim/channel.hpp"
#include "uavsim/compute.hpp"

namespace uavsim {

namespace {

void warn_theta_clamped(double theta) {
  static std::once_flag once;
  std::call_once(once, [theta] {
    std::cerr << "uavsim: warning: central angle " << theta
              << " rad clamped below pi (extreme load ratio)\n";
  });
}

double arc_factor(double theta) { return theta / (2.0 * std::sin(theta / 2.0)); }

// Within this relative slack an executed route still counts as within budget.
bool exceeds(double amount, double limit) { return amount > limit * (1.0 + 1e-9) + 1e-9; }

}  // namespace

double central_angle(double load_n, double load_m) {
  if (!(load_n > 0.0) || !(load_m > 0.0)) {
    throw DomainError("curved metric needs positive compute and storage requirements");
  }
  double theta = std::max(0.0, std::log(load_n / load_m) - 1.0);
  if (theta > kMaxCentralAngle) {
    warn_theta_clamped(theta);
    theta = kMaxCentralAngle;
  }
  return theta;
}

double curved_distance(const Task& n, const Task& m, const ComputeParams& compute) {
  const double load_n = task_flops(n, 1.0, compute) * n.data_size_bytes;
  const double load_m = task_flops(m, 1.0, compute) * m.data_size_bytes;
  const double theta = central_angle(load_n, load_m);
  const double d = euclidean_distance(n.position, m.position);
  if (theta == 0.0) return d;
  return d * arc_factor(theta);
}

std::size_t Assignment::assigned_count() const {
  std::size_t n = 0;
  for (const auto& [_, r] : routes) n += r.stops.size();
  return n;
}

std::string constraint_name(Constraint c) {
  switch (c) {
    case Constraint::Uniqueness: return "(b) uniqueness";
    case Constraint::FlightEnergy: return "(c) flight energy";
    case Constraint::Storage: return "(d) storage";
    case Constraint::ProcessingCapacity: return "(e) processing capacity";
    case Constraint::ProcessingEnergy: return "(f) processing energy";
    case Constraint::ProcessingFraction: return "p <= 1";
  }
  return "?";
}

bool FeasibilityReport::has(Constraint c) const {
  return std::any_of(violations.begin(), violations.end(),
                     [c](const Violation& v) { return v.constraint == c; });
}

std::string FeasibilityReport::summary() const {
  if (violations.empty()) return "feasible";
  std::ostringstream ss;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const auto& v = violations[i];
    if (i) ss << "; ";
    ss << constraint_name(v.constraint);
    if (v.uav_id >= 0) ss << " uav=" << v.uav_id;
    if (v.task_id >= 0) ss << " task=" << v.task_id;
    if (v.limit != 0.0 || v.amount != 0.0) ss << " (" << v.amount << " > " << v.limit << ")";
  }
  return ss.str();
}

CostModel::CostModel(const Scenario& s) : scenario_(&s) {
  const auto nu = s.uavs.size();
  const auto nt = s.tasks.size();
  const double mission_s = s.env.horizon_steps * s.env.decision_dt_s;
  profiles_.reserve(nu);
  collect_energy_.resize(nu * nt);
  collect_time_.resize(nu * nt);
  link_rate_.resize(nu * nt);
  for (std::size_t u = 0; u < nu; ++u) {
    const auto& spec = s.uavs[u];
    profiles_.push_back(make_power_profile(spec));
    flops_budget_.push_back(uav_capacity(spec) * mission_s);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto& task = s.tasks[t];
      double rate = 0.0;
      if (task.cls == TaskClass::EdgeVideo) {
        rate = rate_u2g(spec, edge_link_position(task, spec), task.position, s.channel);
      }
      const auto i = u * nt + t;
      link_rate_[i] = rate;
      collect_energy_[i] = task_energy(task, spec, profiles_.back(), rate);
      collect_time_[i] = task_duration(task, spec, rate);
    }
  }
  for (const auto& task : s.tasks) {
    full_flops_.push_back(task_flops(task, 1.0, s.compute));
    load_.push_back(full_flops_.back() * task.data_size_bytes);
    full_energy_.push_back(processing_energy(task, 1.0, s.learn));
    values_.push_back(task_value(task));
  }
  curved_.assign(nt * nt, 0.0);
  for (std::size_t a = 0; a < nt; ++a) {
    for (std::size_t b = 0; b < nt; ++b) {
      if (a == b) continue;
      const double theta = central_angle(load_[a], load_[b]);
      const double d = euclidean_distance(s.tasks[a].position, s.tasks[b].position);
      curved_[a * nt + b] = theta == 0.0 ? d : d * arc_factor(theta);
    }
  }
}

double CostModel::curved(int from_task, int to_task) const {
  return curved_[static_cast<std::size_t>(from_task) * scenario_->tasks.size() + to_task];
}

Vec3 CostModel::depot(int uav) const {
  return scenario_->region.station_positions.at(scenario_->uavs[uav].home_station);
}

Vec3 CostModel::waypoint(int uav, int task) const {
  return task_waypoint(scenario_->tasks[task], scenario_->uavs[uav]);
}

RouteEval evaluate_route(const CostModel& cm, int uav, const std::vector<RouteStop>& stops) {
  RouteEval ev;
  const auto& spec = cm.scenario().uavs[uav];
  const auto& tasks = cm.scenario().tasks;
  const auto& profile = cm.profile(uav);
  const Vec3 depot = cm.depot(uav);
  Vec3 at = depot;
  Vec3 ground = depot;
  int prev = -1;
  for (const auto& stop : stops) {
    const Vec3 wp = cm.waypoint(uav, stop.task_id);
    ev.flight_energy_J += leg_flight_energy(at, wp, spec, profile);
    ev.flight_energy_J += cm.collection_energy(uav, stop.task_id);
    const auto& task = tasks[stop.task_id];
    ev.process_energy_J += stop.beta * cm.full_process_energy(stop.task_id);
    ev.flops += stop.beta * cm.full_flops(stop.task_id);
    ev.storage_bytes += task.data_size_bytes * (1.0 - stop.beta);
    ev.euclidean_length_m += euclidean_distance(ground, task.position);
    ev.curved_length_m += prev < 0 ? euclidean_distance(ground, task.position)
                                   : cm.curved(prev, stop.task_id);
    at = wp;
    ground = task.position;
    prev = stop.task_id;
  }
  if (!stops.empty()) {
    ev.flight_energy_J += leg_flight_energy(at, depot, spec, profile);
    ev.euclidean_length_m += euclidean_distance(ground, depot);
    ev.curved_length_m += euclidean_distance(ground, depot);
  }
  return ev;
}

std::vector<double> greedy_betas(const CostModel& cm, int uav, const std::vector<int>& order,
                                 double energy_left, double flops_left) {
  (void)uav;
  std::vector<double> betas;
  betas.reserve(order.size());
  for (int t : order) {
    const double e = cm.full_process_energy(t);
    const double f = cm.full_flops(t);
    const double beta = greedy_beta(e, energy_left, f, flops_left);
    energy_left -= beta * e;
    flops_left -= beta * f;
    betas.push_back(beta);
  }
  return betas;
}

Route make_route(const CostModel& cm, int uav, const std::vector<int>& order) {
  const auto& spec = cm.scenario().uavs[uav];
  const auto betas = greedy_betas(cm, uav, order, spec.battery_process_J, cm.flops_budget(uav));
  Route r;
  r.uav_id = uav;
  r.depot = spec.home_station;
  for (std::size_t i = 0; i < order.size(); ++i) r.stops.push_back({order[i], betas[i]});
  const auto ev = evaluate_route(cm, uav, r.stops);
  r.total_distance_m = ev.euclidean_length_m;
  r.curved_length_m = ev.curved_length_m;
  r.flight_energy_J = ev.flight_energy_J;
  r.process_energy_J = ev.process_energy_J;
  r.storage_used_bytes = ev.storage_bytes;
  r.flops = ev.flops;
  return r;
}

bool route_within_budgets(const CostModel& cm, int uav, const RouteEval& ev) {
  const auto& spec = cm.scenario().uavs[uav];
  return ev.flight_energy_J <= spec.battery_flight_J &&
         ev.process_energy_J <= spec.battery_process_J && ev.storage_bytes <= spec.storage_bytes &&
         ev.flops <= cm.flops_budget(uav);
}

double curved_route_length(const CostModel& cm, int uav, const std::vector<int>& order) {
  if (order.empty()) return 0.0;
  const auto& tasks = cm.scenario().tasks;
  const Vec3 depot = cm.depot(uav);
  double len = euclidean_distance(depot, tasks[order.front()].position);
  for (std::size_t i = 1; i < order.size(); ++i) len += cm.curved(order[i - 1], order[i]);
  len += euclidean_distance(tasks[order.back()].position, depot);
  return len;
}

FeasibilityReport check_feasible(const Assignment& a, const Scenario& scenario) {
  const CostModel cm(scenario);
  return check_feasible(a, cm);
}

FeasibilityReport check_feasible(const Assignment& a, const CostModel& cm) {
  const int nu = cm.uav_count();
  const int nt = cm.task_count();
  FeasibilityReport report;
  std::vector<int> owner(nt, -1);
  std::vector<char> listed(nt, 0);

  for (int t : a.unassigned) {
    if (t < 0 || t >= nt) throw ValidationError("assignment.unassigned", "unknown task id " + std::to_string(t));
    listed[t] = 1;
  }
  for (const auto& [uav, route] : a.routes) {
    if (uav < 0 || uav >= nu || route.uav_id != uav) {
      throw ValidationError("assignment.routes", "unknown or mismatched UAV id " + std::to_string(uav));
    }
    for (const auto& stop : route.stops) {
      const int t = stop.task_id;
      if (t < 0 || t >= nt) {
        throw ValidationError("assignment.routes", "unknown task id " + std::to_string(t));
      }
      if (listed[t] == 1) {
        throw ValidationError("assignment.unassigned",
                              "task " + std::to_string(t) + " is both routed and unassigned");
      }
      if (owner[t] >= 0) {
        report.violations.push_back({Constraint::Uniqueness, uav, t, 0.0, 0.0});
      } else {
        owner[t] = uav;
      }
      if (!(stop.beta >= 0.0 && stop.beta <= 1.0)) {
        report.violations.push_back({Constraint::ProcessingFraction, uav, t, stop.beta, 1.0});
      }
    }
  }
  for (int t = 0; t < nt; ++t) {
    if (owner[t] < 0 && !listed[t]) {
      throw ValidationError("assignment.unassigned",
                            "task " + std::to_string(t) + " is neither routed nor unassigned");
    }
  }

  for (const auto& [uav, route] : a.routes) {
    const auto& spec = cm.scenario().uavs[uav];
    const auto ev = evaluate_route(cm, uav, route.stops);
    if (exceeds(ev.flight_energy_J, spec.battery_flight_J)) {
      report.violations.push_back({Constraint::FlightEnergy, uav, -1, ev.flight_energy_J, spec.battery_flight_J});
    }
    if (exceeds(ev.storage_bytes, spec.storage_bytes)) {
      report.violations.push_back({Constraint::Storage, uav, -1, ev.storage_bytes, spec.storage_bytes});
    }
    if (exceeds(ev.flops, cm.flops_budget(uav))) {
      report.violations.push_back({Constraint::ProcessingCapacity, uav, -1, ev.flops, cm.flops_budget(uav)});
    }
    if (exceeds(ev.process_energy_J, spec.battery_process_J)) {
      report.violations.push_back({Constraint::ProcessingEnergy, uav, -1, ev.process_energy_J, spec.battery_process_J});
    }
  }
  return report;
}

double objective(const Assignment& a, const Scenario& scenario) {
  const CostModel cm(scenario);
  return objective(a, cm);
}

double objective(const Assignment& a, const CostModel& cm) {
  auto report = check_feasible(a, cm);
  if (!report.feasible()) throw InfeasibleError(std::move(report));
  double value = 0.0;
  double length = 0.0;
  for (const auto& [uav, route] : a.routes) {
    for (const auto& stop : route.stops) value += cm.value(stop.task_id);
    length += evaluate_route(cm, uav, route.stops).curved_length_m;
  }
  return value - cm.scenario().learn.move_energy_scale * length;
}

Assignment empty_assignment(const Scenario& scenario) {
  Assignment a;
  for (const auto& t : scenario.tasks) a.unassigned.insert(t.id);
  return a;
}

Assignment solve_exact(const Scenario& scenario, int max_tasks) {
  const int nt = static_cast<int>(scenario.tasks.size());
  if (nt > max_tasks || nt > 16) {
    throw Error("exact solver refuses " + std::to_string(nt) + " tasks (limit " +
                std::to_string(max_tasks) + ")");
  }
  const CostModel cm(scenario);
  const int nu = cm.uav_count();
  const std::uint32_t full = (1u << nt);
  const double scale = scenario.learn.move_energy_scale;
  constexpr double kNone = -std::numeric_limits<double>::infinity();

  // Best feasible ordering per (uav, subset), scored by value - scale * curved length.
  std::vector<std::vector<double>> score(nu, std::vector<double>(full, kNone));
  std::vector<std::vector<std::vector<int>>> order(nu, std::vector<std::vector<int>>(full));
  for (int u = 0; u < nu; ++u) {
    score[u][0] = 0.0;
    for (std::uint32_t mask = 1; mask < full; ++mask) {
      std::vector<int> perm;
      double value = 0.0;
      for (int t = 0; t < nt; ++t) {
        if (mask & (1u << t)) {
          perm.push_back(t);
          value += cm.value(t);
        }
      }
      double best_len = std::numeric_limits<double>::infinity();
      do {
        const double len = curved_route_length(cm, u, perm);
        if (len >= best_len) continue;
        const auto route = make_route(cm, u, perm);
        const RouteEval ev{route.flight_energy_J, route.process_energy_J, route.storage_used_bytes,
                           route.flops, route.total_distance_m, route.curved_length_m};
        if (!route_within_budgets(cm, u, ev)) continue;
        best_len = len;
        order[u][mask] = perm;
      } while (std::next_permutation(perm.begin(), perm.end()));
      if (best_len < std::numeric_limits<double>::infinity()) {
        score[u][mask] = value - scale * best_len;
      }
    }
  }

  // dp over UAVs: best[mask] using UAVs seen so far, with the subset chosen for each UAV.
  std::vector<double> best(full, kNone);
  best[0] = 0.0;
  std::vector<std::vector<std::uint32_t>> choice(nu, std::vector<std::uint32_t>(full, 0));
  for (int u = 0; u < nu; ++u) {
    std::vector<double> next(full, kNone);
    for (std::uint32_t mask = 0; mask < full; ++mask) {
      for (std::uint32_t sub = mask;; sub = (sub - 1) & mask) {
        const double prev = best[mask ^ sub];
        if (prev != kNone && score[u][sub] != kNone) {
          const double v = prev + score[u][sub];
          if (v > next[mask]) {
            next[mask] = v;
            choice[u][mask] = sub;
          }
        }
        if (sub == 0) break;
      }
    }
    best = std::move(next);
  }

  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    if (best[mask] > best[best_mask]) best_mask = mask;
  }

  Assignment a;
  std::uint32_t mask = best_mask;
  for (int u = nu - 1; u >= 0; --u) {
    const std::uint32_t sub = choice[u][mask];
    if (sub != 0) a.routes[u] = make_route(cm, u, order[u][sub]);
    mask ^= sub;
  }
  for (int t = 0; t < nt; ++t) {
    if (!(best_mask & (1u << t))) a.unassigned.insert(t);
  }
  return a;
}

std::vector<int> order_route(const CostModel& cm, int uav, std::vector<int> tasks) {
  if (tasks.size() < 2) return tasks;
  const auto& all = cm.scenario().tasks;
  std::vector<int> out;
  out.reserve(tasks.size());
  std::sort(tasks.begin(), tasks.end());
  {
    const Vec3 depot = cm.depot(uav);
    auto it = std::min_element(tasks.begin(), tasks.end(), [&](int a, int b) {
      return euclidean_distance(depot, all[a].position) < euclidean_distance(depot, all[b].position);
    });
    out.push_back(*it);
    tasks.erase(it);
  }
  while (!tasks.empty()) {
    const int last = out.back();
    auto it = std::min_element(tasks.begin(), tasks.end(),
                               [&](int a, int b) { return cm.curved(last, a) < cm.curved(last, b); });
    out.push_back(*it);
    tasks.erase(it);
  }

  double best = curved_route_length(cm, uav, out);
  bool improved = true;
  for (int pass = 0; improved && pass < 50; ++pass) {
    improved = false;
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        std::reverse(out.begin() + i, out.begin() + j + 1);
        const double len = curved_route_length(cm, uav, out);
        if (len < best - 1e-9) {
          best = len;
          improved = true;
        } else {
          std::reverse(out.begin() + i, out.begin() + j + 1);
        }
      }
    }
  }
  return out;
}

}  // namespace uavsim
