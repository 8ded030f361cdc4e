#include "uavsim/baselines.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "uavsim/error.hpp"

namespace uavsim {

using nlohmann::json;

namespace {

bool fits(const CostModel& cm, const Route& r) {
  const RouteEval ev{r.flight_energy_J, r.process_energy_J, r.storage_used_bytes, r.flops, r.total_distance_m,
                     r.curved_length_m};
  return route_within_budgets(cm, r.uav_id, ev);
}

Assignment from_routes(const CostModel& cm, std::map<int, Route> routes) {
  Assignment a;
  std::vector<char> used(cm.task_count(), 0);
  for (auto& [u, r] : routes) {
    if (r.stops.empty()) continue;
    for (const auto& s : r.stops) used[s.task_id] = 1;
    a.routes[u] = std::move(r);
  }
  for (int t = 0; t < cm.task_count(); ++t) {
    if (!used[t]) a.unassigned.insert(t);
  }
  return a;
}

double fitness(const CostModel& cm, const Assignment& a) {
  double value = 0.0, length = 0.0;
  for (const auto& [u, r] : a.routes) {
    for (const auto& s : r.stops) value += cm.value(s.task_id);
    length += r.curved_length_m;
  }
  return value - cm.scenario().learn.move_energy_scale * length;
}

}  // namespace

void GaConfig::validate() const {
  if (population < 2) throw ValidationError("ga.population", "must be at least 2");
  if (generations < 0) throw ValidationError("ga.generations", "must be nonnegative");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ValidationError("ga.crossover_rate", "must lie in [0, 1]");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ValidationError("ga.mutation_rate", "must lie in [0, 1]");
  if (elitism < 0 || elitism > population) throw ValidationError("ga.elitism", "must lie in [0, population]");
  if (tournament < 1) throw ValidationError("ga.tournament", "must be positive");
}

Assignment rnd_allocate(const Scenario& scenario, std::uint64_t seed) {
  const CostModel cm(scenario);
  std::mt19937_64 rng(seed);
  std::vector<int> tasks(cm.task_count());
  std::iota(tasks.begin(), tasks.end(), 0);
  std::shuffle(tasks.begin(), tasks.end(), rng);
  std::map<int, std::vector<int>> orders;
  std::map<int, Route> routes;
  if (cm.uav_count() == 0) return empty_assignment(scenario);
  std::uniform_int_distribution<int> pick(0, cm.uav_count() - 1);
  for (int t : tasks) {
    const int u = pick(rng);
    auto order = orders[u];
    order.push_back(t);
    Route r = make_route(cm, u, order);
    if (fits(cm, r)) {
      orders[u] = std::move(order);
      routes[u] = std::move(r);
    }
  }
  return from_routes(cm, std::move(routes));
}

Assignment greedy_allocate(const Scenario& scenario) {
  const CostModel cm(scenario);
  const double scale = scenario.learn.move_energy_scale;
  std::vector<std::vector<int>> orders(cm.uav_count());
  std::vector<double> lengths(cm.uav_count(), 0.0);
  std::vector<char> used(cm.task_count(), 0);
  for (;;) {
    double best = 0.0;
    int bu = -1, bt = -1;
    std::size_t bpos = 0;
    for (int u = 0; u < cm.uav_count(); ++u) {
      for (int t = 0; t < cm.task_count(); ++t) {
        if (used[t]) continue;
        for (std::size_t pos = 0; pos <= orders[u].size(); ++pos) {
          auto order = orders[u];
          order.insert(order.begin() + static_cast<std::ptrdiff_t>(pos), t);
          const double gain = cm.value(t) - scale * (curved_route_length(cm, u, order) - lengths[u]);
          if (gain <= best) continue;
          if (!fits(cm, make_route(cm, u, order))) continue;
          best = gain;
          bu = u;
          bt = t;
          bpos = pos;
        }
      }
    }
    if (bu < 0) break;
    orders[bu].insert(orders[bu].begin() + static_cast<std::ptrdiff_t>(bpos), bt);
    lengths[bu] = curved_route_length(cm, bu, orders[bu]);
    used[bt] = 1;
  }
  std::map<int, Route> routes;
  for (int u = 0; u < cm.uav_count(); ++u) {
    if (!orders[u].empty()) routes[u] = make_route(cm, u, orders[u]);
  }
  return from_routes(cm, std::move(routes));
}

Assignment decode_genome(const CostModel& cm, Genome& genes) {
  if (static_cast<int>(genes.size()) != cm.task_count()) throw ContractViolation("genome length must equal the task count");
  std::vector<std::vector<int>> sets(cm.uav_count());
  for (int t = 0; t < cm.task_count(); ++t) {
    if (genes[t] >= cm.uav_count()) throw ContractViolation("gene names an unknown UAV");
    if (genes[t] >= 0) sets[genes[t]].push_back(t);
  }
  std::map<int, Route> routes;
  for (int u = 0; u < cm.uav_count(); ++u) {
    auto tasks = sets[u];
    while (!tasks.empty()) {
      Route r = make_route(cm, u, order_route(cm, u, tasks));
      if (fits(cm, r)) {
        routes[u] = std::move(r);
        break;
      }
      // Drop the cheapest task (ties: highest id) and retry.
      auto it = std::min_element(tasks.begin(), tasks.end(), [&](int a, int b) {
        return cm.value(a) < cm.value(b) || (cm.value(a) == cm.value(b) && a > b);
      });
      genes[*it] = -1;
      tasks.erase(it);
    }
  }
  return from_routes(cm, std::move(routes));
}

GaResult ga_run(const Scenario& scenario, const GaConfig& cfg, const std::optional<std::vector<Genome>>& initial) {
  cfg.validate();
  const CostModel cm(scenario);
  const int nt = cm.task_count();
  const int nu = cm.uav_count();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> gene_value(-1, nu - 1);

  std::vector<Genome> pop;
  if (initial) {
    if (static_cast<int>(initial->size()) != cfg.population) throw ValidationError("ga.population", "initial population size mismatch");
    pop = *initial;
  } else {
    for (int i = 0; i < cfg.population; ++i) {
      Genome g(nt);
      for (auto& x : g) x = gene_value(rng);
      pop.push_back(std::move(g));
    }
  }

  GaResult res;
  res.best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<double> fit(pop.size());
  auto evaluate = [&] {
    for (std::size_t i = 0; i < pop.size(); ++i) {
      Assignment a = decode_genome(cm, pop[i]);
      fit[i] = fitness(cm, a);
      if (fit[i] > res.best_fitness) {
        res.best_fitness = fit[i];
        res.best = std::move(a);
        res.best_genome = pop[i];
      }
    }
  };
  evaluate();

  std::uniform_int_distribution<std::size_t> any(0, pop.size() - 1);
  auto tournament = [&]() -> const Genome& {
    std::size_t best = any(rng);
    for (int k = 1; k < cfg.tournament; ++k) {
      const std::size_t c = any(rng);
      if (fit[c] > fit[best]) best = c;
    }
    return pop[best];
  };

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<std::size_t> rank(pop.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });
    std::vector<Genome> next;
    for (int e = 0; e < cfg.elitism; ++e) next.push_back(pop[rank[e]]);
    while (static_cast<int>(next.size()) < cfg.population) {
      Genome a = tournament();
      Genome b = tournament();
      if (unit(rng) < cfg.crossover_rate) {
        for (int t = 0; t < nt; ++t) {
          if (unit(rng) < 0.5) std::swap(a[t], b[t]);
        }
      }
      for (Genome* g : {&a, &b}) {
        for (int t = 0; t < nt; ++t) {
          if (unit(rng) < cfg.mutation_rate) (*g)[t] = gene_value(rng);
        }
      }
      next.push_back(std::move(a));
      if (static_cast<int>(next.size()) < cfg.population) next.push_back(std::move(b));
    }
    pop = std::move(next);
    evaluate();
    res.best_per_generation.push_back(res.best_fitness);
  }
  return res;
}

Assignment ga_allocate(const Scenario& scenario, const GaConfig& config) { return ga_run(scenario, config).best; }

json assignment_to_json(const Assignment& a) {
  json routes = json::array();
  for (const auto& [u, r] : a.routes) {
    json stops = json::array();
    for (const auto& s : r.stops) stops.push_back({{"task", s.task_id}, {"beta", s.beta}});
    routes.push_back({{"uav", u},
                      {"depot", r.depot},
                      {"stops", stops},
                      {"distance_m", r.total_distance_m},
                      {"curved_length_m", r.curved_length_m},
                      {"flight_energy_J", r.flight_energy_J},
                      {"process_energy_J", r.process_energy_J},
                      {"storage_used_bytes", r.storage_used_bytes},
                      {"flops", r.flops}});
  }
  return {{"routes", routes}, {"unassigned", std::vector<int>(a.unassigned.begin(), a.unassigned.end())}};
}

Assignment assignment_from_json(const json& j, const Scenario& scenario) {
  const CostModel cm(scenario);
  Assignment a;
  for (const auto& jr : j.at("routes")) {
    Route r;
    r.uav_id = jr.at("uav").get<int>();
    if (r.uav_id < 0 || r.uav_id >= cm.uav_count()) throw ValidationError("routes.uav", "unknown UAV id");
    r.depot = scenario.uavs[r.uav_id].home_station;
    for (const auto& s : jr.at("stops")) r.stops.push_back({s.at("task").get<int>(), s.at("beta").get<double>()});
    for (const auto& s : r.stops) {
      if (s.task_id < 0 || s.task_id >= cm.task_count()) throw ValidationError("routes.stops.task", "unknown task id");
    }
    const auto ev = evaluate_route(cm, r.uav_id, r.stops);
    r.total_distance_m = ev.euclidean_length_m;
    r.curved_length_m = ev.curved_length_m;
    r.flight_energy_J = ev.flight_energy_J;
    r.process_energy_J = ev.process_energy_J;
    r.storage_used_bytes = ev.storage_bytes;
    r.flops = ev.flops;
    a.routes[r.uav_id] = std::move(r);
  }
  for (int t : j.at("unassigned")) a.unassigned.insert(t);
  return a;
}

EpisodeLog execute_assignment(const Scenario& scenario, const Assignment& a, std::uint64_t seed,
                              const std::string& method, int episode) {
  Env env(scenario, EnvOptions{ControlMode::Distributed, true});
  env.reset(seed);
  TrajectoryRecorder rec;
  rec.begin(env, method, seed, episode);
  for (const auto& [u, r] : a.routes) {
    std::vector<PlannedStop> stops;
    for (const auto& s : r.stops) stops.push_back({s.task_id, s.beta});
    env.assign_route(u, stops);
  }
  while (!env.done()) rec.record(env.step(env.noop_actions()));
  rec.finish(env);
  return rec.take();
}

}  // namespace uavsim
