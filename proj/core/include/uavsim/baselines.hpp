#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavsim/env.hpp"
#include "uavsim/routing.hpp"
#include "uavsim/trajectory.hpp"

namespace uavsim {

struct GaConfig {
  int population = 50;
  int generations = 200;
  double crossover_rate = 0.8;
  double mutation_rate = 0.05;
  int elitism = 2;
  int tournament = 3;
  std::uint64_t seed = 0;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Tasks in random order, each offered to a uniformly random UAV and appended to its
/// route when that stays feasible.
Assignment rnd_allocate(const Scenario& scenario, std::uint64_t seed);

/// Repeatedly commits the (UAV, task, position) insertion with the best marginal
/// value minus curved-length cost. Deterministic.
Assignment greedy_allocate(const Scenario& scenario);

/// Chromosome: gene t is the UAV serving task t, or -1.
using Genome = std::vector<int>;

/// Routes each UAV's genes with order_route and drops its lowest-value tasks until the
/// route fits its budgets. Dropped genes are set to -1 in `genes`.
Assignment decode_genome(const CostModel& cm, Genome& genes);

struct GaResult {
  Assignment best;
  Genome best_genome;
  double best_fitness = 0.0;
  std::vector<double> best_per_generation;  // best-ever fitness after each generation
};

/// `initial`, when given, replaces the random initial population (size must match).
GaResult ga_run(const Scenario& scenario, const GaConfig& config,
                const std::optional<std::vector<Genome>>& initial = std::nullopt);
Assignment ga_allocate(const Scenario& scenario, const GaConfig& config);

nlohmann::json assignment_to_json(const Assignment& a);
/// Totals are recomputed from the scenario.
Assignment assignment_from_json(const nlohmann::json& j, const Scenario& scenario);

/// Flies a fixed assignment through the environment (static execution) and returns the
/// episode log.
EpisodeLog execute_assignment(const Scenario& scenario, const Assignment& a, std::uint64_t seed,
                              const std::string& method, int episode = 0);

}  // namespace uavsim
