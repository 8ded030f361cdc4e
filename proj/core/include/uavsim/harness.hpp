#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavsim/baselines.hpp"
#include "uavsim/config.hpp"
#include "uavsim/trajectory.hpp"

namespace uavsim {

enum class Method { CoUav, Centralized, NoSharing, Rnd, Ga, Greedy };

/// Throws ValidationError("method", ...) for an unknown name.
Method parse_method(const std::string& name);
std::string method_name(Method m);
bool is_learned(Method m);
const std::vector<Method>& all_methods();

struct EpisodeMetrics {
  double avg_reward = 0.0;  // episode task reward per task, at the true collection rate
  double task_collection_rate = 0.0;
  double task_completion_rate = 0.0;
  double avg_processing_time_s = 0.0;  // last landing among launched UAVs
  double avg_energy_J = 0.0;           // mean flight + processing spend per UAV
  double uav_utilization_rate = 0.0;   // fraction of UAVs that launched
  int duplicate_collections = 0;
  int safety_violations = 0;  // audit_trajectory findings
  double wall_clock_s = 0.0;  // not written to metrics CSVs
};

/// Reads only the log. Throws Error for a truncated log.
EpisodeMetrics compute_metrics(const EpisodeLog& log);

/// Names and accessors for the numeric metric columns, in CSV order.
const std::vector<std::string>& metric_names();
double metric_value(const EpisodeMetrics& m, const std::string& name);

struct Stats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for n < 2
  double median = 0.0;
  std::size_t n = 0;
};
Stats summarize(std::vector<double> values);

struct TrainRow {
  std::uint64_t seed = 0;
  int episode = 0;
  double team_reward = 0.0;  // sum of agents' training rewards
  EpisodeMetrics metrics;
};

struct EvalRow {
  std::uint64_t seed = 0;
  int episode = 0;
  EpisodeMetrics metrics;
};

struct ExperimentResult {
  Method method = Method::CoUav;
  int task_scale = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<TrainRow> training;
  std::vector<EvalRow> evaluation;
  std::vector<EpisodeLog> eval_logs;
  std::vector<std::string> safety_problems;  // "seed <s> <phase> <episode>: finding"
  double wall_clock_s = 0.0;

  /// Per-seed mean of an evaluation metric, in seed order.
  std::vector<double> per_seed(const std::string& metric) const;
  /// Per-seed total duplicate collections over training episodes (evaluation for
  /// untrained methods).
  std::vector<double> duplicates_per_seed() const;
};

struct RunOptions {
  ScenarioConfig config;
  Method method = Method::CoUav;
  std::vector<std::uint64_t> seeds{0};
  GaConfig ga;
  /// Empty: nothing is written. Otherwise metrics, manifest, checkpoints and
  /// evaluation trajectories go here.
  std::filesystem::path out_dir;
  bool write_training_trajectories = false;
  std::function<void(const std::string&)> progress;  // optional status lines
};

/// Trains (learned methods) and evaluates each seed. The scenario for seed s is
/// generate_scenario(config, s).
ExperimentResult run_experiment(const RunOptions& options);

/// Re-evaluates a run directory written by run_experiment: learned methods load their
/// checkpoints, allocators recompute their assignments.
ExperimentResult evaluate_run(const std::filesystem::path& run_dir);

/// Applies the method's switches (sharing off, centralized control) to a config.
ScenarioConfig method_config(const ScenarioConfig& config, Method m);
EnvOptions method_env_options(Method m);

/// FNV-1a of the canonical config JSON, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

void write_training_csv(const ExperimentResult& r, std::ostream& out);
void write_eval_csv(const ExperimentResult& r, std::ostream& out);
/// One row per metric: method, task_scale, metric, mean, std, median, n (over per-seed means).
void write_summary_csv(const std::vector<ExperimentResult>& results, std::ostream& out);
nlohmann::json manifest(const RunOptions& options, const ExperimentResult& r);
void write_outputs(const RunOptions& options, const ExperimentResult& r);

/// Long-format plot files (method, task_scale, seed, episode, metric, value):
/// convergence.csv holds one reward row per (method, episode, seed); bars.csv holds
/// per-seed evaluation values plus mean and std rows over seeds.
void emit_plot_data(const std::vector<ExperimentResult>& results, const std::filesystem::path& dir);
void write_convergence_csv(const std::vector<ExperimentResult>& results, std::ostream& out);
void write_bars_csv(const std::vector<ExperimentResult>& results, std::ostream& out);

struct GapGrid {
  std::vector<double> i0{1.0};
  std::vector<double> lambda{0.0, 0.05, 0.1, 0.2};
  std::vector<int> t0{1, 5, 10, 20};
  std::vector<double> p{0.0, 0.25, 0.5};
  std::vector<int> k{2, 4};
};
/// Columns: i0, lambda, t0, p, k, worst_case_gap, expected_gap.
void write_gap_grid(const GapGrid& grid, std::ostream& out);

struct DuplicateAudit {
  std::string method;
  std::uint64_t seed = 0;
  int episode = 0;
  int duplicate_collections = 0;
  int max_duplicate_planned = 0;
  int safety_violations = 0;
};
std::vector<DuplicateAudit> audit_duplicates(const std::vector<EpisodeLog>& logs);
void write_duplicate_audit(const std::vector<DuplicateAudit>& rows, std::ostream& out);

/// Task counts for the small/medium/large sweep of a profile.
std::vector<int> default_task_scales(const std::string& profile);

std::string version_string();

}  // namespace uavsim
