#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavsim/env.hpp"

namespace uavsim {

inline constexpr int kTrajectoryVersion = 1;

/// One episode as JSON records: a header, one record per step, and a final record.
/// A log without its final record is truncated.
struct EpisodeLog {
  nlohmann::json header;
  std::vector<nlohmann::json> steps;
  nlohmann::json final_record;

  bool complete() const { return final_record.is_object(); }
};

/// Header carries the full scenario so a log can be audited on its own.
nlohmann::json episode_header(const Env& env, const std::string& method, std::uint64_t seed,
                              int episode);
nlohmann::json step_record(const StepInfo& info);
/// Executed routes, energy totals and landing times.
nlohmann::json final_record(const Env& env);

/// In-memory recorder; `reset` starts a new episode.
class TrajectoryRecorder {
 public:
  void begin(const Env& env, const std::string& method, std::uint64_t seed, int episode);
  void record(const StepInfo& info) { log_.steps.push_back(step_record(info)); }
  void finish(const Env& env) { log_.final_record = final_record(env); }
  const EpisodeLog& log() const { return log_; }
  EpisodeLog take() { return std::move(log_); }

 private:
  EpisodeLog log_;
};

/// Appends an episode as JSON lines.
void write_trajectory(const EpisodeLog& log, std::ostream& out);
void write_trajectory(const EpisodeLog& log, const std::filesystem::path& path);

/// Reads every episode in a JSON-lines file. Throws Error on a truncated episode
/// (header or steps without a final record) or malformed lines.
std::vector<EpisodeLog> read_trajectories(const std::filesystem::path& path);
std::vector<EpisodeLog> parse_trajectories(std::istream& in);

/// Safety audit of one complete log: battery and storage never negative, each task
/// collected at most once, executed routes pass check_feasible. Empty = clean.
std::vector<std::string> audit_trajectory(const EpisodeLog& log);

}  // namespace uavsim
