#include "uavsim/trajectory.hpp"

#include <fstream>
#include <map>
#include <set>

#include "uavsim/config.hpp"
#include "uavsim/error.hpp"

namespace uavsim {

using nlohmann::json;

json episode_header(const Env& env, const std::string& method, std::uint64_t seed, int episode) {
  json agents = json::array();
  for (int a = 0; a < env.agent_count(); ++a) agents.push_back(env.agent_uavs(a));
  return {{"type", "header"},
          {"version", kTrajectoryVersion},
          {"method", method},
          {"seed", seed},
          {"episode", episode},
          {"mode", env.options().mode == ControlMode::Centralized ? "centralized" : "distributed"},
          {"static_execution", env.options().static_execution},
          {"agents", agents},
          {"scenario", scenario_to_json(env.scenario())}};
}

json step_record(const StepInfo& info) {
  json j{{"type", "step"},
         {"step", info.step},
         {"actions", info.actions},
         {"rewards", info.rewards},
         {"collection_rate_believed", info.collection_rate_believed},
         {"flight_left_J", info.flight_left_J},
         {"process_left_J", info.process_left_J},
         {"storage_free_bytes", info.storage_free_bytes},
         {"same_agent_conflicts", info.same_agent_conflicts},
         {"duplicate_planned", info.duplicate_planned},
         {"done", info.done},
         {"digest", info.digest}};
  auto& col = j["collections"] = json::array();
  for (const auto& c : info.collections) col.push_back({{"task", c.task_id}, {"uav", c.uav_id}, {"time_s", c.time_s}});
  auto& dup = j["duplicates"] = json::array();
  for (const auto& c : info.duplicates) dup.push_back({{"task", c.task_id}, {"uav", c.uav_id}, {"time_s", c.time_s}});
  auto& comp = j["completions"] = json::array();
  for (const auto& c : info.completions) {
    comp.push_back({{"task", c.task_id},
                    {"uav", c.uav_id},
                    {"agent", c.agent},
                    {"cr", c.completion_ratio},
                    {"energy_J", c.energy_J},
                    {"time_s", c.time_s},
                    {"partial", c.partial}});
  }
  auto& asg = j["assignments"] = json::array();
  for (const auto& a : info.assignments) {
    asg.push_back({{"task", a.task_id}, {"uav", a.uav_id}, {"agent", a.agent}, {"insert_at", a.insert_at}, {"beta", a.beta}});
  }
  auto& rel = j["releases"] = json::array();
  for (const auto& r : info.releases) {
    rel.push_back({{"task", r.task_id}, {"uav", r.uav_id}, {"station", r.station}, {"already_taken", r.already_taken}});
  }
  auto& sh = j["share_events"] = json::array();
  for (const auto& e : info.share_events) {
    sh.push_back({{"kind", e.kind == ShareEvent::Kind::Proximity ? "proximity" : "periodic"},
                  {"step", e.step},
                  {"uav_i", e.uav_i},
                  {"uav_j", e.uav_j},
                  {"digest", e.digest}});
  }
  auto& land = j["landings"] = json::array();
  for (const auto& l : info.landings) land.push_back({{"uav", l.uav_id}, {"time_s", l.time_s}, {"forced", l.forced}});
  return j;
}

json final_record(const Env& env) {
  const auto& st = env.state();
  json uavs = json::array();
  for (const auto& u : st.uavs) {
    json route = json::array();
    for (const auto& s : u.executed) route.push_back({{"task", s.task_id}, {"beta", s.beta}});
    uavs.push_back({{"uav", u.id},
                    {"station", u.station},
                    {"launched", u.launched},
                    {"phase", phase_name(u.phase)},
                    {"landed_time_s", u.landed_time_s},
                    {"flight_spent_J", u.flight_spent_J},
                    {"process_spent_J", u.process_spent_J},
                    {"storage_free_bytes", u.storage_free_bytes},
                    {"executed", route}});
  }
  json tasks = json::array();
  for (const auto& t : st.tasks) {
    tasks.push_back({{"status", task_status_name(t.status)}, {"processed_fraction", t.processed_fraction}});
  }
  return {{"type", "final"}, {"steps", st.time_step}, {"uavs", uavs}, {"tasks", tasks}};
}

void TrajectoryRecorder::begin(const Env& env, const std::string& method, std::uint64_t seed, int episode) {
  log_ = {};
  log_.header = episode_header(env, method, seed, episode);
}

void write_trajectory(const EpisodeLog& log, std::ostream& out) {
  out << log.header.dump() << '\n';
  for (const auto& s : log.steps) out << s.dump() << '\n';
  if (log.complete()) out << log.final_record.dump() << '\n';
}

void write_trajectory(const EpisodeLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_trajectory(log, out);
}

std::vector<EpisodeLog> parse_trajectories(std::istream& in) {
  std::vector<EpisodeLog> out;
  EpisodeLog cur;
  bool open = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error("trajectory line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto type = j.value("type", "");
    if (type == "header") {
      if (open) throw Error("trajectory line " + std::to_string(lineno) + ": episode truncated (no final record)");
      cur = {};
      cur.header = std::move(j);
      open = true;
    } else if (type == "step") {
      if (!open) throw Error("trajectory line " + std::to_string(lineno) + ": step before header");
      cur.steps.push_back(std::move(j));
    } else if (type == "final") {
      if (!open) throw Error("trajectory line " + std::to_string(lineno) + ": final before header");
      cur.final_record = std::move(j);
      out.push_back(std::move(cur));
      open = false;
    } else {
      throw Error("trajectory line " + std::to_string(lineno) + ": unknown record type '" + type + "'");
    }
  }
  if (open) throw Error("trajectory truncated: last episode has no final record");
  return out;
}

std::vector<EpisodeLog> read_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_trajectories(in);
}

std::vector<std::string> audit_trajectory(const EpisodeLog& log) {
  std::vector<std::string> problems;
  if (!log.complete()) {
    problems.push_back("truncated log");
    return problems;
  }
  constexpr double kTol = 1e-6;
  const Scenario scenario = scenario_from_json(log.header.at("scenario"));
  std::map<int, int> collected;
  for (const auto& s : log.steps) {
    const int step = s.at("step").get<int>();
    const auto fl = s.at("flight_left_J").get<std::vector<double>>();
    const auto pl = s.at("process_left_J").get<std::vector<double>>();
    const auto sf = s.at("storage_free_bytes").get<std::vector<double>>();
    for (std::size_t u = 0; u < fl.size(); ++u) {
      if (fl[u] < -kTol) problems.push_back("step " + std::to_string(step) + ": UAV " + std::to_string(u) + " flight battery negative");
      if (pl[u] < -kTol) problems.push_back("step " + std::to_string(step) + ": UAV " + std::to_string(u) + " processing battery negative");
      if (sf[u] < -kTol) problems.push_back("step " + std::to_string(step) + ": UAV " + std::to_string(u) + " storage overflow");
    }
    for (const auto& c : s.at("collections")) {
      const int t = c.at("task").get<int>();
      if (++collected[t] > 1) problems.push_back("task " + std::to_string(t) + " collected more than once");
    }
  }
  Assignment a;
  std::set<int> routed;
  const CostModel cm(scenario);
  for (const auto& ju : log.final_record.at("uavs")) {
    const int id = ju.at("uav").get<int>();
    const auto& spec = scenario.uavs.at(id);
    if (ju.at("flight_spent_J").get<double>() > spec.battery_flight_J + kTol) {
      problems.push_back("UAV " + std::to_string(id) + " spent more flight energy than its battery");
    }
    if (ju.at("process_spent_J").get<double>() > spec.battery_process_J + kTol) {
      problems.push_back("UAV " + std::to_string(id) + " spent more processing energy than its battery");
    }
    Route r;
    r.uav_id = id;
    r.depot = spec.home_station;
    for (const auto& s : ju.at("executed")) {
      r.stops.push_back({s.at("task").get<int>(), s.at("beta").get<double>()});
      routed.insert(r.stops.back().task_id);
    }
    if (!r.stops.empty()) a.routes[id] = r;
  }
  for (int t = 0; t < static_cast<int>(scenario.tasks.size()); ++t) {
    if (!routed.count(t)) a.unassigned.insert(t);
  }
  try {
    const auto report = check_feasible(a, cm);
    if (!report.feasible()) problems.push_back("executed routes infeasible: " + report.summary());
  } catch (const ValidationError& e) {
    problems.push_back(std::string("executed routes malformed: ") + e.what());
  }
  return problems;
}

}  // namespace uavsim
