#include "uavsim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fnv.hpp"
#include "uavsim/coordination.hpp"
#include "uavsim/error.hpp"
#include "uavsim/sac.hpp"

#ifndef UAVSIM_VERSION
#define UAVSIM_VERSION "0.0.0"
#endif

namespace uavsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::uint64_t agent_seed(std::uint64_t seed, int agent) { return seed * 1000003ull + 17ull * static_cast<std::uint64_t>(agent) + 1; }
std::uint64_t alloc_seed(std::uint64_t seed, int episode) { return seed * 7919ull + static_cast<std::uint64_t>(episode); }

Assignment allocate(Method m, const Scenario& sc, const GaConfig& ga, std::uint64_t seed, int episode) {
  switch (m) {
    case Method::Rnd: return rnd_allocate(sc, alloc_seed(seed, episode));
    case Method::Greedy: return greedy_allocate(sc);
    case Method::Ga: {
      GaConfig c = ga;
      c.seed = alloc_seed(seed, episode) ^ ga.seed;
      return ga_allocate(sc, c);
    }
    default: throw ContractViolation("allocate called for a learned method");
  }
}

std::vector<SacAgent> make_agents(const Env& env, const ScenarioConfig& cfg, std::uint64_t seed) {
  std::vector<SacAgent> agents;
  for (int a = 0; a < env.agent_count(); ++a) {
    agents.emplace_back(SacConfig::from(cfg.learn, cfg.training, cfg.network, env.obs_dim(a),
                                        static_cast<int>(env.agent_uavs(a).size()), env.action_count()),
                        agent_seed(seed, a));
  }
  return agents;
}

json agents_manifest(const Env& env) {
  json a = json::array();
  for (int i = 0; i < env.agent_count(); ++i) {
    const auto& uavs = env.agent_uavs(i);
    json stations = json::array();
    std::set<int> st;
    for (int u : uavs) st.insert(env.scenario().uavs[u].home_station);
    for (int s : st) stations.push_back(s);
    a.push_back({{"agent", i}, {"uavs", uavs}, {"stations", stations}, {"checkpoint", "agent_" + std::to_string(i) + ".json"}});
  }
  return a;
}

void note_problems(ExperimentResult& r, const EpisodeLog& log, std::uint64_t seed, const char* phase, int episode) {
  for (const auto& p : audit_trajectory(log)) {
    r.safety_problems.push_back("seed " + std::to_string(seed) + " " + phase + " " + std::to_string(episode) + ": " + p);
  }
}

EvalRow evaluate_agents(ExperimentResult& r, Env& env, std::vector<SacAgent>& agents, std::uint64_t seed, int episode,
                        const std::string& method) {
  const auto t = Clock::now();
  auto res = run_episode(env, agents, false, true, seed, method, episode);
  EvalRow row{seed, episode, compute_metrics(res.log)};
  row.metrics.wall_clock_s = seconds_since(t);
  if (row.metrics.safety_violations) note_problems(r, res.log, seed, "eval", episode);
  r.eval_logs.push_back(std::move(res.log));
  return row;
}

}  // namespace

Method parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  throw ValidationError("method", "unknown method '" + name + "' (expected couav, centralized, no-sharing, rnd, ga or greedy)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::CoUav: return "couav";
    case Method::Centralized: return "centralized";
    case Method::NoSharing: return "no-sharing";
    case Method::Rnd: return "rnd";
    case Method::Ga: return "ga";
    case Method::Greedy: return "greedy";
  }
  return "?";
}

bool is_learned(Method m) { return m == Method::CoUav || m == Method::Centralized || m == Method::NoSharing; }

const std::vector<Method>& all_methods() {
  static const std::vector<Method> v{Method::CoUav, Method::Centralized, Method::NoSharing,
                                     Method::Rnd,   Method::Ga,          Method::Greedy};
  return v;
}

EpisodeMetrics compute_metrics(const EpisodeLog& log) {
  if (!log.complete()) throw Error("cannot compute metrics of a truncated episode log");
  const Scenario sc = scenario_from_json(log.header.at("scenario"));
  const auto n_tasks = static_cast<double>(sc.tasks.size());
  EpisodeMetrics m;

  std::set<int> collected;
  double reward = 0.0;
  for (const auto& s : log.steps) {
    for (const auto& c : s.at("collections")) collected.insert(c.at("task").get<int>());
    m.duplicate_collections += static_cast<int>(s.at("duplicates").size());
    std::vector<ProgressedTask> progressed;
    for (const auto& c : s.at("completions")) {
      progressed.push_back({sc.tasks.at(c.at("task").get<int>()).priority, c.at("cr").get<double>(),
                            c.at("energy_J").get<double>()});
    }
    if (!progressed.empty()) reward += reward_fn(progressed, static_cast<double>(collected.size()) / n_tasks, sc.learn);
  }
  if (n_tasks > 0) {
    m.avg_reward = reward / n_tasks;
    m.task_collection_rate = static_cast<double>(collected.size()) / n_tasks;
    int done = 0;
    for (const auto& t : log.final_record.at("tasks")) done += t.at("status").get<std::string>() == "completed";
    m.task_completion_rate = done / n_tasks;
  }

  const auto& uavs = log.final_record.at("uavs");
  int launched = 0;
  double energy = 0.0;
  for (const auto& u : uavs) {
    energy += u.at("flight_spent_J").get<double>() + u.at("process_spent_J").get<double>();
    if (u.at("launched").get<bool>()) {
      ++launched;
      m.avg_processing_time_s = std::max(m.avg_processing_time_s, u.at("landed_time_s").get<double>());
    }
  }
  if (!uavs.empty()) {
    m.avg_energy_J = energy / static_cast<double>(uavs.size());
    m.uav_utilization_rate = launched / static_cast<double>(uavs.size());
  }
  m.safety_violations = static_cast<int>(audit_trajectory(log).size());
  return m;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> v{"avg_reward",         "task_collection_rate", "task_completion_rate",
                                          "avg_processing_time_s", "avg_energy_J",     "uav_utilization_rate",
                                          "duplicate_collections", "safety_violations"};
  return v;
}

double metric_value(const EpisodeMetrics& m, const std::string& name) {
  if (name == "avg_reward") return m.avg_reward;
  if (name == "task_collection_rate") return m.task_collection_rate;
  if (name == "task_completion_rate") return m.task_completion_rate;
  if (name == "avg_processing_time_s") return m.avg_processing_time_s;
  if (name == "avg_energy_J") return m.avg_energy_J;
  if (name == "uav_utilization_rate") return m.uav_utilization_rate;
  if (name == "duplicate_collections") return m.duplicate_collections;
  if (name == "safety_violations") return m.safety_violations;
  if (name == "wall_clock_s") return m.wall_clock_s;
  throw ValidationError("metric", "unknown metric '" + name + "'");
}

Stats summarize(std::vector<double> v) {
  Stats s;
  s.n = v.size();
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  s.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  return s;
}

std::vector<double> ExperimentResult::per_seed(const std::string& metric) const {
  std::vector<double> out;
  for (auto seed : seeds) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : evaluation) {
      if (r.seed != seed) continue;
      sum += metric_value(r.metrics, metric);
      ++n;
    }
    out.push_back(n ? sum / n : 0.0);
  }
  return out;
}

std::vector<double> ExperimentResult::duplicates_per_seed() const {
  if (training.empty()) return per_seed("duplicate_collections");
  std::vector<double> out;
  for (auto seed : seeds) {
    double sum = 0.0;
    for (const auto& r : training) {
      if (r.seed == seed) sum += r.metrics.duplicate_collections;
    }
    out.push_back(sum);
  }
  return out;
}

ScenarioConfig method_config(const ScenarioConfig& config, Method m) {
  ScenarioConfig c = config;
  if (m == Method::NoSharing) c.env.sharing_enabled = false;
  return c;
}

EnvOptions method_env_options(Method m) {
  EnvOptions o;
  if (m == Method::Centralized) o.mode = ControlMode::Centralized;
  if (!is_learned(m)) o.static_execution = true;
  return o;
}

std::string config_hash(const ScenarioConfig& config) {
  detail::Fnv f;
  f.add(config_to_json(config).dump());
  return f.hex();
}

ExperimentResult run_experiment(const RunOptions& opt) {
  const auto t_all = Clock::now();
  const ScenarioConfig cfg = method_config(opt.config, opt.method);
  validate(cfg);
  ExperimentResult r;
  r.method = opt.method;
  r.task_scale = cfg.tasks;
  r.seeds = opt.seeds;
  const std::string name = method_name(opt.method);
  const bool write = !opt.out_dir.empty();
  if (write) fs::create_directories(opt.out_dir);
  auto say = [&](const std::string& s) {
    if (opt.progress) opt.progress(s);
  };

  for (auto seed : opt.seeds) {
    const Scenario base = generate_scenario(cfg, seed);
    if (!is_learned(opt.method)) {
      for (int e = 0; e < cfg.training.eval_episodes; ++e) {
        const auto t = Clock::now();
        const Assignment a = allocate(opt.method, base, opt.ga, seed, e);
        auto log = execute_assignment(base, a, seed, name, e);
        EvalRow row{seed, e, compute_metrics(log)};
        row.metrics.wall_clock_s = seconds_since(t);
        if (row.metrics.safety_violations) note_problems(r, log, seed, "eval", e);
        r.evaluation.push_back(row);
        r.eval_logs.push_back(std::move(log));
      }
      say(name + " seed " + std::to_string(seed) + " evaluated");
      continue;
    }

    Env env(base, method_env_options(opt.method));
    env.reset(seed);
    auto agents = make_agents(env, cfg, seed);
    fs::path traj_path;
    if (write && opt.write_training_trajectories) {
      fs::create_directories(opt.out_dir / "trajectories");
      traj_path = opt.out_dir / "trajectories" / ("train_seed_" + std::to_string(seed) + ".jsonl");
      fs::remove(traj_path);
    }
    for (int e = 0; e < cfg.training.episodes; ++e) {
      const auto t = Clock::now();
      EpisodeResult res;
      if (cfg.training.vary_scenario && e > 0) {
        Env varied(generate_scenario(cfg, alloc_seed(seed, e)), method_env_options(opt.method));
        res = run_episode(varied, agents, true, false, seed, name, e);
      } else {
        res = run_episode(env, agents, true, false, seed, name, e);
      }
      TrainRow row{seed, e, res.team_reward, compute_metrics(res.log)};
      row.metrics.wall_clock_s = seconds_since(t);
      if (row.metrics.safety_violations) note_problems(r, res.log, seed, "train", e);
      if (!traj_path.empty()) write_trajectory(res.log, traj_path);
      r.training.push_back(row);
      if ((e + 1) % 50 == 0) {
        say(name + " seed " + std::to_string(seed) + " episode " + std::to_string(e + 1) + "/" +
            std::to_string(cfg.training.episodes) + " reward " + num(row.metrics.avg_reward));
      }
    }
    for (int e = 0; e < cfg.training.eval_episodes; ++e) r.evaluation.push_back(evaluate_agents(r, env, agents, seed, e, name));
    if (write) {
      const fs::path dir = opt.out_dir / "checkpoints" / ("seed_" + std::to_string(seed));
      fs::create_directories(dir);
      for (std::size_t a = 0; a < agents.size(); ++a) agents[a].save(dir / ("agent_" + std::to_string(a) + ".json"));
      auto out = open_out(dir / "agents.json");
      out << json{{"seed", seed}, {"method", name}, {"agents", agents_manifest(env)}}.dump(2) << '\n';
    }
  }
  r.wall_clock_s = seconds_since(t_all);
  if (write) write_outputs(opt, r);
  return r;
}

ExperimentResult evaluate_run(const fs::path& run_dir) {
  std::ifstream in(run_dir / "manifest.json");
  if (!in) throw Error("no manifest.json in " + run_dir.string());
  const json man = json::parse(in);
  RunOptions opt;
  opt.config = config_from_json(man.at("config"));
  opt.method = parse_method(man.at("method").get<std::string>());
  opt.seeds = man.at("seeds").get<std::vector<std::uint64_t>>();
  if (man.contains("ga")) {
    const auto& g = man.at("ga");
    opt.ga.population = g.at("population");
    opt.ga.generations = g.at("generations");
    opt.ga.crossover_rate = g.at("crossover_rate");
    opt.ga.mutation_rate = g.at("mutation_rate");
    opt.ga.elitism = g.at("elitism");
    opt.ga.tournament = g.at("tournament");
    opt.ga.seed = g.at("seed");
  }
  if (man.at("config_hash").get<std::string>() != config_hash(opt.config)) {
    throw Error("manifest config hash does not match its config");
  }
  if (!is_learned(opt.method)) return run_experiment(opt);
  const ScenarioConfig cfg = method_config(opt.config, opt.method);
  ExperimentResult r;
  r.method = opt.method;
  r.task_scale = cfg.tasks;
  r.seeds = opt.seeds;
  const auto t_all = Clock::now();
  for (auto seed : opt.seeds) {
    Env env(generate_scenario(cfg, seed), method_env_options(opt.method));
    env.reset(seed);
    const fs::path dir = run_dir / "checkpoints" / ("seed_" + std::to_string(seed));
    std::vector<SacAgent> agents;
    for (int a = 0; a < env.agent_count(); ++a) agents.push_back(SacAgent::load(dir / ("agent_" + std::to_string(a) + ".json")));
    for (int e = 0; e < cfg.training.eval_episodes; ++e) {
      r.evaluation.push_back(evaluate_agents(r, env, agents, seed, e, method_name(opt.method)));
    }
  }
  r.wall_clock_s = seconds_since(t_all);
  return r;
}

void write_training_csv(const ExperimentResult& r, std::ostream& out) {
  out << "method,task_scale,seed,episode,team_reward";
  for (const auto& n : metric_names()) out << ',' << n;
  out << '\n';
  for (const auto& row : r.training) {
    out << method_name(r.method) << ',' << r.task_scale << ',' << row.seed << ',' << row.episode << ','
        << num(row.team_reward);
    for (const auto& n : metric_names()) out << ',' << num(metric_value(row.metrics, n));
    out << '\n';
  }
}

void write_eval_csv(const ExperimentResult& r, std::ostream& out) {
  out << "method,task_scale,seed,episode";
  for (const auto& n : metric_names()) out << ',' << n;
  out << '\n';
  for (const auto& row : r.evaluation) {
    out << method_name(r.method) << ',' << r.task_scale << ',' << row.seed << ',' << row.episode;
    for (const auto& n : metric_names()) out << ',' << num(metric_value(row.metrics, n));
    out << '\n';
  }
}

void write_summary_csv(const std::vector<ExperimentResult>& results, std::ostream& out) {
  out << "method,task_scale,metric,mean,std,median,n\n";
  for (const auto& r : results) {
    for (const auto& n : metric_names()) {
      const Stats s = summarize(r.per_seed(n));
      out << method_name(r.method) << ',' << r.task_scale << ',' << n << ',' << num(s.mean) << ',' << num(s.std) << ','
          << num(s.median) << ',' << s.n << '\n';
    }
  }
}

json manifest(const RunOptions& opt, const ExperimentResult& r) {
  json files = {"eval_metrics.csv", "summary.csv", "timing.csv", "trajectories/eval.jsonl"};
  if (is_learned(opt.method)) {
    files.push_back("train_metrics.csv");
    files.push_back("checkpoints/");
  }
  return {{"format", "uavsim-manifest"},
          {"version", 1},
          {"uavsim_version", version_string()},
          {"trajectory_version", kTrajectoryVersion},
          {"method", method_name(opt.method)},
          {"seeds", opt.seeds},
          {"task_scale", r.task_scale},
          {"config_hash", config_hash(opt.config)},
          {"config", config_to_json(opt.config)},
          {"ga",
           {{"population", opt.ga.population},
            {"generations", opt.ga.generations},
            {"crossover_rate", opt.ga.crossover_rate},
            {"mutation_rate", opt.ga.mutation_rate},
            {"elitism", opt.ga.elitism},
            {"tournament", opt.ga.tournament},
            {"seed", opt.ga.seed}}},
          {"files", files}};
}

void write_outputs(const RunOptions& opt, const ExperimentResult& r) {
  const fs::path& dir = opt.out_dir;
  fs::create_directories(dir / "trajectories");
  {
    auto out = open_out(dir / "manifest.json");
    out << manifest(opt, r).dump(2) << '\n';
  }
  if (is_learned(opt.method)) {
    auto out = open_out(dir / "train_metrics.csv");
    write_training_csv(r, out);
  }
  {
    auto out = open_out(dir / "eval_metrics.csv");
    write_eval_csv(r, out);
  }
  {
    auto out = open_out(dir / "summary.csv");
    write_summary_csv({r}, out);
  }
  {
    auto out = open_out(dir / "timing.csv");
    out << "seed,phase,episode,wall_clock_s\n";
    for (const auto& row : r.training) out << row.seed << ",train," << row.episode << ',' << num(row.metrics.wall_clock_s) << '\n';
    for (const auto& row : r.evaluation) out << row.seed << ",eval," << row.episode << ',' << num(row.metrics.wall_clock_s) << '\n';
  }
  {
    const fs::path p = dir / "trajectories" / "eval.jsonl";
    fs::remove(p);
    auto out = open_out(p);
    for (const auto& log : r.eval_logs) write_trajectory(log, out);
  }
}

void write_convergence_csv(const std::vector<ExperimentResult>& results, std::ostream& out) {
  out << "method,task_scale,seed,episode,metric,value\n";
  for (const auto& r : results) {
    for (const auto& row : r.training) {
      out << method_name(r.method) << ',' << r.task_scale << ',' << row.seed << ',' << row.episode << ",avg_reward,"
          << num(row.metrics.avg_reward) << '\n';
    }
  }
}

void write_bars_csv(const std::vector<ExperimentResult>& results, std::ostream& out) {
  out << "method,task_scale,seed,episode,metric,value\n";
  for (const auto& r : results) {
    const std::string m = method_name(r.method);
    for (const auto& n : metric_names()) {
      const auto per = r.per_seed(n);
      for (std::size_t i = 0; i < per.size(); ++i) {
        out << m << ',' << r.task_scale << ',' << r.seeds[i] << ",eval," << n << ',' << num(per[i]) << '\n';
      }
      const Stats s = summarize(per);
      out << m << ',' << r.task_scale << ",all,eval," << n << "_mean," << num(s.mean) << '\n';
      out << m << ',' << r.task_scale << ",all,eval," << n << "_std," << num(s.std) << '\n';
    }
  }
}

void emit_plot_data(const std::vector<ExperimentResult>& results, const fs::path& dir) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "convergence.csv");
    write_convergence_csv(results, out);
  }
  auto out = open_out(dir / "bars.csv");
  write_bars_csv(results, out);
}

void write_gap_grid(const GapGrid& g, std::ostream& out) {
  out << "i0,lambda,t0,p,k,worst_case_gap,expected_gap\n";
  for (double i0 : g.i0) {
    for (double lambda : g.lambda) {
      for (int t0 : g.t0) {
        for (double p : g.p) {
          for (int k : g.k) {
            out << num(i0) << ',' << num(lambda) << ',' << t0 << ',' << num(p) << ',' << k << ','
                << num(worst_case_gap(i0, lambda, t0)) << ',' << num(expected_gap(i0, lambda, t0, p, k)) << '\n';
          }
        }
      }
    }
  }
}

std::vector<DuplicateAudit> audit_duplicates(const std::vector<EpisodeLog>& logs) {
  std::vector<DuplicateAudit> rows;
  for (const auto& log : logs) {
    DuplicateAudit a;
    a.method = log.header.value("method", "");
    a.seed = log.header.value("seed", std::uint64_t{0});
    a.episode = log.header.value("episode", 0);
    for (const auto& s : log.steps) {
      a.duplicate_collections += static_cast<int>(s.at("duplicates").size());
      a.max_duplicate_planned = std::max(a.max_duplicate_planned, s.at("duplicate_planned").get<int>());
    }
    a.safety_violations = static_cast<int>(audit_trajectory(log).size());
    rows.push_back(a);
  }
  return rows;
}

void write_duplicate_audit(const std::vector<DuplicateAudit>& rows, std::ostream& out) {
  out << "method,seed,episode,duplicate_collections,max_duplicate_planned,safety_violations\n";
  for (const auto& a : rows) {
    out << a.method << ',' << a.seed << ',' << a.episode << ',' << a.duplicate_collections << ','
        << a.max_duplicate_planned << ',' << a.safety_violations << '\n';
  }
}

std::vector<int> default_task_scales(const std::string& profile) {
  if (profile == "paper") return {110, 150, 170};
  if (profile == "desk") return {20, 30, 40};
  throw ValidationError("profile", "unknown profile '" + profile + "' (expected paper or desk)");
}

std::string version_string() { return UAVSIM_VERSION; }

}  // namespace uavsim
