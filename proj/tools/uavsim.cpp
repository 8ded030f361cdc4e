// Command-line front end: scenario generation, training, evaluation, sweeps and audits.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "uavsim/config.hpp"
#include "uavsim/coordination.hpp"
#include "uavsim/error.hpp"
#include "uavsim/harness.hpp"

namespace fs = std::filesystem;
using namespace uavsim;

namespace {

constexpr const char* kOutputRootVar = "UAVSIM_OUTPUT_ROOT";

struct Common {
  std::string config;
  std::string profile = "desk";
  std::uint64_t seed = 0;
  std::string seeds;
  std::string method = "couav";
  std::string tasks;
  int t0 = -1;
  double d_threshold = -1.0;
  bool no_sharing = false;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file (overrides --profile)");
  cmd->add_option("--profile", c.profile, "Built-in profile: desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", c.seed, "Single seed");
  cmd->add_option("--seeds", c.seeds, "Seed list: 0,1,2 or 0-4");
  cmd->add_option("--method", c.method, "couav, centralized, no-sharing, rnd, ga, greedy (sweep: comma list or all)");
  cmd->add_option("--tasks", c.tasks, "Task count (sweep: comma list)");
  cmd->add_option("--t0", c.t0, "Periodic sync interval in steps");
  cmd->add_option("--d-threshold", c.d_threshold, "Proximity exchange distance in metres");
  cmd->add_flag("--no-sharing", c.no_sharing, "Disable proximity and periodic sharing");
  cmd->add_option("--out", c.out, "Output directory (relative paths resolve under $" + std::string(kOutputRootVar) + ")");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int to_int(const std::string& s, const std::string& field) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ValidationError(field, "not an integer: '" + s + "'");
  }
}

std::vector<std::uint64_t> parse_seeds(const Common& c) {
  if (c.seeds.empty()) return {c.seed};
  std::vector<std::uint64_t> out;
  for (const auto& part : split(c.seeds, ',')) {
    const auto dash = part.find('-');
    if (dash != std::string::npos && dash > 0) {
      const int lo = to_int(part.substr(0, dash), "seeds");
      const int hi = to_int(part.substr(dash + 1), "seeds");
      if (lo < 0 || hi < lo) throw ValidationError("seeds", "bad range '" + part + "'");
      for (int s = lo; s <= hi; ++s) out.push_back(static_cast<std::uint64_t>(s));
    } else {
      const int s = to_int(part, "seeds");
      if (s < 0) throw ValidationError("seeds", "seeds must be nonnegative");
      out.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (out.empty()) throw ValidationError("seeds", "empty seed list");
  return out;
}

std::vector<int> parse_tasks(const Common& c) {
  std::vector<int> out;
  for (const auto& p : split(c.tasks, ',')) out.push_back(to_int(p, "tasks"));
  return out;
}

ScenarioConfig base_config(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? profile_config(c.profile) : load_config(c.config);
  if (c.t0 >= 0) cfg.learn.t0_sync = c.t0;
  if (c.d_threshold >= 0.0) cfg.learn.d_threshold_m = c.d_threshold;
  if (c.no_sharing) cfg.env.sharing_enabled = false;
  const auto tasks = parse_tasks(c);
  if (tasks.size() == 1) cfg.tasks = tasks.front();
  validate(cfg);
  return cfg;
}

fs::path output_root() {
  const char* v = std::getenv(kOutputRootVar);
  return v && *v ? fs::path(v) : fs::path("runs");
}

fs::path resolve_out(const Common& c, const std::string& fallback) {
  const fs::path p = c.out.empty() ? fs::path(fallback) : fs::path(c.out);
  return p.is_absolute() ? p : output_root() / p;
}

void progress(const std::string& s) { std::cerr << s << '\n'; }

void print_summary(const std::vector<ExperimentResult>& results) {
  for (const auto& r : results) {
    const Stats rew = summarize(r.per_seed("avg_reward"));
    const Stats col = summarize(r.per_seed("task_collection_rate"));
    const Stats dup = summarize(r.duplicates_per_seed());
    std::cout << method_name(r.method) << " tasks=" << r.task_scale << " seeds=" << r.seeds.size()
              << " reward median=" << rew.median << " collection mean=" << col.mean
              << " duplicates median=" << dup.median << " safety=" << r.safety_problems.size() << '\n';
  }
}

int cmd_generate(const Common& c) {
  const ScenarioConfig cfg = base_config(c);
  const fs::path dir = resolve_out(c, "scenario");
  fs::create_directories(dir);
  const fs::path path = dir / ("scenario_seed_" + std::to_string(c.seed) + ".json");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << scenario_to_json(generate_scenario(cfg, c.seed)).dump(2) << '\n';
  std::ofstream cfg_out(dir / "config.json");
  cfg_out << config_to_json(cfg).dump(2) << '\n';
  std::cout << path.string() << '\n';
  return 0;
}

int cmd_train(const Common& c) {
  RunOptions opt;
  opt.config = base_config(c);
  opt.method = parse_method(c.method);
  opt.seeds = parse_seeds(c);
  opt.out_dir = resolve_out(c, "train_" + c.method);
  opt.progress = progress;
  const auto r = run_experiment(opt);
  print_summary({r});
  std::cout << "wrote " << opt.out_dir.string() << '\n';
  return r.safety_problems.empty() ? 0 : 3;
}

int cmd_evaluate(const Common& c) {
  if (c.out.empty()) throw ValidationError("out", "evaluate needs --out pointing at a run directory");
  const fs::path dir = resolve_out(c, "");
  const auto r = evaluate_run(dir);
  const fs::path eval_dir = dir / "evaluation";
  fs::create_directories(eval_dir);
  {
    std::ofstream out(eval_dir / "eval_metrics.csv");
    write_eval_csv(r, out);
  }
  {
    std::ofstream out(eval_dir / "summary.csv");
    write_summary_csv({r}, out);
  }
  print_summary({r});
  return r.safety_problems.empty() ? 0 : 3;
}

int cmd_sweep(const Common& c) {
  const ScenarioConfig base = base_config(c);
  std::vector<Method> methods;
  if (c.method == "all") {
    methods = all_methods();
  } else {
    for (const auto& m : split(c.method, ',')) methods.push_back(parse_method(m));
  }
  auto scales = parse_tasks(c);
  if (scales.empty()) scales = default_task_scales(c.config.empty() ? c.profile : "desk");
  const fs::path dir = resolve_out(c, "sweep");
  std::vector<ExperimentResult> results;
  for (Method m : methods) {
    for (int n : scales) {
      RunOptions opt;
      opt.config = base;
      opt.config.tasks = n;
      opt.method = m;
      opt.seeds = parse_seeds(c);
      opt.out_dir = dir / method_name(m) / ("tasks_" + std::to_string(n));
      opt.progress = progress;
      results.push_back(run_experiment(opt));
    }
  }
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "summary.csv");
    write_summary_csv(results, out);
  }
  emit_plot_data(results, dir / "plots");
  print_summary(results);
  std::cout << "wrote " << dir.string() << '\n';
  int bad = 0;
  for (const auto& r : results) bad += static_cast<int>(r.safety_problems.size());
  return bad ? 3 : 0;
}

int cmd_gap(const Common& c) {
  const ScenarioConfig cfg = base_config(c);
  GapGrid grid;
  grid.lambda = {0.0, cfg.learn.lambda_decay / 2, cfg.learn.lambda_decay, 2 * cfg.learn.lambda_decay};
  if (c.t0 >= 0) grid.t0 = {c.t0};
  const fs::path dir = resolve_out(c, "gap");
  fs::create_directories(dir);
  const fs::path path = dir / "gap_grid.csv";
  std::ofstream out(path);
  write_gap_grid(grid, out);
  std::cout << path.string() << '\n';
  return 0;
}

int cmd_audit(const Common& c) {
  if (c.out.empty()) throw ValidationError("out", "audit-duplicates needs --out pointing at a run directory or .jsonl file");
  const fs::path target = resolve_out(c, "");
  std::vector<fs::path> files;
  if (fs::is_directory(target)) {
    for (const auto& e : fs::recursive_directory_iterator(target)) {
      if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(target);
  }
  std::vector<EpisodeLog> logs;
  for (const auto& f : files) {
    auto part = read_trajectories(f);
    for (auto& l : part) logs.push_back(std::move(l));
  }
  const auto rows = audit_duplicates(logs);
  const fs::path out_path = (fs::is_directory(target) ? target : target.parent_path()) / "duplicate_audit.csv";
  std::ofstream out(out_path);
  write_duplicate_audit(rows, out);
  int dups = 0, bad = 0;
  for (const auto& r : rows) {
    dups += r.duplicate_collections;
    bad += r.safety_violations;
  }
  std::cout << logs.size() << " episodes, " << dups << " duplicate collections, " << bad << " safety violations\n"
            << out_path.string() << '\n';
  return bad ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-station UAV task allocation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());
  Common c;
  auto* gen = app.add_subcommand("generate-scenario", "Write a generated scenario as JSON");
  auto* train = app.add_subcommand("train", "Train (learned methods) and evaluate over seeds");
  auto* eval = app.add_subcommand("evaluate", "Re-evaluate a run directory from its manifest");
  auto* sweep = app.add_subcommand("sweep", "Methods x task scales x seeds, with plot data");
  auto* gap = app.add_subcommand("gap-analysis", "Staleness gap formulas over a parameter grid");
  auto* audit = app.add_subcommand("audit-duplicates", "Duplicate-collection and safety audit of trajectories");
  for (auto* cmd : {gen, train, eval, sweep, gap, audit}) add_common(cmd, c);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_generate(c);
    if (*train) return cmd_train(c);
    if (*eval) return cmd_evaluate(c);
    if (*sweep) return cmd_sweep(c);
    if (*gap) return cmd_gap(c);
    if (*audit) return cmd_audit(c);
  } catch (const ValidationError& e) {
    std::cerr << "uavsim: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "uavsim: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
