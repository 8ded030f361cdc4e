#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "common/fixtures.hpp"
#include "uavsim/harness.hpp"

using namespace uavsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uavsim_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

json step(int t, std::vector<int> collected, std::vector<int> dups, std::vector<std::tuple<int, double, double>> done) {
  json s{{"type", "step"},
         {"step", t},
         {"flight_left_J", {80000.0, 90000.0}},
         {"process_left_J", {3900.0, 4000.0}},
         {"storage_free_bytes", {1e9, 2e9}},
         {"duplicate_planned", 0},
         {"collections", json::array()},
         {"duplicates", json::array()},
         {"completions", json::array()}};
  for (int c : collected) s["collections"].push_back({{"task", c}, {"uav", 0}, {"time_s", 30.0 * t}});
  for (int c : dups) s["duplicates"].push_back({{"task", c}, {"uav", 1}, {"time_s", 30.0 * t}});
  for (auto [task, cr, e] : done) s["completions"].push_back({{"task", task}, {"cr", cr}, {"energy_J", e}});
  return s;
}

// Three tasks, two UAVs. UAV 0 flies tasks 0, 1, 2; UAV 1 stays home.
EpisodeLog hand_log(Scenario& sc) {
  sc = fixture::small_scenario(2, 2, 3, 21);
  sc.tasks[0].priority = 3;
  sc.tasks[1].priority = 2;
  sc.tasks[2].priority = 1;
  Env env(sc);
  env.reset(0);
  EpisodeLog log;
  log.header = episode_header(env, "hand", 0, 0);
  log.steps.push_back(step(1, {0}, {}, {{0, 1.0, 100.0}}));
  log.steps.push_back(step(2, {1, 2}, {1}, {{1, 0.5, 40.0}}));
  log.steps.push_back(step(3, {}, {}, {}));
  json uavs = json::array();
  uavs.push_back({{"uav", 0}, {"station", 0}, {"launched", true}, {"landed_time_s", 610.0}, {"flight_spent_J", 6000.0},
                  {"process_spent_J", 140.0}, {"executed", json::array()}});
  uavs.push_back({{"uav", 1}, {"station", 1}, {"launched", false}, {"landed_time_s", -1.0}, {"flight_spent_J", 0.0},
                  {"process_spent_J", 0.0}, {"executed", json::array()}});
  log.final_record = {{"type", "final"},
                      {"uavs", uavs},
                      {"tasks", {{{"status", "completed"}}, {{"status", "partially_processed"}}, {{"status", "collected"}}}}};
  return log;
}

ScenarioConfig quick_config(int tasks) {
  auto c = fixture::small_config(2, 2, tasks);
  c.env.horizon_steps = 15;
  c.network.hidden_sizes = {16};
  c.training.episodes = 3;
  c.training.warmup_steps = 8;
  c.learn.batch_size = 8;
  return c;
}

}  // namespace

TEST(Metrics, HandWorkedThreeTaskLog) {
  Scenario sc;
  const EpisodeLog log = hand_log(sc);
  const auto m = compute_metrics(log);
  const auto& lp = sc.learn;
  auto term = [&](int pr, double cr, double e, double ct) {
    return ct * (lp.reward_mu * (std::exp(lp.reward_omega * cr) - 1.0) / 3.0 * pr - lp.reward_epsilon * e) * lp.reward_phi;
  };
  const double want = (term(3, 1.0, 100.0, 1.0 / 3.0) + term(2, 0.5, 40.0, 1.0)) / 3.0;
  EXPECT_NEAR(m.avg_reward, want, 1e-12);
  EXPECT_DOUBLE_EQ(m.task_collection_rate, 1.0);
  EXPECT_DOUBLE_EQ(m.task_completion_rate, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.avg_processing_time_s, 610.0);
  EXPECT_DOUBLE_EQ(m.avg_energy_J, 3070.0);
  EXPECT_DOUBLE_EQ(m.uav_utilization_rate, 0.5);
  EXPECT_EQ(m.duplicate_collections, 1);
}

TEST(Metrics, AllCollectedAndCompletedGivesUnitRates) {
  Scenario sc;
  EpisodeLog log = hand_log(sc);
  for (auto& t : log.final_record["tasks"]) t["status"] = "completed";
  const auto m = compute_metrics(log);
  EXPECT_DOUBLE_EQ(m.task_collection_rate, 1.0);
  EXPECT_DOUBLE_EQ(m.task_completion_rate, 1.0);
}

TEST(Metrics, NoLaunchMeansNoUtilisationAndNoTime) {
  const auto sc = fixture::small_scenario(2, 2, 4, 1);
  Env env(sc);
  env.reset(0);
  TrajectoryRecorder rec;
  rec.begin(env, "idle", 0, 0);
  while (!env.done()) rec.record(env.step(env.noop_actions()));
  rec.finish(env);
  const auto m = compute_metrics(rec.log());
  EXPECT_DOUBLE_EQ(m.uav_utilization_rate, 0.0);
  EXPECT_DOUBLE_EQ(m.avg_processing_time_s, 0.0);
  EXPECT_DOUBLE_EQ(m.task_collection_rate, 0.0);
  EXPECT_EQ(m.safety_violations, 0);
}

TEST(Metrics, TruncatedLogIsAnError) {
  Scenario sc;
  EpisodeLog log = hand_log(sc);
  log.final_record = nullptr;
  EXPECT_THROW(compute_metrics(log), Error);
}

TEST(Metrics, UnknownMetricName) { EXPECT_THROW(metric_value({}, "speed"), ValidationError); }

TEST(Summary, MatchesIndependentRecomputation) {
  fixture::Gen g(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(g.integer(1, 12));
    for (auto& x : v) x = g.uniform(-5, 5);
    const Stats s = summarize(v);
    double mean = 0;
    for (double x : v) mean += x;
    mean /= v.size();
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double med = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    EXPECT_NEAR(s.mean, mean, 1e-12);
    EXPECT_NEAR(s.std, sd, 1e-12);
    EXPECT_DOUBLE_EQ(s.median, med);
    EXPECT_EQ(s.n, n);
  }
  EXPECT_EQ(summarize({}).n, 0u);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : all_methods()) EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("dqn"), ValidationError);
  EXPECT_TRUE(is_learned(Method::CoUav));
  EXPECT_FALSE(is_learned(Method::Ga));
  EXPECT_FALSE(method_config(profile_config("desk"), Method::NoSharing).env.sharing_enabled);
}

TEST(Run, StaticMethodEvaluatesEverySeed) {
  RunOptions opt;
  opt.config = quick_config(8);
  opt.method = Method::Rnd;
  opt.seeds = {0, 1, 2};
  const auto r = run_experiment(opt);
  EXPECT_TRUE(r.training.empty());
  EXPECT_EQ(r.evaluation.size(), 3u);
  EXPECT_EQ(r.eval_logs.size(), 3u);
  EXPECT_TRUE(r.safety_problems.empty());
  EXPECT_EQ(r.per_seed("task_collection_rate").size(), 3u);
}

TEST(Run, OutputsAreReproducibleFromTheManifest) {
  RunOptions opt;
  opt.config = quick_config(6);
  opt.method = Method::CoUav;
  opt.seeds = {4, 5};
  opt.out_dir = scratch("repro_a");
  const auto r = run_experiment(opt);
  EXPECT_EQ(r.training.size(), 6u);
  EXPECT_EQ(r.evaluation.size(), 2u);

  RunOptions again = opt;
  again.out_dir = scratch("repro_b");
  run_experiment(again);
  for (const char* f : {"train_metrics.csv", "eval_metrics.csv", "summary.csv", "manifest.json", "trajectories/eval.jsonl"}) {
    EXPECT_EQ(slurp(opt.out_dir / f), slurp(again.out_dir / f)) << f;
  }
  EXPECT_TRUE(fs::exists(opt.out_dir / "checkpoints"));

  const auto re = evaluate_run(opt.out_dir);
  ASSERT_EQ(re.evaluation.size(), r.evaluation.size());
  std::ostringstream a, b;
  write_eval_csv(r, a);
  write_eval_csv(re, b);
  EXPECT_EQ(a.str(), b.str());
  fs::remove_all(opt.out_dir);
  fs::remove_all(again.out_dir);
}

TEST(Run, TamperedManifestIsRejected) {
  RunOptions opt;
  opt.config = quick_config(5);
  opt.method = Method::Greedy;
  opt.out_dir = scratch("tamper");
  run_experiment(opt);
  json man = json::parse(slurp(opt.out_dir / "manifest.json"));
  man["config"]["tasks"] = 6;
  std::ofstream(opt.out_dir / "manifest.json") << man.dump();
  EXPECT_THROW(evaluate_run(opt.out_dir), Error);
  fs::remove_all(opt.out_dir);
}

TEST(Run, SummaryAgreesWithPerEpisodeCsv) {
  RunOptions opt;
  opt.config = quick_config(10);
  opt.config.training.eval_episodes = 2;
  opt.method = Method::Rnd;
  opt.seeds = {0, 1, 2, 3};
  const auto r = run_experiment(opt);
  std::ostringstream ev, sum;
  write_eval_csv(r, ev);
  write_summary_csv({r}, sum);
  const auto eval_rows = read_csv(ev.str());
  const auto& header = eval_rows.front();
  std::map<std::string, std::map<std::string, std::vector<double>>> per_seed;  // metric -> seed -> values
  for (std::size_t i = 1; i < eval_rows.size(); ++i) {
    for (std::size_t c = 4; c < header.size(); ++c) per_seed[header[c]][eval_rows[i][2]].push_back(std::stod(eval_rows[i][c]));
  }
  const auto sum_rows = read_csv(sum.str());
  ASSERT_EQ(sum_rows.size(), 1 + metric_names().size());
  for (std::size_t i = 1; i < sum_rows.size(); ++i) {
    std::vector<double> means;
    for (const auto& [seed, v] : per_seed.at(sum_rows[i][2])) {
      double m = 0;
      for (double x : v) m += x;
      means.push_back(m / v.size());
    }
    double mean = 0;
    for (double x : means) mean += x;
    mean /= means.size();
    EXPECT_NEAR(std::stod(sum_rows[i][3]), mean, 1e-9 * std::max(1.0, std::abs(mean))) << sum_rows[i][2];
    EXPECT_EQ(sum_rows[i][6], "4");
  }
}

TEST(PlotData, EmptySweepWritesHeadersOnly) {
  const fs::path dir = scratch("empty_plots");
  emit_plot_data({}, dir);
  EXPECT_EQ(slurp(dir / "convergence.csv"), "method,task_scale,seed,episode,metric,value\n");
  EXPECT_EQ(slurp(dir / "bars.csv"), "method,task_scale,seed,episode,metric,value\n");
  fs::remove_all(dir);
}

TEST(PlotData, ConvergenceHasOneRowPerEpisodeAndSeed) {
  RunOptions opt;
  opt.config = quick_config(5);
  opt.config.training.episodes = 2;
  opt.method = Method::NoSharing;
  opt.seeds = {0, 1, 2};
  const auto r = run_experiment(opt);
  std::ostringstream out;
  write_convergence_csv({r}, out);
  const auto rows = read_csv(out.str());
  EXPECT_EQ(rows.size(), 1u + 2 * 3);
  std::set<std::pair<std::string, std::string>> keys;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][0], "no-sharing");
    EXPECT_EQ(rows[i][4], "avg_reward");
    keys.insert({rows[i][2], rows[i][3]});
  }
  EXPECT_EQ(keys.size(), 6u);
}

TEST(PlotData, BarsAggregateMatchesRecomputation) {
  RunOptions opt;
  opt.config = quick_config(9);
  opt.method = Method::Rnd;
  opt.seeds = {1, 2, 3, 4, 5};
  const auto r = run_experiment(opt);
  std::ostringstream out;
  write_bars_csv({r}, out);
  std::map<std::string, std::vector<double>> values;
  std::map<std::string, double> agg;
  for (const auto& row : read_csv(out.str())) {
    if (row[0] == "method") continue;
    if (row[2] == "all") {
      agg[row[4]] = std::stod(row[5]);
    } else {
      values[row[4]].push_back(std::stod(row[5]));
    }
  }
  for (const auto& [metric, v] : values) {
    ASSERT_EQ(v.size(), 5u);
    double mean = 0;
    for (double x : v) mean += x;
    mean /= 5;
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    EXPECT_NEAR(agg.at(metric + "_mean"), mean, 1e-9 * std::max(1.0, std::abs(mean)));
    EXPECT_NEAR(agg.at(metric + "_std"), std::sqrt(ss / 4), 1e-9 * std::max(1.0, std::abs(mean)));
  }
}

TEST(GapGrid, OneRowPerCombination) {
  GapGrid g;
  std::ostringstream out;
  write_gap_grid(g, out);
  const auto rows = read_csv(out.str());
  EXPECT_EQ(rows.size(), 1 + g.i0.size() * g.lambda.size() * g.t0.size() * g.p.size() * g.k.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (std::stod(rows[i][3]) == 0.0 && rows[i][4] == "2") {
      EXPECT_EQ(rows[i][5], rows[i][6]);
    }
    if (std::stod(rows[i][1]) == 0.0) {
      EXPECT_EQ(std::stod(rows[i][6]), std::stod(rows[i][0]));
    }
  }
}

TEST(DuplicateAudit, CountsPerEpisode) {
  Scenario sc;
  const EpisodeLog log = hand_log(sc);
  const auto rows = audit_duplicates({log, log});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].method, "hand");
  EXPECT_EQ(rows[0].duplicate_collections, 1);
  std::ostringstream out;
  write_duplicate_audit(rows, out);
  EXPECT_EQ(read_csv(out.str()).size(), 3u);
}

TEST(Scales, DefaultsPerProfile) {
  EXPECT_EQ(default_task_scales("desk"), (std::vector<int>{20, 30, 40}));
  EXPECT_EQ(default_task_scales("paper"), (std::vector<int>{110, 150, 170}));
  EXPECT_FALSE(version_string().empty());
}
