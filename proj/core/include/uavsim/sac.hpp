#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavsim/env.hpp"
#include "uavsim/neural.hpp"
#include "uavsim/trajectory.hpp"

namespace uavsim {

struct Transition {
  std::vector<double> obs;
  std::vector<char> mask;
  std::vector<int> actions;  // one per controlled UAV
  double reward = 0.0;
  std::vector<double> next_obs;
  std::vector<char> next_mask;
  bool done = false;
};

/// Ring buffer; batches are drawn uniformly without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }
  /// Throws ContractViolation when batch > size().
  std::vector<std::size_t> sample_indices(std::size_t batch, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

struct SacConfig {
  int obs_dim = 0;
  int n_uavs = 1;
  int n_actions = 2;
  std::vector<int> hidden{128, 128};
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double tau = 0.005;
  double alpha = 0.2;
  int batch_size = 64;
  int replay_capacity = 100000;
  int warmup = 64;
  double utd_ratio = 1.0;

  static SacConfig from(const LearnParams& learn, const TrainingParams& training,
                        const NetworkParams& network, int obs_dim, int n_uavs, int n_actions);
};

struct UpdateStats {
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double actor_loss = 0.0;
  double entropy = 0.0;
};

/// Discrete soft actor-critic for one agent controlling several UAVs. The policy factors
/// per UAV; each critic outputs one Q-value per (UAV, action) and scores a joint action
/// as the sum of its per-UAV entries, which keeps the soft expectations exact.
class SacAgent {
 public:
  SacAgent() = default;
  SacAgent(SacConfig config, std::uint64_t seed);

  const SacConfig& config() const { return cfg_; }

  /// Per-UAV masked softmax distributions, concatenated [uav][action].
  std::vector<Vector> policy(const std::vector<double>& obs, const std::vector<char>& mask) const;
  std::vector<int> act(const std::vector<double>& obs, const std::vector<char>& mask, bool greedy);

  /// Per-sample soft targets y = r + gamma (1 - done) sum_u E_pi[min Q_targ - alpha ln pi].
  Vector q_targets(const std::vector<const Transition*>& batch) const;
  /// Both critics stepped on the squared error to the targets; returns pre-step losses.
  std::pair<double, double> critic_update(const std::vector<const Transition*>& batch, const Vector& targets);
  /// Actor step with the critics held fixed; returns the pre-step loss.
  double actor_update(const std::vector<const Transition*>& batch);
  UpdateStats update(const std::vector<const Transition*>& batch);

  /// Buffers the transition and runs the scheduled number of updates.
  void observe(Transition t);
  ReplayBuffer& buffer() { return buffer_; }
  long updates() const { return updates_; }

  /// Q_i(s, a) for a joint action; i in {0, 1}; `target` selects the target network.
  double q_value(int critic, const std::vector<double>& obs, const std::vector<int>& actions,
                 bool target = false) const;

  Mlp& actor() { return actor_; }
  Mlp& critic(int i) { return i == 0 ? critic1_ : critic2_; }
  Mlp& target(int i) { return i == 0 ? target1_ : target2_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic(int i) const { return i == 0 ? critic1_ : critic2_; }
  const Mlp& target(int i) const { return i == 0 ? target1_ : target2_; }

  nlohmann::json to_json() const;
  static SacAgent from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static SacAgent load(const std::filesystem::path& path);

  friend bool operator==(const SacAgent& a, const SacAgent& b);

 private:
  Matrix stack_obs(const std::vector<const Transition*>& batch, bool next) const;

  SacConfig cfg_;
  Mlp actor_, critic1_, critic2_, target1_, target2_;
  Adam actor_opt_, critic1_opt_, critic2_opt_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
  double update_credit_ = 0.0;
  long updates_ = 0;
  long env_steps_ = 0;
};

struct EpisodeResult {
  double team_reward = 0.0;
  int steps = 0;
  EpisodeLog log;
};

/// Runs one episode with the given agents (one per env agent). `learn` = false gives an
/// evaluation episode (greedy when `greedy`).
EpisodeResult run_episode(Env& env, std::vector<SacAgent>& agents, bool learn, bool greedy,
                          std::uint64_t episode_seed, const std::string& method, int episode);

/// Uniform over each UAV's allowed actions.
std::vector<std::vector<int>> random_actions(const Env& env, std::mt19937_64& rng);

}  // namespace uavsim
