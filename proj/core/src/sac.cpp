#include "uavsim/sac.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "uavsim/error.hpp"

namespace uavsim {

using nlohmann::json;

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ValidationError("learn.replay_capacity", "must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, std::mt19937_64& rng) const {
  const std::size_t n = items_.size();
  if (batch > n) throw ContractViolation("replay buffer holds fewer transitions than the batch size");
  // Floyd's algorithm: a uniform batch-subset of [0, n).
  std::vector<std::size_t> out;
  out.reserve(batch);
  for (std::size_t j = n - batch; j < n; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(t);
    } else {
      out.push_back(j);
    }
  }
  return out;
}

SacConfig SacConfig::from(const LearnParams& learn, const TrainingParams& training,
                          const NetworkParams& network, int obs_dim, int n_uavs, int n_actions) {
  SacConfig c;
  c.obs_dim = obs_dim;
  c.n_uavs = n_uavs;
  c.n_actions = n_actions;
  c.hidden = network.hidden_sizes;
  c.actor_lr = learn.actor_lr;
  c.critic_lr = learn.critic_lr;
  c.gamma = learn.gamma;
  c.tau = learn.tau_soft;
  c.alpha = learn.entropy_alpha;
  c.batch_size = learn.batch_size;
  c.replay_capacity = learn.replay_capacity;
  c.warmup = training.warmup_steps;
  c.utd_ratio = training.utd_ratio;
  return c;
}

namespace {

std::vector<int> layer_sizes(const SacConfig& c) {
  std::vector<int> s{c.obs_dim};
  s.insert(s.end(), c.hidden.begin(), c.hidden.end());
  s.push_back(c.n_uavs * c.n_actions);
  return s;
}

json config_json(const SacConfig& c) {
  return {{"obs_dim", c.obs_dim},       {"n_uavs", c.n_uavs},         {"n_actions", c.n_actions},
          {"hidden", c.hidden},         {"actor_lr", c.actor_lr},     {"critic_lr", c.critic_lr},
          {"gamma", c.gamma},           {"tau", c.tau},               {"alpha", c.alpha},
          {"batch_size", c.batch_size}, {"replay_capacity", c.replay_capacity},
          {"warmup", c.warmup},         {"utd_ratio", c.utd_ratio}};
}

SacConfig config_from(const json& j) {
  SacConfig c;
  c.obs_dim = j.at("obs_dim");
  c.n_uavs = j.at("n_uavs");
  c.n_actions = j.at("n_actions");
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.actor_lr = j.at("actor_lr");
  c.critic_lr = j.at("critic_lr");
  c.gamma = j.at("gamma");
  c.tau = j.at("tau");
  c.alpha = j.at("alpha");
  c.batch_size = j.at("batch_size");
  c.replay_capacity = j.at("replay_capacity");
  c.warmup = j.at("warmup");
  c.utd_ratio = j.at("utd_ratio");
  return c;
}

std::span<const char> row(const std::vector<char>& mask, int u, int n_actions) {
  return {mask.data() + static_cast<std::size_t>(u) * n_actions, static_cast<std::size_t>(n_actions)};
}

}  // namespace

SacAgent::SacAgent(SacConfig config, std::uint64_t seed)
    : cfg_(std::move(config)), buffer_(static_cast<std::size_t>(cfg_.replay_capacity)), rng_(seed) {
  if (cfg_.obs_dim <= 0 || cfg_.n_uavs <= 0 || cfg_.n_actions <= 0) {
    throw ValidationError("sac", "observation, UAV and action counts must be positive");
  }
  const auto sizes = layer_sizes(cfg_);
  std::mt19937_64 seeder(seed ^ 0x9e3779b97f4a7c15ull);
  actor_ = Mlp(sizes, seeder());
  critic1_ = Mlp(sizes, seeder());
  critic2_ = Mlp(sizes, seeder());
  target1_ = critic1_;
  target2_ = critic2_;
  actor_opt_ = Adam(actor_);
  critic1_opt_ = Adam(critic1_);
  critic2_opt_ = Adam(critic2_);
}

std::vector<Vector> SacAgent::policy(const std::vector<double>& obs, const std::vector<char>& mask) const {
  if (static_cast<int>(mask.size()) != cfg_.n_uavs * cfg_.n_actions) throw ContractViolation("mask has the wrong size");
  const Vector x = Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size()));
  const Vector logits = actor_.forward(x);
  std::vector<Vector> out;
  for (int u = 0; u < cfg_.n_uavs; ++u) {
    out.push_back(masked_softmax(logits.segment(u * cfg_.n_actions, cfg_.n_actions), row(mask, u, cfg_.n_actions)));
  }
  return out;
}

std::vector<int> SacAgent::act(const std::vector<double>& obs, const std::vector<char>& mask, bool greedy) {
  const auto dists = policy(obs, mask);
  std::vector<int> actions;
  for (const auto& p : dists) {
    int choice = 0;
    if (greedy) {
      p.maxCoeff(&choice);
    } else {
      const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
      double acc = 0.0;
      choice = -1;
      for (Eigen::Index a = 0; a < p.size(); ++a) {
        if (p(a) <= 0.0) continue;
        acc += p(a);
        choice = static_cast<int>(a);
        if (r < acc) break;
      }
    }
    actions.push_back(choice);
  }
  return actions;
}

Matrix SacAgent::stack_obs(const std::vector<const Transition*>& batch, bool next) const {
  Matrix x(cfg_.obs_dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto& o = next ? batch[n]->next_obs : batch[n]->obs;
    if (static_cast<int>(o.size()) != cfg_.obs_dim) throw ContractViolation("observation has the wrong size");
    x.col(static_cast<Eigen::Index>(n)) = Eigen::Map<const Vector>(o.data(), cfg_.obs_dim);
  }
  return x;
}

Vector SacAgent::q_targets(const std::vector<const Transition*>& batch) const {
  if (batch.empty()) throw ContractViolation("empty batch");
  const Matrix xn = stack_obs(batch, true);
  const Matrix logits = actor_.forward_batch(xn);
  const Matrix q1 = target1_.forward_batch(xn);
  const Matrix q2 = target2_.forward_batch(xn);
  const int na = cfg_.n_actions;
  Vector y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto& tr = *batch[n];
    const auto col = static_cast<Eigen::Index>(n);
    double v = 0.0;
    if (!tr.done) {
      for (int u = 0; u < cfg_.n_uavs; ++u) {
        const Vector p = masked_softmax(logits.col(col).segment(u * na, na), row(tr.next_mask, u, na));
        for (int a = 0; a < na; ++a) {
          if (p(a) <= 0.0) continue;
          const double q = std::min(q1(u * na + a, col), q2(u * na + a, col));
          v += p(a) * (q - cfg_.alpha * std::log(p(a)));
        }
      }
    }
    y(col) = tr.reward + cfg_.gamma * (tr.done ? 0.0 : 1.0) * v;
  }
  return y;
}

std::pair<double, double> SacAgent::critic_update(const std::vector<const Transition*>& batch,
                                                  const Vector& targets) {
  const Matrix x = stack_obs(batch, false);
  const int na = cfg_.n_actions;
  const double n = static_cast<double>(batch.size());
  double losses[2];
  for (int i = 0; i < 2; ++i) {
    Mlp& net = critic(i);
    Mlp::Cache cache;
    const Matrix q = net.forward_batch(x, cache);
    Matrix upstream = Matrix::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
      const auto col = static_cast<Eigen::Index>(s);
      double qsum = 0.0;
      for (int u = 0; u < cfg_.n_uavs; ++u) qsum += q(u * na + batch[s]->actions[u], col);
      const double diff = qsum - targets(col);
      loss += diff * diff;
      for (int u = 0; u < cfg_.n_uavs; ++u) upstream(u * na + batch[s]->actions[u], col) += 2.0 * diff / n;
    }
    loss /= n;
    if (!std::isfinite(loss)) throw TrainingHalt("non-finite critic loss");
    losses[i] = loss;
    MlpGrads g = net.zero_grads();
    net.backward(cache, upstream, g);
    (i == 0 ? critic1_opt_ : critic2_opt_).step(net, g, cfg_.critic_lr);
  }
  return {losses[0], losses[1]};
}

double SacAgent::actor_update(const std::vector<const Transition*>& batch) {
  const Matrix x = stack_obs(batch, false);
  const Matrix q1 = critic1_.forward_batch(x);
  const Matrix q2 = critic2_.forward_batch(x);
  Mlp::Cache cache;
  const Matrix logits = actor_.forward_batch(x, cache);
  const int na = cfg_.n_actions;
  const double n = static_cast<double>(batch.size());
  Matrix upstream = Matrix::Zero(logits.rows(), logits.cols());
  double loss = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto col = static_cast<Eigen::Index>(s);
    for (int u = 0; u < cfg_.n_uavs; ++u) {
      const Vector p = masked_softmax(logits.col(col).segment(u * na, na), row(batch[s]->mask, u, na));
      Vector term = Vector::Zero(na);
      double expect = 0.0;
      for (int a = 0; a < na; ++a) {
        if (p(a) <= 0.0) continue;
        const double q = std::min(q1(u * na + a, col), q2(u * na + a, col));
        term(a) = cfg_.alpha * std::log(p(a)) - q;
        expect += p(a) * term(a);
      }
      loss += expect;
      for (int a = 0; a < na; ++a) {
        if (p(a) > 0.0) upstream(u * na + a, col) = p(a) * (term(a) - expect) / n;
      }
    }
  }
  loss /= n;
  if (!std::isfinite(loss)) throw TrainingHalt("non-finite actor loss");
  MlpGrads g = actor_.zero_grads();
  actor_.backward(cache, upstream, g);
  actor_opt_.step(actor_, g, cfg_.actor_lr);
  return loss;
}

UpdateStats SacAgent::update(const std::vector<const Transition*>& batch) {
  UpdateStats st;
  const Vector y = q_targets(batch);
  std::tie(st.critic1_loss, st.critic2_loss) = critic_update(batch, y);
  st.actor_loss = actor_update(batch);
  soft_update(target1_, critic1_, cfg_.tau);
  soft_update(target2_, critic2_, cfg_.tau);
  ++updates_;
  return st;
}

void SacAgent::observe(Transition t) {
  buffer_.push(std::move(t));
  ++env_steps_;
  const auto needed = static_cast<std::size_t>(std::max(cfg_.warmup, cfg_.batch_size));
  if (buffer_.size() < needed) return;
  update_credit_ += cfg_.utd_ratio;
  while (update_credit_ >= 1.0) {
    update_credit_ -= 1.0;
    const auto idx = buffer_.sample_indices(static_cast<std::size_t>(cfg_.batch_size), rng_);
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (auto i : idx) batch.push_back(&buffer_.at(i));
    update(batch);
  }
}

double SacAgent::q_value(int i, const std::vector<double>& obs, const std::vector<int>& actions, bool target) const {
  const Mlp& net = target ? this->target(i) : critic(i);
  const Vector q = net.forward(Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size())));
  double s = 0.0;
  for (int u = 0; u < cfg_.n_uavs; ++u) s += q(u * cfg_.n_actions + actions.at(u));
  return s;
}

json SacAgent::to_json() const {
  return {{"format", "uavsim-sac"},
          {"version", 1},
          {"config", config_json(cfg_)},
          {"actor", mlp_to_json(actor_)},
          {"critic1", mlp_to_json(critic1_)},
          {"critic2", mlp_to_json(critic2_)},
          {"target1", mlp_to_json(target1_)},
          {"target2", mlp_to_json(target2_)},
          {"actor_opt", actor_opt_.to_json()},
          {"critic1_opt", critic1_opt_.to_json()},
          {"critic2_opt", critic2_opt_.to_json()},
          {"rng", rng_to_string(rng_)},
          {"update_credit", update_credit_},
          {"updates", updates_},
          {"env_steps", env_steps_}};
}

SacAgent SacAgent::from_json(const json& j) {
  if (j.value("format", "") != "uavsim-sac") throw Error("not a SAC checkpoint");
  if (j.value("version", 0) != 1) throw Error("unsupported SAC checkpoint version");
  SacAgent a;
  a.cfg_ = config_from(j.at("config"));
  a.actor_ = mlp_from_json(j.at("actor"));
  a.critic1_ = mlp_from_json(j.at("critic1"));
  a.critic2_ = mlp_from_json(j.at("critic2"));
  a.target1_ = mlp_from_json(j.at("target1"));
  a.target2_ = mlp_from_json(j.at("target2"));
  a.actor_opt_ = Adam::from_json(j.at("actor_opt"));
  a.critic1_opt_ = Adam::from_json(j.at("critic1_opt"));
  a.critic2_opt_ = Adam::from_json(j.at("critic2_opt"));
  a.rng_ = rng_from_string(j.at("rng").get<std::string>());
  a.update_credit_ = j.at("update_credit");
  a.updates_ = j.at("updates");
  a.env_steps_ = j.at("env_steps");
  a.buffer_ = ReplayBuffer(static_cast<std::size_t>(a.cfg_.replay_capacity));
  return a;
}

void SacAgent::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << to_json().dump();
}

SacAgent SacAgent::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  return from_json(json::parse(in));
}

bool operator==(const SacAgent& a, const SacAgent& b) {
  return a.actor_ == b.actor_ && a.critic1_ == b.critic1_ && a.critic2_ == b.critic2_ &&
         a.target1_ == b.target1_ && a.target2_ == b.target2_ && a.actor_opt_ == b.actor_opt_ &&
         a.critic1_opt_ == b.critic1_opt_ && a.critic2_opt_ == b.critic2_opt_ && a.rng_ == b.rng_ &&
         a.update_credit_ == b.update_credit_ && a.updates_ == b.updates_ && a.env_steps_ == b.env_steps_;
}

std::vector<std::vector<int>> random_actions(const Env& env, std::mt19937_64& rng) {
  auto acts = env.noop_actions();
  const int na = env.action_count();
  for (int a = 0; a < env.agent_count(); ++a) {
    const auto mask = env.action_mask(a);
    for (std::size_t l = 0; l < acts[a].size(); ++l) {
      std::vector<int> ok;
      for (int j = 0; j < na; ++j) {
        if (mask[l * na + j]) ok.push_back(j);
      }
      acts[a][l] = ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)];
    }
  }
  return acts;
}

EpisodeResult run_episode(Env& env, std::vector<SacAgent>& agents, bool learn, bool greedy,
                          std::uint64_t episode_seed, const std::string& method, int episode) {
  if (static_cast<int>(agents.size()) != env.agent_count()) {
    throw ContractViolation("need one SAC agent per environment agent");
  }
  env.reset(episode_seed);
  TrajectoryRecorder rec;
  rec.begin(env, method, episode_seed, episode);
  EpisodeResult res;
  const int n = env.agent_count();
  std::vector<std::vector<double>> obs(n);
  std::vector<std::vector<char>> masks(n);
  for (int a = 0; a < n; ++a) {
    obs[a] = env.observe(a);
    masks[a] = env.action_mask(a);
  }
  while (!env.done()) {
    std::vector<std::vector<int>> actions(n);
    for (int a = 0; a < n; ++a) actions[a] = agents[a].act(obs[a], masks[a], greedy);
    const StepInfo& info = env.step(actions);
    rec.record(info);
    ++res.steps;
    for (int a = 0; a < n; ++a) {
      res.team_reward += info.rewards[a];
      auto next_obs = env.observe(a);
      auto next_mask = env.action_mask(a);
      if (learn) {
        agents[a].observe({std::move(obs[a]), std::move(masks[a]), actions[a], info.rewards[a], next_obs,
                           next_mask, info.done});
      }
      obs[a] = std::move(next_obs);
      masks[a] = std::move(next_mask);
    }
  }
  rec.finish(env);
  res.log = rec.take();
  return res;
}

}  // namespace uavsim
