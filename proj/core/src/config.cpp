#include "uavsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "uavsim/error.hpp"

namespace uavsim {

using nlohmann::json;

namespace {

template <class T>
void read_value(const json& j, T& out, const std::string& field) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw ValidationError(field, "expected a boolean");
    out = j.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ValidationError(field, "expected an integer");
    out = j.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw ValidationError(field, "expected a number");
    out = j.get<T>();
  } else if constexpr (std::is_same_v<T, std::vector<int>>) {
    if (!j.is_array()) throw ValidationError(field, "expected an array");
    out.clear();
    for (const auto& e : j) {
      int v = 0;
      read_value(e, v, field);
      out.push_back(v);
    }
  } else if constexpr (std::is_same_v<T, std::array<double, kTaskClassCount>>) {
    if (!j.is_array() || j.size() != out.size()) {
      throw ValidationError(field, "expected an array of 3 numbers");
    }
    for (std::size_t i = 0; i < out.size(); ++i) read_value(j[i], out[i], field);
  } else {
    static_assert(sizeof(T) == 0, "unsupported config field type");
  }
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  template <class T>
  void field(const char* key, T& out) {
    known_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) read_value(*it, out, path_ + key);
  }

  template <class F>
  void object(const char* key, F&& f) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_object()) throw ValidationError(path_ + key, "expected an object");
    Reader sub(*it, path_ + key + ".");
    f(sub);
    sub.finish();
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!known_.count(item.key())) throw ValidationError(path_ + item.key(), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

class Writer {
 public:
  explicit Writer(json& j) : j_(j) {}

  template <class T>
  void field(const char* key, T& v) {
    j_[key] = v;
  }

  template <class F>
  void object(const char* key, F&& f) {
    json sub = json::object();
    Writer w(sub);
    f(w);
    j_[key] = std::move(sub);
  }

 private:
  json& j_;
};

template <class V>
void visit(V& v, TaskValueParams& p) {
  v.field("k_m", p.k_m);
  v.field("r_m", p.r_m);
  v.field("tau_exp", p.tau_exp);
}

template <class V>
void visit(V& v, RotorParams& r) {
  v.field("weight_N", r.weight_N);
  v.field("n_rotors", r.n_rotors);
  v.field("air_density", r.air_density);
  v.field("rotor_disk_area_m2", r.rotor_disk_area_m2);
  v.field("thrust_coeff", r.thrust_coeff);
  v.field("profile_drag_coeff", r.profile_drag_coeff);
  v.field("rotor_solidity", r.rotor_solidity);
  v.field("induced_power_factor", r.induced_power_factor);
  v.field("hover_induced_velocity_mps", r.hover_induced_velocity_mps);
  v.field("flat_plate_area_horiz_m2", r.flat_plate_area_horiz_m2);
  v.field("flat_plate_area_vert_m2", r.flat_plate_area_vert_m2);
}

template <class V>
void visit(V& v, UavSpec& u) {
  v.field("battery_flight_J", u.battery_flight_J);
  v.field("battery_process_J", u.battery_process_J);
  v.field("storage_bytes", u.storage_bytes);
  v.field("n_cores", u.n_cores);
  v.field("cpu_hz", u.cpu_hz);
  v.field("flops_per_cycle", u.flops_per_cycle);
  v.field("transmit_power_W", u.transmit_power_W);
  v.field("cruise_speed_mps", u.cruise_speed_mps);
  v.field("cruise_low_speed_mps", u.cruise_low_speed_mps);
  v.field("ascend_speed_mps", u.ascend_speed_mps);
  v.field("descend_speed_mps", u.descend_speed_mps);
  v.field("z_min_m", u.z_min_m);
  v.field("z_max_m", u.z_max_m);
}

template <class V>
void visit(V& v, ChannelParams& c) {
  v.field("bandwidth_u2g_hz", c.bandwidth_u2g_hz);
  v.field("bandwidth_u2u_hz", c.bandwidth_u2u_hz);
  v.field("noise_psd_u2g", c.noise_psd_u2g);
  v.field("noise_psd_u2u", c.noise_psd_u2u);
  v.field("carrier_hz", c.carrier_hz);
  v.field("light_speed_mps", c.light_speed_mps);
  v.field("los_a", c.los_a);
  v.field("los_b", c.los_b);
  v.field("gain_los", c.gain_los);
  v.field("gain_nlos", c.gain_nlos);
  v.field("antenna_gain_tx", c.antenna_gain_tx);
  v.field("antenna_gain_rx", c.antenna_gain_rx);
}

template <class V>
void visit(V& v, ComputeParams& c) {
  v.field("gamma_per_class", c.gamma_per_class);
  v.field("overhead_s", c.overhead_s);
}

template <class V>
void visit(V& v, LearnParams& l) {
  v.field("actor_lr", l.actor_lr);
  v.field("critic_lr", l.critic_lr);
  v.field("tau_soft", l.tau_soft);
  v.field("gamma", l.gamma);
  v.field("batch_size", l.batch_size);
  v.field("entropy_alpha", l.entropy_alpha);
  v.field("replay_capacity", l.replay_capacity);
  v.field("t0_sync", l.t0_sync);
  v.field("d_threshold_m", l.d_threshold_m);
  v.field("lambda_decay", l.lambda_decay);
  v.field("reward_mu", l.reward_mu);
  v.field("reward_omega", l.reward_omega);
  v.field("reward_epsilon", l.reward_epsilon);
  v.field("reward_phi", l.reward_phi);
  v.field("alpha_weight", l.alpha_weight);
  v.field("beta_weight", l.beta_weight);
  v.field("move_energy_scale", l.move_energy_scale);
  v.field("process_energy_per_byte", l.process_energy_per_byte);
}

template <class V>
void visit(V& v, EnvParams& e) {
  v.field("decision_dt_s", e.decision_dt_s);
  v.field("horizon_steps", e.horizon_steps);
  v.field("k_candidates", e.k_candidates);
  v.field("max_pending", e.max_pending);
  v.field("sharing_enabled", e.sharing_enabled);
  v.field("shared_reward", e.shared_reward);
}

template <class V>
void visit(V& v, TrainingParams& t) {
  v.field("episodes", t.episodes);
  v.field("eval_episodes", t.eval_episodes);
  v.field("warmup_steps", t.warmup_steps);
  v.field("utd_ratio", t.utd_ratio);
  v.field("vary_scenario", t.vary_scenario);
}

template <class V>
void visit(V& v, ClassGenParams& c) {
  v.field("fraction", c.fraction);
  v.field("size_min_bytes", c.size_min_bytes);
  v.field("size_max_bytes", c.size_max_bytes);
  v.field("dwell_min_s", c.dwell_min_s);
  v.field("dwell_max_s", c.dwell_max_s);
  v.field("priority", c.priority);
  v.object("value", [&](auto& s) { visit(s, c.value); });
}

template <class V>
void visit(V& v, ScenarioConfig& c) {
  v.field("uavs", c.uavs);
  v.field("tasks", c.tasks);
  v.field("stations", c.stations);
  v.object("region", [&](auto& s) {
    s.field("side_length_m", c.region.side_length_m);
    s.field("grid_resolution_m", c.region.grid_resolution_m);
  });
  v.object("uav", [&](auto& s) { visit(s, c.uav); });
  v.object("rotor", [&](auto& s) { visit(s, c.uav.rotor); });
  v.object("channel", [&](auto& s) { visit(s, c.channel); });
  v.object("compute", [&](auto& s) { visit(s, c.compute); });
  v.object("learn", [&](auto& s) { visit(s, c.learn); });
  v.object("env", [&](auto& s) { visit(s, c.env); });
  v.object("network", [&](auto& s) { s.field("hidden_sizes", c.network.hidden_sizes); });
  v.object("training", [&](auto& s) { visit(s, c.training); });
  v.object("task_classes", [&](auto& s) {
    s.object("1", [&](auto& t) { visit(t, c.classes[0]); });
    s.object("2", [&](auto& t) { visit(t, c.classes[1]); });
    s.object("3", [&](auto& t) { visit(t, c.classes[2]); });
  });
  v.object("density", [&](auto& s) {
    s.field("clusters", c.density.clusters);
    s.field("cluster_fraction", c.density.cluster_fraction);
    s.field("cluster_sigma_m", c.density.cluster_sigma_m);
  });
  v.field("task_altitude_min_m", c.task_altitude_min_m);
  v.field("task_altitude_max_m", c.task_altitude_max_m);
}

json vec_to_json(const Vec3& p) { return json::array({p.x, p.y, p.z}); }
Vec3 vec_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

template <class T>
json params_to_json(T p) {
  json j = json::object();
  Writer w(j);
  visit(w, p);
  return j;
}

template <class T>
T params_from_json(const json& j, const std::string& path) {
  T p;
  Reader r(j, path);
  visit(r, p);
  r.finish();
  return p;
}

}  // namespace

ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("<root>", "expected a JSON object");
  ScenarioConfig c;
  Reader r(j, "");
  visit(r, c);
  r.finish();
  validate(c);
  return c;
}

json config_to_json(const ScenarioConfig& config) {
  ScenarioConfig copy = config;
  json j = json::object();
  Writer w(j);
  visit(w, copy);
  return j;
}

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ValidationError("<parse>", "line " + std::to_string(line) + ", column " +
                                         std::to_string(col) + ": " + e.what());
  }
  return config_from_json(j);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["seed"] = s.seed;
  j["region"] = {{"side_length_m", s.region.side_length_m},
                 {"grid_resolution_m", s.region.grid_resolution_m}};
  json stations = json::array();
  for (const auto& p : s.region.station_positions) stations.push_back(vec_to_json(p));
  j["region"]["station_positions"] = stations;
  json uavs = json::array();
  for (const auto& u : s.uavs) {
    json ju = params_to_json(u);
    ju["id"] = u.id;
    ju["home_station"] = u.home_station;
    ju["rotor"] = params_to_json(u.rotor);
    uavs.push_back(ju);
  }
  j["uavs"] = uavs;
  json tasks = json::array();
  for (const auto& t : s.tasks) {
    tasks.push_back({{"id", t.id},
                     {"position", vec_to_json(t.position)},
                     {"class", static_cast<int>(t.cls)},
                     {"priority", t.priority},
                     {"data_size_bytes", t.data_size_bytes},
                     {"dwell_time_s", t.dwell_time_s},
                     {"value", params_to_json(t.value)}});
  }
  j["tasks"] = tasks;
  j["channel"] = params_to_json(s.channel);
  j["compute"] = params_to_json(s.compute);
  j["learn"] = params_to_json(s.learn);
  j["env"] = params_to_json(s.env);
  return j;
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.seed = j.at("seed").get<std::uint64_t>();
  const auto& r = j.at("region");
  s.region.side_length_m = r.at("side_length_m").get<double>();
  s.region.grid_resolution_m = r.at("grid_resolution_m").get<double>();
  for (const auto& p : r.at("station_positions")) s.region.station_positions.push_back(vec_from_json(p));
  for (const auto& ju : j.at("uavs")) {
    json body = ju;
    body.erase("id");
    body.erase("home_station");
    body.erase("rotor");
    UavSpec u = params_from_json<UavSpec>(body, "uavs.");
    u.id = ju.at("id").get<int>();
    u.home_station = ju.at("home_station").get<int>();
    u.rotor = params_from_json<RotorParams>(ju.at("rotor"), "uavs.rotor.");
    s.uavs.push_back(u);
  }
  for (const auto& jt : j.at("tasks")) {
    Task t;
    t.id = jt.at("id").get<int>();
    t.position = vec_from_json(jt.at("position"));
    const int cls = jt.at("class").get<int>();
    if (cls < 1 || cls > 3) throw ValidationError("tasks.class", "must be 1, 2 or 3");
    t.cls = static_cast<TaskClass>(cls);
    t.priority = jt.at("priority").get<int>();
    t.data_size_bytes = jt.at("data_size_bytes").get<double>();
    t.dwell_time_s = jt.at("dwell_time_s").get<double>();
    t.value = params_from_json<TaskValueParams>(jt.at("value"), "tasks.value.");
    s.tasks.push_back(t);
  }
  s.channel = params_from_json<ChannelParams>(j.at("channel"), "channel.");
  s.compute = params_from_json<ComputeParams>(j.at("compute"), "compute.");
  s.learn = params_from_json<LearnParams>(j.at("learn"), "learn.");
  s.env = params_from_json<EnvParams>(j.at("env"), "env.");
  return s;
}

ScenarioConfig profile_config(const std::string& name) {
  ScenarioConfig c;
  if (name == "paper") {
    c.training.episodes = 400;
    return c;
  }
  if (name == "desk") {
    c.uavs = 4;
    c.stations = 2;
    c.tasks = 30;
    c.training.episodes = 300;
    c.env.horizon_steps = 40;
    c.network.hidden_sizes = {64, 64};
    // Rewards must dominate the per-step entropy bonus, or waiting at the depot looks valuable.
    c.learn.reward_phi = 10.0;
    // ~12k updates per run: targets need to track the critics faster than at paper scale.
    c.learn.tau_soft = 0.02;
    return c;
  }
  throw ValidationError("profile", "unknown profile '" + name + "' (expected paper or desk)");
}

}  // namespace uavsim
