#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uavsim/routing.hpp"
#include "uavsim/state.hpp"

namespace uavsim {

struct ShareEvent {
  enum class Kind { Proximity, Periodic };
  Kind kind = Kind::Periodic;
  int step = 0;
  int uav_i = -1;  // proximity only
  int uav_j = -1;
  std::string digest;  // FNV-1a over the exchanged payload

  friend bool operator==(const ShareEvent&, const ShareEvent&) = default;
};

struct Release {
  int task_id = 0;
  int uav_id = 0;
  int station = 0;
  bool already_taken = false;  // released because a peer collected it, not a cost tie

  friend bool operator==(const Release&, const Release&) = default;
};

/// Ground-truth payload a station broadcasts: UAV summaries, planned and known-collected tasks.
PeerEntry station_snapshot(const EnvState& state, const Scenario& scenario, int station);

/// Fresh beliefs: every station's view of every peer equals truth at the current step.
void init_beliefs(EnvState& state, const Scenario& scenario);

/// Cross-station UAV pairs within d_threshold (3D, inclusive) swap their stations' full
/// payloads, plus any fresher third-party entries. Returns one event per meeting pair and
/// fills `refreshed` with the (lower, higher) station pairs that exchanged.
std::vector<ShareEvent> proximity_exchange(EnvState& state, const Scenario& scenario,
                                           double d_threshold_m,
                                           std::vector<std::pair<int, int>>* refreshed = nullptr);

/// Full refresh when t mod t0 == 0 (t > 0), otherwise nothing.
std::optional<ShareEvent> periodic_sync(EnvState& state, const Scenario& scenario, int t, int t0);

/// last * exp(-lambda (t - last_update)). Throws ClockError when t < last_update.
double decay_estimate(double last_value, int last_update_step, int t, double lambda);

double worst_case_gap(double i0, double lambda, double t0);

/// Binomial sum over n = 0..t0 with success probability (1-p)^(k-1), normalised by the
/// pmf total so that lambda = 0 returns i0 exactly.
double expected_gap(double i0, double lambda, int t0, double p, int k);

/// Curved-metric cost saved by dropping plan[index] from a UAV's remaining route.
double marginal_cost(const UavState& uav, std::size_t index, const CostModel& cm);

/// Tasks planned by UAVs of both stations in a refreshed pair: the higher-cost side
/// releases (ties: the lower station id keeps). Tasks the peer already collected or is
/// collecting are released too.
std::vector<Release> dedupe_on_refresh(const EnvState& state, const CostModel& cm,
                                       const std::vector<std::pair<int, int>>& refreshed);

/// Tasks currently planned (or being collected) by UAVs of two or more stations.
int duplicate_planned_count(const EnvState& state, const Scenario& scenario);

}  // namespace uavsim
