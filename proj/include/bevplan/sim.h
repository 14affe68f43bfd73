#ifndef BEVPLAN_SIM_H_
#define BEVPLAN_SIM_H_

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bevplan/costs.h"
#include "bevplan/idm.h"
#include "bevplan/lane_graph.h"
#include "bevplan/learning.h"
#include "bevplan/occupancy_flow.h"
#include "bevplan/online_map.h"
#include "bevplan/planner.h"
#include "bevplan/trajectory.h"

namespace bevplan {

// Timestamped actor script sample; velocities explicit so the flow oracle
// needs no differentiation.
struct ScriptSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

struct ActorScript {
  int id = 0;
  ActorClass cls = ActorClass::kVehicle;
  double length = 4.5;
  double width = 1.9;
  std::vector<ScriptSample> track;  // executed motion
  struct Branch {
    double weight = 1.0;
    std::vector<ScriptSample> track;
  };
  // Alternative futures for the occupancy oracle; empty means the executed
  // track is the single mode.
  std::vector<Branch> branches;
};

struct Scenario {
  std::string name;
  double duration_s = 18.0;
  double tick_dt = 0.5;
  LaneGraph lane_graph;
  DrivingCommand command;
  LightState light = LightState::kGreen;
  std::vector<ActorScript> actors;
  std::vector<SdvState> expert;  // states every tick_dt from t = 0

  int Ticks() const {
    return static_cast<int>(std::lround(duration_s / tick_dt));
  }
};

struct SimEvent {
  enum Kind : int {
    kCollision = 0,
    kOffRoute = 1,
    kOffRoad = 2,
    kOncomingTraffic = 3
  };
  static constexpr int kNumKinds = 4;
  static const char* KindName(int kind);

  Kind kind = kCollision;
  int tick = 0;
  Vec2 position{};
};

struct EpisodeMetrics {
  std::string scenario;
  bool success = false;
  bool off_route = false;
  bool aborted = false;
  std::vector<SimEvent> events;  // first occurrence per kind
  double progress_m = 0.0;
  std::vector<double> l2_to_expert;  // per executed tick
  double mean_l2 = 0.0;
  double jerk_rms = 0.0;
  double lat_accel_rms = 0.0;
  int ticks = 0;
};

struct BatchSummary {
  int episodes = 0;
  double success_rate = 0.0;
  double off_route_pct = 0.0;
  double mean_l2 = 0.0;
  double total_meters = 0.0;
  int total_events = 0;
  std::array<int, SimEvent::kNumKinds> event_counts{};
  // Total meters / events of the kind; total meters when no event.
  double meters_per_event_overall = 0.0;
  std::array<double, SimEvent::kNumKinds> meters_per_event{};
};

BatchSummary Aggregate(const std::vector<EpisodeMetrics>& episodes);

struct SimOptions {
  uint64_t seed = 0;
  int parallelism = 0;
  VehicleParams vehicle;
  SafetyParams safety;
  CostParams cost_params;
  KinematicLimits limits;
  MapOracleParams map_params;
  NoiseModel map_noise;             // identity by default
  double route_noise_std_m = 5.0;   // GPS-style error on the command distance
  double map_resolution_m = 0.2;
  double occ_resolution_m = 0.4;
  double occ_roi_length_m = 140.0;
  double occ_roi_width_m = 80.0;
  int flow_modes = 3;
  IdmParams idm;
  double idm_switch_gap_m = 5.0;    // along-route divergence trigger
  double off_route_margin_m = 1.5;  // event when beyond corridor + margin
  double abort_distance_m = 10.0;   // stop when this far outside the corridor
  double lane_membership_m = 1.75;  // "on a lane" half-width for events
};

// Mutable per-episode world: the SDV plus scripted/IDM actors.
struct ActorRuntime {
  const ActorScript* script = nullptr;
  Pose2 pose{};
  Vec2 velocity{};
  bool idm_active = false;
  int idm_lane = -1;
  double idm_arclength = 0.0;
  double idm_speed = 0.0;
};

struct WorldState {
  double time = 0.0;
  int tick = 0;
  SdvState sdv;
  std::vector<ActorRuntime> actors;
};

// Executes the first tick of the chosen trajectory and advances actors
// (scripted replay, or IDM for switched actors).
void StepWorld(WorldState* world, const Scenario& scenario,
               const Trajectory& chosen, const SimOptions& opts);

// Events at the current world state, judged against the noise-free route.
std::vector<SimEvent> DetectEvents(const WorldState& world,
                                   const Scenario& scenario,
                                   const OnlineMap& map,
                                   const RoutePlan& true_route,
                                   const SimOptions& opts);

EpisodeMetrics RunEpisode(const Scenario& scenario,
                          const TrajectoryBank& bank,
                          const CostWeights& weights, const SimOptions& opts);

// Per-tick trace row for the CLI's trace log.
struct TickTrace {
  int tick = 0;
  SdvState sdv;
  double best_cost = 0.0;
  int candidate_count = 0;
  double l2_to_expert = 0.0;
};

EpisodeMetrics RunEpisode(const Scenario& scenario,
                          const TrajectoryBank& bank,
                          const CostWeights& weights, const SimOptions& opts,
                          std::vector<TickTrace>* trace);

// Max-margin examples along the expert track of a scenario, one every
// `stride` ticks; the episode map is shared across examples.
std::vector<TrainingExample> BuildTrainingExamples(
    const Scenario& scenario, const TrajectoryBank& bank,
    const SimOptions& opts, int stride = 4);

}  // namespace bevplan

#endif  // BEVPLAN_SIM_H_
