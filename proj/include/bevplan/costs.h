#ifndef BEVPLAN_COSTS_H_
#define BEVPLAN_COSTS_H_

#include <array>
#include <string>
#include <vector>

#include "bevplan/grid.h"
#include "bevplan/occupancy_flow.h"
#include "bevplan/online_map.h"
#include "bevplan/trajectory.h"

namespace bevplan {

enum class LightState { kGreen, kRed };

struct VehicleParams {
  double length = 4.8;
  double width = 2.0;
};

struct SafetyParams {
  double hard_decel = 8.0;      // lead object's worst-case braking, m/s^2
  double comfort_decel = 3.0;   // SDV reaction braking, m/s^2
  double reaction_time = 1.0;   // s
  double headway_range = 20.0;  // forward lookahead, m
};

struct CostParams {
  double route_to_go_horizon_s = 5.0;
  double k_theta_min = 1e-3;  // clamp for unmodeled direction cells
};

enum Subcost : int {
  kRoute = 0,
  kRouteCostToGo,
  kLaneDist,
  kLaneDir,
  kLaneUncertainty,
  kDrivable,
  kJunction,
  kOccupancy,
  kHeadway,
  kJerk,
  kLatAccel,
  kCurvature,
  kCurvatureRate,
  kNumSubcosts
};

const char* SubcostName(int subcost);
int SubcostFromName(const std::string& name);  // -1 when unknown

struct CostWeights {
  std::array<double, kNumSubcosts> w{};

  double& operator[](int i) { return w[i]; }
  double operator[](int i) const { return w[i]; }

  static CostWeights Uniform(double value);
};

void SaveWeights(const std::string& path, const CostWeights& weights);
CostWeights LoadWeights(const std::string& path);

struct CostBreakdown {
  double route = 0.0;
  double route_cost_to_go = 0.0;
  double lane_dist = 0.0;
  double lane_dir = 0.0;
  double lane_uncertainty = 0.0;
  double drivable = 0.0;
  double junction = 0.0;
  // Per trajectory step; occupancy also per class.
  std::vector<std::array<double, kNumActorClasses>> occupancy_cls;
  std::vector<double> headway;
  double jerk = 0.0;
  double lat_accel = 0.0;
  double curvature = 0.0;
  double curvature_rate = 0.0;

  double OccupancyAt(int t) const;
  double OccupancyTotal() const;
  double HeadwayTotal() const;
  // Per-timestep vectors collapsed by summation over t.
  std::array<double, kNumSubcosts> Values() const;
};

// Read-only bundle the scoring functions consume.
struct PlanningScene {
  const OnlineMap* map = nullptr;
  struct ClassDynamics {
    ActorClass cls = ActorClass::kVehicle;
    const OccupancyField* occupancy = nullptr;
    const std::vector<MotionField>* motion = nullptr;  // may be null
  };
  std::vector<ClassDynamics> dynamics;
  LightState light = LightState::kGreen;
  VehicleParams vehicle;
  SafetyParams safety;
  CostParams params;
};

// Standalone scoring functions (per-subcost, unweighted).
double CostRoute(const Trajectory& traj, const BevGridD& route,
                 const VehicleParams& vehicle);
double CostRouteToGo(const Trajectory& traj, const BevGridD& route,
                     const VehicleParams& vehicle, double horizon_s);
double CostLaneDist(const Trajectory& traj, const OnlineMap& map,
                    const VehicleParams& vehicle);
double CostLaneDir(const Trajectory& traj, const OnlineMap& map,
                   const VehicleParams& vehicle);
double CostLaneUncertainty(const Trajectory& traj, const OnlineMap& map,
                           const VehicleParams& vehicle,
                           double k_theta_min = 1e-3);
double CostDrivable(const Trajectory& traj, const OnlineMap& map,
                    const VehicleParams& vehicle);
double CostJunction(const Trajectory& traj, const OnlineMap& map,
                    LightState light, const VehicleParams& vehicle);
// Sum over classes of the worst-case footprint occupancy, per step.
std::vector<double> CostOccupancy(
    const Trajectory& traj,
    const std::vector<PlanningScene::ClassDynamics>& dynamics,
    const VehicleParams& vehicle);
std::vector<double> CostHeadway(
    const Trajectory& traj,
    const std::vector<PlanningScene::ClassDynamics>& dynamics,
    const VehicleParams& vehicle, const SafetyParams& safety);

struct ComfortCosts {
  double jerk = 0.0;
  double lat_accel = 0.0;
  double curvature = 0.0;
  double curvature_rate = 0.0;
};

ComfortCosts CostComfort(const Trajectory& traj, double dt = kPlanDt);

struct Evaluation {
  double total = 0.0;
  CostBreakdown breakdown;
};

double WeightedTotal(const CostWeights& weights,
                     const CostBreakdown& breakdown);

namespace internal {
// Epoch-stamped visited set for swept-cell deduplication.
struct UnionScratch {
  std::vector<uint32_t> stamp;
  uint32_t epoch = 0;
  void Prepare(int size);
  bool Visit(int32_t idx);
};
}  // namespace internal

// Reusable evaluator: rasterizes each state's footprint once per grid
// spec and feeds every subcost from the shared cells, so results match
// the standalone functions exactly. Keep one instance per thread; the
// scratch buffers persist across candidates.
class TrajectoryEvaluator {
 public:
  TrajectoryEvaluator(const PlanningScene& scene, const CostWeights& weights);
  Evaluation Evaluate(const Trajectory& traj);

 private:
  const PlanningScene& scene_;
  CostWeights weights_;
  internal::UnionScratch scratch_;
  std::vector<int32_t> buffer_;
  std::vector<std::vector<int32_t>> map_cells_;
  std::vector<std::vector<int32_t>> occ_cells_;
};

Evaluation Evaluate(const Trajectory& traj, const PlanningScene& scene,
                    const CostWeights& weights);

}  // namespace bevplan

#endif  // BEVPLAN_COSTS_H_
