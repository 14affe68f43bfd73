#ifndef BEVPLAN_ONLINE_MAP_H_
#define BEVPLAN_ONLINE_MAP_H_

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bevplan/grid.h"
#include "bevplan/lane_graph.h"

namespace bevplan {

// Family of the per-cell lane-distance distribution. Only the standard
// deviation used by the lane-uncertainty cost depends on it: the stored
// scale b maps to sigma = sqrt(2)*b for Laplace and sigma = b for Gaussian.
enum class DistanceFamily { kLaplace, kGaussian };

// Probabilistic BEV map layers. Probability layers hold Bernoulli p in
// [0,1]; lane_dist_mu is meters truncated to [0, truncation]; lane_dir_loc
// is radians in (-pi, pi]; lane_dir_conc is a Von Mises concentration >= 0.
struct OnlineMap {
  GridSpec spec;
  BevGridD drivable;
  BevGridD intersection;
  BevGridD lane_dist_mu;
  BevGridD lane_dist_sigma;
  BevGridD lane_dir_loc;
  BevGridD lane_dir_conc;
  BevGridD route;
  DistanceFamily family = DistanceFamily::kLaplace;
  double truncation_m = 10.0;

  OnlineMap() = default;
  explicit OnlineMap(const GridSpec& s)
      : spec(s),
        drivable(s),
        intersection(s),
        lane_dist_mu(s),
        lane_dist_sigma(s, 0.2),
        lane_dir_loc(s),
        lane_dir_conc(s, 50.0),
        route(s) {}
};

struct DrivingCommand {
  enum class Action : uint8_t { kKeepLane, kTurnLeft, kTurnRight };
  Action action = Action::kKeepLane;
  double distance_m = 0.0;
};

struct NoRouteForCommand : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MapOracleParams {
  double truncation_m = 10.0;
  double sigma_default = 0.2;   // near-certain ground truth
  double conc_default = 50.0;
  double corridor_halfwidth_m = 2.5;
};

// Ground-truth map rasterizer standing in for the mapping network.
// The route layer is left all-zero; see RasterizeRoute.
OnlineMap RasterizeMap(const LaneGraph& lg, const Pose2& sdv_pose,
                       const GridSpec& spec,
                       const MapOracleParams& params = {});

// Command-consistent lane sequence, resolved before rasterization so the
// simulator can reuse the true corridor for event detection.
struct RoutePlan {
  std::vector<int> lane_ids;
  std::vector<Vec2> polyline;
};

// Deterministic route resolution with an explicit effective distance
// (command distance after noise). Throws NoRouteForCommand.
RoutePlan ResolveRoute(const LaneGraph& lg, const Pose2& sdv_pose,
                       const DrivingCommand& cmd, double effective_distance_m);

// Bernoulli route layer: 1 inside the corridor of the command-consistent
// lane sequence, 0 elsewhere. The command distance is perturbed by
// zero-mean Gaussian noise with `noise_std_m` before branch selection.
BevGridD RasterizeRoute(const LaneGraph& lg, const Pose2& sdv_pose,
                        const DrivingCommand& cmd, const GridSpec& spec,
                        double noise_std_m, uint64_t seed,
                        const MapOracleParams& params = {},
                        RoutePlan* plan_out = nullptr);

// Corruption model for robustness studies; stands in for network error.
struct NoiseModel {
  double dropout_rate = 0.0;      // fraction of cells marked unknown
  int blur_radius_cells = 0;      // box-blur radius on probability layers
  double sigma_inflation = 1.0;   // multiplies lane_dist_sigma everywhere
  double dropout_sigma = 2.0;     // sigma assigned to dropped cells
  double dropout_conc = 1e-3;     // concentration assigned to dropped cells
};

OnlineMap PerturbMap(const OnlineMap& map, const NoiseModel& model,
                     uint64_t seed);

}  // namespace bevplan

#endif  // BEVPLAN_ONLINE_MAP_H_
