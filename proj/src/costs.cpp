#include "bevplan/costs.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace bevplan {

namespace {

const char* const kSubcostNames[kNumSubcosts] = {
    "route",         "route_cost_to_go", "lane_dist",
    "lane_dir",      "lane_uncertainty", "drivable",
    "junction",      "occupancy",        "headway",
    "jerk",          "lat_accel",        "curvature",
    "curvature_rate"};

using CellList = std::vector<int32_t>;

void RasterStates(const Trajectory& traj, const GridSpec& spec,
                  const VehicleParams& vehicle,
                  std::vector<CellList>* cells) {
  cells->resize(traj.states.size());
  for (size_t t = 0; t < traj.states.size(); ++t) {
    (*cells)[t].clear();
    RasterizeFootprintInto(
        Footprint::FromPose(traj.states[t].pose(), vehicle.length,
                            vehicle.width),
        spec, &(*cells)[t]);
  }
}

using internal::UnionScratch;

// f_r(tau, R) = -m(tau) * min_{i in m(tau)} R_i with m(tau) the distinct
// cells swept by the footprint over the whole trajectory.
double RouteCore(const std::vector<CellList>& cells, const BevGridD& route,
                 UnionScratch* scratch) {
  scratch->Prepare(route.spec().size());
  size_t count = 0;
  double min_r = std::numeric_limits<double>::infinity();
  for (const CellList& state_cells : cells) {
    for (int32_t idx : state_cells) {
      if (!scratch->Visit(idx)) continue;
      ++count;
      min_r = std::min(min_r, route[idx]);
    }
  }
  if (count == 0) return 0.0;
  return -static_cast<double>(count) * min_r;
}

// Mean of (1 - R) over cells swept by a constant-velocity/heading
// extrapolation beyond the horizon.
double RouteToGoCore(const SdvState& last, const BevGridD& route,
                     const VehicleParams& vehicle, double horizon_s,
                     UnionScratch* scratch, CellList* buffer) {
  const int steps = std::max(1, static_cast<int>(std::lround(
                                    horizon_s / kPlanDt)));
  const Vec2 dir{std::cos(last.theta), std::sin(last.theta)};
  scratch->Prepare(route.spec().size());
  size_t count = 0;
  double sum = 0.0;
  for (int k = 1; k <= steps; ++k) {
    const double advance = last.v * kPlanDt * k;
    const Pose2 pose{last.x + dir.x * advance, last.y + dir.y * advance,
                     last.theta};
    buffer->clear();
    RasterizeFootprintInto(
        Footprint::FromPose(pose, vehicle.length, vehicle.width),
        route.spec(), buffer);
    for (int32_t idx : *buffer) {
      if (!scratch->Visit(idx)) continue;
      ++count;
      sum += 1.0 - route[idx];
    }
  }
  if (count == 0) return 0.0;
  return sum / static_cast<double>(count);
}

double LaneDistCore(const std::vector<CellList>& cells, const OnlineMap& map) {
  double total = 0.0;
  for (const CellList& state_cells : cells) {
    if (state_cells.empty()) {
      total += map.truncation_m;
      continue;
    }
    double sum = 0.0;
    for (int32_t idx : state_cells) sum += map.lane_dist_mu[idx];
    total += sum / static_cast<double>(state_cells.size());
  }
  return total / static_cast<double>(cells.size());
}

double LaneDirCore(const Trajectory& traj,
                   const std::vector<CellList>& cells, const OnlineMap& map) {
  double total = 0.0;
  for (size_t t = 0; t < cells.size(); ++t) {
    if (cells[t].empty()) continue;
    double sum = 0.0;
    for (int32_t idx : cells[t]) {
      sum += AngleDiff(map.lane_dir_loc[idx], traj.states[t].theta);
    }
    total += sum / static_cast<double>(cells[t].size());
  }
  return total / static_cast<double>(cells.size());
}

double LaneUncertaintyCore(const Trajectory& traj,
                           const std::vector<CellList>& cells,
                           const OnlineMap& map, double k_theta_min) {
  const double sigma_factor =
      map.family == DistanceFamily::kLaplace ? std::sqrt(2.0) : 1.0;
  double total = 0.0;
  for (size_t t = 0; t < cells.size(); ++t) {
    const double v = traj.states[t].v;
    if (v <= 0.0) continue;
    double sum = 0.0;
    for (int32_t idx : cells[t]) {
      const double sigma = sigma_factor * map.lane_dist_sigma[idx];
      const double conc = std::max(map.lane_dir_conc[idx], k_theta_min);
      sum += sigma + 1.0 / conc;
    }
    total += v * sum;
  }
  return total;
}

double DrivableCore(const std::vector<CellList>& cells, const OnlineMap& map) {
  double total = 0.0;
  for (const CellList& state_cells : cells) {
    if (state_cells.empty()) {
      total += 1.0;
      continue;
    }
    double worst = 0.0;
    for (int32_t idx : state_cells) {
      worst = std::max(worst, 1.0 - map.drivable[idx]);
    }
    total += worst;
  }
  return total;
}

double JunctionCore(const std::vector<CellList>& cells, const OnlineMap& map,
                    LightState light) {
  if (light != LightState::kRed) return 0.0;
  double total = 0.0;
  for (const CellList& state_cells : cells) {
    double worst = 0.0;
    for (int32_t idx : state_cells) {
      worst = std::max(worst, map.intersection[idx]);
    }
    total += worst;
  }
  return total;
}

void OccupancyCore(const Trajectory& traj,
                   const std::vector<CellList>& cells,
                   const std::vector<PlanningScene::ClassDynamics>& dynamics,
                   std::vector<std::array<double, kNumActorClasses>>* out) {
  out->assign(traj.states.size(), {});
  for (const auto& dyn : dynamics) {
    if (dyn.occupancy == nullptr) continue;
    if (dyn.occupancy->occupancy.size() < traj.states.size()) {
      throw std::invalid_argument(
          "CostOccupancy: occupancy horizon shorter than trajectory");
    }
    const int cls = static_cast<int>(dyn.cls);
    for (size_t t = 0; t < traj.states.size(); ++t) {
      const BevGridD& occ = dyn.occupancy->occupancy[t];
      double worst = 0.0;
      for (int32_t idx : cells[t]) {
        worst = std::max(worst, occ[idx]);
      }
      (*out)[t][cls] += worst;
    }
  }
}

// Violation of the stopping-distance envelope: the object at the cell
// brakes hard, the SDV reacts with comfortable deceleration.
double SafetyViolation(double v_sdv, double v_obj, double gap,
                       const SafetyParams& safety) {
  const double d_safe = v_sdv * safety.reaction_time +
                        v_sdv * v_sdv / (2.0 * safety.comfort_decel) -
                        v_obj * v_obj / (2.0 * safety.hard_decel);
  return std::max(0.0, d_safe - gap);
}

void HeadwayCore(const Trajectory& traj,
                 const std::vector<PlanningScene::ClassDynamics>& dynamics,
                 const VehicleParams& vehicle, const SafetyParams& safety,
                 CellList* buffer, std::vector<double>* out) {
  out->assign(traj.states.size(), 0.0);
  if (dynamics.empty()) return;
  const GridSpec* spec = nullptr;
  for (const auto& dyn : dynamics) {
    if (dyn.occupancy != nullptr && !dyn.occupancy->occupancy.empty()) {
      spec = &dyn.occupancy->occupancy[0].spec();
      break;
    }
  }
  if (spec == nullptr) return;

  for (size_t t = 0; t < traj.states.size(); ++t) {
    const SdvState& state = traj.states[t];
    const Vec2 dir{std::cos(state.theta), std::sin(state.theta)};
    const Vec2 front{state.x + dir.x * 0.5 * vehicle.length,
                     state.y + dir.y * 0.5 * vehicle.length};
    // Cells within headway_range ahead whose lateral offset stays within
    // half the SDV width plus one cell.
    const double halfwidth = 0.5 * vehicle.width + spec->resolution_m;
    const Pose2 corridor_center{front.x + dir.x * 0.5 * safety.headway_range,
                                front.y + dir.y * 0.5 * safety.headway_range,
                                state.theta};
    buffer->clear();
    RasterizeFootprintInto(
        Footprint::FromPose(corridor_center, safety.headway_range,
                            2.0 * halfwidth),
        *spec, buffer);

    double total = 0.0;
    for (const auto& dyn : dynamics) {
      if (dyn.occupancy == nullptr ||
          dyn.occupancy->occupancy.size() <= t) {
        continue;
      }
      const BevGridD& occ = dyn.occupancy->occupancy[t];
      const MotionField* field = nullptr;
      if (dyn.motion != nullptr && dyn.motion->size() > t) {
        field = &(*dyn.motion)[t];
      }
      for (int32_t idx : *buffer) {
        const double p = occ[idx];
        if (p <= 0.0) continue;
        const int row = idx / spec->cols;
        const int col = idx % spec->cols;
        const Vec2 center = spec->CellCenter(row, col);
        const double gap = (center - front).Dot(dir);
        if (gap < 0.0) continue;
        double expected_violation = 0.0;
        if (field != nullptr) {
          for (int k = 0; k < field->num_modes; ++k) {
            const double pk = field->mode_probs[k][idx];
            if (pk <= 0.0) continue;
            const double v_obj =
                std::max(0.0, field->vel_x[k][idx] * dir.x +
                                  field->vel_y[k][idx] * dir.y);
            expected_violation +=
                pk * SafetyViolation(state.v, v_obj, gap, safety);
          }
        } else {
          expected_violation = SafetyViolation(state.v, 0.0, gap, safety);
        }
        total += p * expected_violation;
      }
    }
    (*out)[t] = total;
  }
}

ComfortCosts ComfortCore(const Trajectory& traj, double dt) {
  ComfortCosts costs;
  const int n_states = static_cast<int>(traj.states.size());
  const int n_controls = n_states - 1;

  if (n_controls >= 2) {
    double sum = 0.0;
    for (int t = 0; t + 1 < n_controls; ++t) {
      const double jerk = (traj.states[t + 1].a - traj.states[t].a) / dt;
      sum += jerk * jerk;
    }
    costs.jerk = sum / static_cast<double>(n_controls - 1);
  }
  {
    double sum = 0.0;
    for (const SdvState& s : traj.states) {
      const double lat = s.v * s.v * s.kappa;
      sum += lat * lat;
    }
    costs.lat_accel = sum / static_cast<double>(n_states);
  }
  {
    double sum = 0.0;
    for (const SdvState& s : traj.states) sum += s.kappa * s.kappa;
    costs.curvature = sum / static_cast<double>(n_states);
  }
  if (n_controls >= 1) {
    double sum = 0.0;
    for (int t = 0; t < n_controls; ++t) {
      const double rate =
          (traj.states[t + 1].kappa - traj.states[t].kappa) / dt;
      sum += rate * rate;
    }
    costs.curvature_rate = sum / static_cast<double>(n_controls);
  }
  return costs;
}

}  // namespace

void internal::UnionScratch::Prepare(int size) {
  if (static_cast<int>(stamp.size()) < size) stamp.assign(size, 0);
  ++epoch;
  if (epoch == 0) {  // epoch counter wrapped; reset stamps
    std::fill(stamp.begin(), stamp.end(), 0);
    epoch = 1;
  }
}

bool internal::UnionScratch::Visit(int32_t idx) {
  if (stamp[idx] == epoch) return false;
  stamp[idx] = epoch;
  return true;
}

const char* SubcostName(int subcost) { return kSubcostNames[subcost]; }

int SubcostFromName(const std::string& name) {
  for (int i = 0; i < kNumSubcosts; ++i) {
    if (name == kSubcostNames[i]) return i;
  }
  return -1;
}

CostWeights CostWeights::Uniform(double value) {
  CostWeights weights;
  weights.w.fill(value);
  return weights;
}

void SaveWeights(const std::string& path, const CostWeights& weights) {
  nlohmann::json j;
  for (int i = 0; i < kNumSubcosts; ++i) j[kSubcostNames[i]] = weights[i];
  std::ofstream os(path);
  if (!os) throw std::runtime_error("SaveWeights: cannot open " + path);
  os << j.dump(2) << "\n";
}

CostWeights LoadWeights(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("LoadWeights: cannot open " + path);
  nlohmann::json j;
  is >> j;
  CostWeights weights;
  for (int i = 0; i < kNumSubcosts; ++i) {
    weights[i] = j.at(kSubcostNames[i]).get<double>();
    if (weights[i] < 0.0) {
      throw std::runtime_error("LoadWeights: negative weight for " +
                               std::string(kSubcostNames[i]));
    }
  }
  return weights;
}

double CostBreakdown::OccupancyAt(int t) const {
  double sum = 0.0;
  for (double v : occupancy_cls[t]) sum += v;
  return sum;
}

double CostBreakdown::OccupancyTotal() const {
  double sum = 0.0;
  for (size_t t = 0; t < occupancy_cls.size(); ++t) sum += OccupancyAt(t);
  return sum;
}

double CostBreakdown::HeadwayTotal() const {
  double sum = 0.0;
  for (double v : headway) sum += v;
  return sum;
}

std::array<double, kNumSubcosts> CostBreakdown::Values() const {
  std::array<double, kNumSubcosts> values{};
  values[kRoute] = route;
  values[kRouteCostToGo] = route_cost_to_go;
  values[kLaneDist] = lane_dist;
  values[kLaneDir] = lane_dir;
  values[kLaneUncertainty] = lane_uncertainty;
  values[kDrivable] = drivable;
  values[kJunction] = junction;
  values[kOccupancy] = OccupancyTotal();
  values[kHeadway] = HeadwayTotal();
  values[kJerk] = jerk;
  values[kLatAccel] = lat_accel;
  values[kCurvature] = curvature;
  values[kCurvatureRate] = curvature_rate;
  return values;
}

double CostRoute(const Trajectory& traj, const BevGridD& route,
                 const VehicleParams& vehicle) {
  std::vector<CellList> cells;
  RasterStates(traj, route.spec(), vehicle, &cells);
  UnionScratch scratch;
  return RouteCore(cells, route, &scratch);
}

double CostRouteToGo(const Trajectory& traj, const BevGridD& route,
                     const VehicleParams& vehicle, double horizon_s) {
  if (horizon_s <= 0.0) {
    throw std::invalid_argument("CostRouteToGo: horizon must be positive");
  }
  UnionScratch scratch;
  CellList buffer;
  return RouteToGoCore(traj.states.back(), route, vehicle, horizon_s,
                       &scratch, &buffer);
}

double CostLaneDist(const Trajectory& traj, const OnlineMap& map,
                    const VehicleParams& vehicle) {
  std::vector<CellList> cells;
  RasterStates(traj, map.spec, vehicle, &cells);
  return LaneDistCore(cells, map);
}

double CostLaneDir(const Trajectory& traj, const OnlineMap& map,
                   const VehicleParams& vehicle) {
  std::vector<CellList> cells;
  RasterStates(traj, map.spec, vehicle, &cells);
  return LaneDirCore(traj, cells, map);
}

double CostLaneUncertainty(const Trajectory& traj, const OnlineMap& map,
                           const VehicleParams& vehicle, double k_theta_min) {
  std::vector<CellList> cells;
  RasterStates(traj, map.spec, vehicle, &cells);
  return LaneUncertaintyCore(traj, cells, map, k_theta_min);
}

double CostDrivable(const Trajectory& traj, const OnlineMap& map,
                    const VehicleParams& vehicle) {
  std::vector<CellList> cells;
  RasterStates(traj, map.spec, vehicle, &cells);
  return DrivableCore(cells, map);
}

double CostJunction(const Trajectory& traj, const OnlineMap& map,
                    LightState light, const VehicleParams& vehicle) {
  std::vector<CellList> cells;
  RasterStates(traj, map.spec, vehicle, &cells);
  return JunctionCore(cells, map, light);
}

std::vector<double> CostOccupancy(
    const Trajectory& traj,
    const std::vector<PlanningScene::ClassDynamics>& dynamics,
    const VehicleParams& vehicle) {
  std::vector<double> result(traj.states.size(), 0.0);
  const GridSpec* spec = nullptr;
  for (const auto& dyn : dynamics) {
    if (dyn.occupancy != nullptr && !dyn.occupancy->occupancy.empty()) {
      spec = &dyn.occupancy->occupancy[0].spec();
      break;
    }
  }
  if (spec == nullptr) return result;
  std::vector<CellList> cells;
  RasterStates(traj, *spec, vehicle, &cells);
  std::vector<std::array<double, kNumActorClasses>> per_class;
  OccupancyCore(traj, cells, dynamics, &per_class);
  for (size_t t = 0; t < per_class.size(); ++t) {
    for (double v : per_class[t]) result[t] += v;
  }
  return result;
}

std::vector<double> CostHeadway(
    const Trajectory& traj,
    const std::vector<PlanningScene::ClassDynamics>& dynamics,
    const VehicleParams& vehicle, const SafetyParams& safety) {
  CellList buffer;
  std::vector<double> out;
  HeadwayCore(traj, dynamics, vehicle, safety, &buffer, &out);
  return out;
}

ComfortCosts CostComfort(const Trajectory& traj, double dt) {
  return ComfortCore(traj, dt);
}

double WeightedTotal(const CostWeights& weights,
                     const CostBreakdown& breakdown) {
  const std::array<double, kNumSubcosts> values = breakdown.Values();
  double total = 0.0;
  for (int i = 0; i < kNumSubcosts; ++i) total += weights[i] * values[i];
  return total;
}

Evaluation Evaluate(const Trajectory& traj, const PlanningScene& scene,
                    const CostWeights& weights) {
  TrajectoryEvaluator evaluator(scene, weights);
  return evaluator.Evaluate(traj);
}

TrajectoryEvaluator::TrajectoryEvaluator(const PlanningScene& scene,
                                         const CostWeights& weights)
    : scene_(scene), weights_(weights) {
  if (scene_.map == nullptr) {
    throw std::invalid_argument("TrajectoryEvaluator: scene without map");
  }
}

Evaluation TrajectoryEvaluator::Evaluate(const Trajectory& traj) {
  Evaluation eval;
  CostBreakdown& b = eval.breakdown;

  RasterStates(traj, scene_.map->spec, scene_.vehicle, &map_cells_);
  b.route = RouteCore(map_cells_, scene_.map->route, &scratch_);
  b.route_cost_to_go =
      RouteToGoCore(traj.states.back(), scene_.map->route, scene_.vehicle,
                    scene_.params.route_to_go_horizon_s, &scratch_, &buffer_);
  b.lane_dist = LaneDistCore(map_cells_, *scene_.map);
  b.lane_dir = LaneDirCore(traj, map_cells_, *scene_.map);
  b.lane_uncertainty = LaneUncertaintyCore(traj, map_cells_, *scene_.map,
                                           scene_.params.k_theta_min);
  b.drivable = DrivableCore(map_cells_, *scene_.map);
  b.junction = JunctionCore(map_cells_, *scene_.map, scene_.light);

  const GridSpec* occ_spec = nullptr;
  for (const auto& dyn : scene_.dynamics) {
    if (dyn.occupancy != nullptr && !dyn.occupancy->occupancy.empty()) {
      occ_spec = &dyn.occupancy->occupancy[0].spec();
      break;
    }
  }
  if (occ_spec != nullptr) {
    RasterStates(traj, *occ_spec, scene_.vehicle, &occ_cells_);
    OccupancyCore(traj, occ_cells_, scene_.dynamics, &b.occupancy_cls);
  } else {
    b.occupancy_cls.assign(traj.states.size(), {});
  }
  HeadwayCore(traj, scene_.dynamics, scene_.vehicle, scene_.safety, &buffer_,
              &b.headway);

  const ComfortCosts comfort = ComfortCore(traj, kPlanDt);
  b.jerk = comfort.jerk;
  b.lat_accel = comfort.lat_accel;
  b.curvature = comfort.curvature;
  b.curvature_rate = comfort.curvature_rate;

  eval.total = WeightedTotal(weights_, b);
  return eval;
}

}  // namespace bevplan
