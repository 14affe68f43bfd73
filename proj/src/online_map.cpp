#include "bevplan/online_map.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace bevplan {

namespace {

struct Segment {
  Vec2 a;
  Vec2 b;
  double heading = 0.0;
};

std::vector<Segment> CollectSegments(const LaneGraph& lg,
                                     const std::vector<int>& lane_ids) {
  std::vector<Segment> segments;
  for (int id : lane_ids) {
    const Lane* lane = lg.FindLane(id);
    if (lane == nullptr) continue;
    for (size_t i = 0; i + 1 < lane->centerline.size(); ++i) {
      const Vec2& a = lane->centerline[i];
      const Vec2& b = lane->centerline[i + 1];
      segments.push_back({a, b, std::atan2(b.y - a.y, b.x - a.x)});
    }
  }
  return segments;
}

std::vector<int> ReachableLaneIds(const LaneGraph& lg, const Pose2& sdv_pose) {
  int current = lg.FindNearestLane(sdv_pose.position(), sdv_pose.theta);
  if (current < 0) {
    current = lg.FindNearestLane(sdv_pose.position(), sdv_pose.theta, 30.0,
                                 2.0 * M_PI);
  }
  if (current < 0) {
    std::vector<int> all;
    for (const Lane& lane : lg.lanes) all.push_back(lane.id);
    return all;
  }
  return lg.ReachableFrom(current);
}

// Total signed turning of a lane's centerline.
double TurnAngle(const Lane& lane) {
  double total = 0.0;
  double prev_heading = 0.0;
  bool have_prev = false;
  for (size_t i = 0; i + 1 < lane.centerline.size(); ++i) {
    const Vec2 d = lane.centerline[i + 1] - lane.centerline[i];
    if (d.Norm() <= 0.0) continue;
    const double h = std::atan2(d.y, d.x);
    if (have_prev) total += WrapAngle(h - prev_heading);
    prev_heading = h;
    have_prev = true;
  }
  return total;
}

enum class TurnClass { kStraight, kLeft, kRight };

TurnClass ClassifyTurn(const Lane& lane) {
  const double turn = TurnAngle(lane);
  if (turn > M_PI / 4.0) return TurnClass::kLeft;
  if (turn < -M_PI / 4.0) return TurnClass::kRight;
  return TurnClass::kStraight;
}

const Lane* StraightestSuccessor(const LaneGraph& lg, const Lane& lane) {
  const Lane* best = nullptr;
  double best_turn = std::numeric_limits<double>::infinity();
  for (int id : lane.successors) {
    const Lane* next = lg.FindLane(id);
    if (next == nullptr) continue;
    const double turn = std::abs(TurnAngle(*next));
    if (turn < best_turn) {
      best_turn = turn;
      best = next;
    }
  }
  return best;
}

void AppendCenterline(const Lane& lane, std::vector<Vec2>* polyline) {
  for (const Vec2& p : lane.centerline) {
    if (!polyline->empty()) {
      const Vec2 d = p - polyline->back();
      if (d.Norm() < 1e-9) continue;
    }
    polyline->push_back(p);
  }
}

constexpr double kMaxRouteLength = 1000.0;

}  // namespace

OnlineMap RasterizeMap(const LaneGraph& lg, const Pose2& sdv_pose,
                       const GridSpec& spec, const MapOracleParams& params) {
  if (spec.resolution_m <= 0.0) {
    throw std::invalid_argument("RasterizeMap: nonpositive resolution");
  }
  if (lg.lanes.empty()) {
    throw std::invalid_argument("RasterizeMap: empty lane graph");
  }

  OnlineMap map(spec);
  map.truncation_m = params.truncation_m;
  map.lane_dist_sigma.Fill(params.sigma_default);
  map.lane_dir_conc.Fill(params.conc_default);

  const std::vector<Segment> segments =
      CollectSegments(lg, ReachableLaneIds(lg, sdv_pose));

  // Tile-bucketed exact nearest-segment search: a segment can be the
  // per-cell argmin only if its tile-center distance is within twice the
  // tile half-diagonal of the tile's best.
  const int tile_cells = std::max(1, static_cast<int>(4.0 / spec.resolution_m));
  const double half_diag =
      0.5 * std::sqrt(2.0) * tile_cells * spec.resolution_m;
  const int tile_rows = (spec.rows + tile_cells - 1) / tile_cells;
  const int tile_cols = (spec.cols + tile_cells - 1) / tile_cells;

  std::vector<size_t> candidates;
  for (int tr = 0; tr < tile_rows; ++tr) {
    for (int tc = 0; tc < tile_cols; ++tc) {
      const int row_lo = tr * tile_cells;
      const int row_hi = std::min(spec.rows, row_lo + tile_cells);
      const int col_lo = tc * tile_cells;
      const int col_hi = std::min(spec.cols, col_lo + tile_cells);
      const Vec2 tile_center = spec.GridToWorld(
          {0.5 * (col_lo + col_hi), 0.5 * (row_lo + row_hi)});

      candidates.clear();
      double tile_min = std::numeric_limits<double>::infinity();
      for (size_t s = 0; s < segments.size(); ++s) {
        const double d =
            DistancePointToSegment(tile_center, segments[s].a, segments[s].b);
        tile_min = std::min(tile_min, d);
      }
      for (size_t s = 0; s < segments.size(); ++s) {
        const double d =
            DistancePointToSegment(tile_center, segments[s].a, segments[s].b);
        if (d <= tile_min + 2.0 * half_diag) candidates.push_back(s);
      }

      for (int row = row_lo; row < row_hi; ++row) {
        for (int col = col_lo; col < col_hi; ++col) {
          const Vec2 center = spec.CellCenter(row, col);
          double best = std::numeric_limits<double>::infinity();
          double dir = 0.0;
          for (size_t s : candidates) {
            const double d =
                DistancePointToSegment(center, segments[s].a, segments[s].b);
            if (d < best) {
              best = d;
              dir = segments[s].heading;
            }
          }
          const int idx = spec.Index(row, col);
          map.lane_dist_mu[idx] =
              std::min(params.truncation_m, candidates.empty() ? params.truncation_m : best);
          map.lane_dir_loc[idx] = dir;
        }
      }
    }
  }

  // Drivable / intersection occupancy by cell-center membership.
  auto raster_polygons = [&spec](const std::vector<Polygon>& polys,
                                 BevGridD* grid) {
    for (const Polygon& poly : polys) {
      if (poly.size() < 3) continue;
      double min_x = poly[0].x, max_x = poly[0].x;
      double min_y = poly[0].y, max_y = poly[0].y;
      for (const Vec2& v : poly) {
        min_x = std::min(min_x, v.x);
        max_x = std::max(max_x, v.x);
        min_y = std::min(min_y, v.y);
        max_y = std::max(max_y, v.y);
      }
      const int row_lo = std::max(0, spec.RowAt(min_y));
      const int row_hi = std::min(spec.rows - 1, spec.RowAt(max_y));
      const int col_lo = std::max(0, spec.ColAt(min_x));
      const int col_hi = std::min(spec.cols - 1, spec.ColAt(max_x));
      for (int row = row_lo; row <= row_hi; ++row) {
        for (int col = col_lo; col <= col_hi; ++col) {
          if (PointInPolygon(spec.CellCenter(row, col), poly)) {
            (*grid)[spec.Index(row, col)] = 1.0;
          }
        }
      }
    }
  };
  raster_polygons(lg.drivable, &map.drivable);
  raster_polygons(lg.intersections, &map.intersection);
  return map;
}

RoutePlan ResolveRoute(const LaneGraph& lg, const Pose2& sdv_pose,
                       const DrivingCommand& cmd,
                       double effective_distance_m) {
  const int current_id =
      lg.FindNearestLane(sdv_pose.position(), sdv_pose.theta);
  if (current_id < 0) {
    throw NoRouteForCommand("no lane near the SDV pose");
  }
  const Lane* current = lg.FindLane(current_id);
  const PolylineProjection proj =
      ProjectOntoPolyline(sdv_pose.position(), current->centerline);

  // Walk the straightest continuation, recording decision points.
  struct Junction {
    double arclength;  // from the SDV projection to the end of the lane
    size_t chain_pos;  // lane index in the chain at whose end it sits
  };
  std::vector<const Lane*> chain{current};
  std::vector<Junction> junctions;
  std::set<int> visited{current_id};
  double arc = current->Length() - proj.arclength;
  while (arc < kMaxRouteLength) {
    const Lane* lane = chain.back();
    if (lane->successors.size() >= 2) {
      junctions.push_back({arc, chain.size() - 1});
    }
    const Lane* next = StraightestSuccessor(lg, *lane);
    if (next == nullptr || visited.count(next->id) > 0) break;
    visited.insert(next->id);
    chain.push_back(next);
    arc += next->Length();
  }

  RoutePlan plan;
  if (cmd.action == DrivingCommand::Action::kKeepLane) {
    for (const Lane* lane : chain) {
      plan.lane_ids.push_back(lane->id);
      AppendCenterline(*lane, &plan.polyline);
    }
    return plan;
  }

  const TurnClass wanted = cmd.action == DrivingCommand::Action::kTurnLeft
                               ? TurnClass::kLeft
                               : TurnClass::kRight;
  const double target = std::max(0.0, effective_distance_m);
  const Lane* turn_lane = nullptr;
  size_t turn_chain_pos = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const Junction& junction : junctions) {
    const Lane* lane = chain[junction.chain_pos];
    for (int id : lane->successors) {
      const Lane* succ = lg.FindLane(id);
      if (succ == nullptr || ClassifyTurn(*succ) != wanted) continue;
      const double gap = std::abs(junction.arclength - target);
      if (gap < best_gap) {
        best_gap = gap;
        turn_lane = succ;
        turn_chain_pos = junction.chain_pos;
      }
      break;
    }
  }
  if (turn_lane == nullptr) {
    throw NoRouteForCommand("no command-consistent lane sequence");
  }

  for (size_t i = 0; i <= turn_chain_pos; ++i) {
    plan.lane_ids.push_back(chain[i]->id);
    AppendCenterline(*chain[i], &plan.polyline);
  }
  plan.lane_ids.push_back(turn_lane->id);
  AppendCenterline(*turn_lane, &plan.polyline);

  // Continue straight past the turn.
  std::set<int> seen(plan.lane_ids.begin(), plan.lane_ids.end());
  const Lane* lane = turn_lane;
  double tail = 0.0;
  while (tail < kMaxRouteLength) {
    const Lane* next = StraightestSuccessor(lg, *lane);
    if (next == nullptr || seen.count(next->id) > 0) break;
    seen.insert(next->id);
    plan.lane_ids.push_back(next->id);
    AppendCenterline(*next, &plan.polyline);
    tail += next->Length();
    lane = next;
  }
  return plan;
}

BevGridD RasterizeRoute(const LaneGraph& lg, const Pose2& sdv_pose,
                        const DrivingCommand& cmd, const GridSpec& spec,
                        double noise_std_m, uint64_t seed,
                        const MapOracleParams& params, RoutePlan* plan_out) {
  double effective = cmd.distance_m;
  if (noise_std_m > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std_m);
    effective += noise(rng);
  }
  const RoutePlan plan = ResolveRoute(lg, sdv_pose, cmd, effective);
  if (plan_out != nullptr) *plan_out = plan;

  BevGridD route(spec);
  const double hw = params.corridor_halfwidth_m;
  for (size_t i = 0; i + 1 < plan.polyline.size(); ++i) {
    const Vec2& a = plan.polyline[i];
    const Vec2& b = plan.polyline[i + 1];
    const int row_lo = std::max(0, spec.RowAt(std::min(a.y, b.y) - hw));
    const int row_hi =
        std::min(spec.rows - 1, spec.RowAt(std::max(a.y, b.y) + hw));
    const int col_lo = std::max(0, spec.ColAt(std::min(a.x, b.x) - hw));
    const int col_hi =
        std::min(spec.cols - 1, spec.ColAt(std::max(a.x, b.x) + hw));
    for (int row = row_lo; row <= row_hi; ++row) {
      for (int col = col_lo; col <= col_hi; ++col) {
        if (DistancePointToSegment(spec.CellCenter(row, col), a, b) <= hw) {
          route[spec.Index(row, col)] = 1.0;
        }
      }
    }
  }
  return route;
}

namespace {

void BoxBlur(BevGridD* grid, int radius) {
  if (radius <= 0) return;
  const GridSpec& spec = grid->spec();
  BevGridD tmp(spec);
  // Horizontal pass.
  for (int row = 0; row < spec.rows; ++row) {
    for (int col = 0; col < spec.cols; ++col) {
      double sum = 0.0;
      int count = 0;
      for (int c = std::max(0, col - radius);
           c <= std::min(spec.cols - 1, col + radius); ++c) {
        sum += grid->at(row, c);
        ++count;
      }
      tmp.at(row, col) = sum / count;
    }
  }
  // Vertical pass.
  for (int row = 0; row < spec.rows; ++row) {
    for (int col = 0; col < spec.cols; ++col) {
      double sum = 0.0;
      int count = 0;
      for (int r = std::max(0, row - radius);
           r <= std::min(spec.rows - 1, row + radius); ++r) {
        sum += tmp.at(r, col);
        ++count;
      }
      grid->at(row, col) = sum / count;
    }
  }
}

}  // namespace

OnlineMap PerturbMap(const OnlineMap& map, const NoiseModel& model,
                     uint64_t seed) {
  if (model.dropout_rate < 0.0 || model.dropout_rate > 1.0 ||
      model.blur_radius_cells < 0 || model.sigma_inflation <= 0.0) {
    throw std::invalid_argument("PerturbMap: invalid noise model");
  }
  OnlineMap out = map;

  if (model.blur_radius_cells > 0) {
    BoxBlur(&out.drivable, model.blur_radius_cells);
    BoxBlur(&out.intersection, model.blur_radius_cells);
    BoxBlur(&out.route, model.blur_radius_cells);
  }
  if (model.sigma_inflation != 1.0) {
    for (int i = 0; i < out.spec.size(); ++i) {
      out.lane_dist_sigma[i] *= model.sigma_inflation;
    }
  }
  if (model.dropout_rate > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int i = 0; i < out.spec.size(); ++i) {
      if (uniform(rng) >= model.dropout_rate) continue;
      out.drivable[i] = 0.5;
      out.intersection[i] = 0.5;
      out.route[i] = 0.5;
      out.lane_dist_sigma[i] = std::max(out.lane_dist_sigma[i],
                                        model.dropout_sigma);
      out.lane_dir_conc[i] = std::min(out.lane_dir_conc[i],
                                      model.dropout_conc);
    }
  }
  return out;
}

}  // namespace bevplan
