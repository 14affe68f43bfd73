#ifndef BEVPLAN_LANE_GRAPH_H_
#define BEVPLAN_LANE_GRAPH_H_

#include <vector>

#include "bevplan/geometry.h"

namespace bevplan {

struct Lane {
  int id = -1;
  std::vector<Vec2> centerline;  // ordered by arc length, direction of travel
  std::vector<int> successors;
  int left_neighbor = -1;   // -1 when absent
  int right_neighbor = -1;
  double speed_limit = 8.0;

  double Length() const { return PolylineLength(centerline); }
  double HeadingAt(double arclength) const;
};

struct LaneGraph {
  std::vector<Lane> lanes;
  std::vector<Polygon> drivable;       // road surface polygons
  std::vector<Polygon> intersections;  // light-controlled junction polygons

  const Lane* FindLane(int id) const;

  // Nearest lane to `pos` whose direction is within pi/2 of `heading`
  // (any direction when `heading_tolerance` >= pi). Returns -1 if no lane
  // is within `max_lateral_m`.
  int FindNearestLane(const Vec2& pos, double heading,
                      double max_lateral_m = 10.0,
                      double heading_tolerance = M_PI / 2.0) const;

  // Lane ids attainable from `start` via successor and neighbor edges.
  // Neighbor edges never reverse direction, so traffic rules hold.
  std::vector<int> ReachableFrom(int start_lane) const;

  bool IsDrivable(const Vec2& p) const;
  bool IsIntersection(const Vec2& p) const;
};

}  // namespace bevplan

#endif  // BEVPLAN_LANE_GRAPH_H_
