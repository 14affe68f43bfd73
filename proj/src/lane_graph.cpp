#include "bevplan/lane_graph.h"

#include <algorithm>
#include <deque>
#include <limits>

namespace bevplan {

double Lane::HeadingAt(double arclength) const {
  double remaining = std::max(0.0, arclength);
  for (size_t i = 0; i + 1 < centerline.size(); ++i) {
    const Vec2 ab = centerline[i + 1] - centerline[i];
    const double seg_len = ab.Norm();
    if (remaining <= seg_len || i + 2 == centerline.size()) {
      return std::atan2(ab.y, ab.x);
    }
    remaining -= seg_len;
  }
  return 0.0;
}

const Lane* LaneGraph::FindLane(int id) const {
  for (const Lane& lane : lanes) {
    if (lane.id == id) return &lane;
  }
  return nullptr;
}

int LaneGraph::FindNearestLane(const Vec2& pos, double heading,
                               double max_lateral_m,
                               double heading_tolerance) const {
  int best = -1;
  double best_dist = max_lateral_m;
  for (const Lane& lane : lanes) {
    if (lane.centerline.size() < 2) continue;
    const PolylineProjection proj = ProjectOntoPolyline(pos, lane.centerline);
    if (proj.lateral > best_dist) continue;
    if (AngleDiff(proj.segment_heading, heading) > heading_tolerance) continue;
    best_dist = proj.lateral;
    best = lane.id;
  }
  return best;
}

std::vector<int> LaneGraph::ReachableFrom(int start_lane) const {
  std::vector<int> reachable;
  if (FindLane(start_lane) == nullptr) return reachable;
  std::vector<bool> seen(lanes.size(), false);
  auto index_of = [this](int id) -> int {
    for (size_t i = 0; i < lanes.size(); ++i) {
      if (lanes[i].id == id) return static_cast<int>(i);
    }
    return -1;
  };
  std::deque<int> queue{start_lane};
  seen[index_of(start_lane)] = true;
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    reachable.push_back(id);
    const Lane* lane = FindLane(id);
    std::vector<int> next = lane->successors;
    if (lane->left_neighbor >= 0) next.push_back(lane->left_neighbor);
    if (lane->right_neighbor >= 0) next.push_back(lane->right_neighbor);
    for (int n : next) {
      const int idx = index_of(n);
      if (idx >= 0 && !seen[idx]) {
        seen[idx] = true;
        queue.push_back(n);
      }
    }
  }
  std::sort(reachable.begin(), reachable.end());
  return reachable;
}

bool LaneGraph::IsDrivable(const Vec2& p) const {
  for (const Polygon& poly : drivable) {
    if (PointInPolygon(p, poly)) return true;
  }
  return false;
}

bool LaneGraph::IsIntersection(const Vec2& p) const {
  for (const Polygon& poly : intersections) {
    if (PointInPolygon(p, poly)) return true;
  }
  return false;
}

}  // namespace bevplan
