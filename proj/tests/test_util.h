#ifndef BEVPLAN_TESTS_TEST_UTIL_H_
#define BEVPLAN_TESTS_TEST_UTIL_H_

#include <cmath>
#include <random>
#include <vector>

#include "bevplan/geometry.h"
#include "bevplan/grid.h"
#include "bevplan/lane_graph.h"

namespace bevplan::testing {

// Independent even-odd crossing test, used as the rasterization oracle.
inline bool OraclePointInPolygon(const Vec2& p, const Polygon& poly) {
  int crossings = 0;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x) ++crossings;
    }
  }
  return (crossings % 2) == 1;
}

// Brute-force footprint raster over every cell center.
inline std::vector<int32_t> OracleRasterize(const Polygon& poly,
                                            const GridSpec& spec) {
  std::vector<int32_t> cells;
  for (int row = 0; row < spec.rows; ++row) {
    for (int col = 0; col < spec.cols; ++col) {
      if (OraclePointInPolygon(spec.CellCenter(row, col), poly)) {
        cells.push_back(spec.Index(row, col));
      }
    }
  }
  return cells;
}

// Minimum distance from a point to densely sampled polyline points.
inline double OraclePolylineDistance(const Vec2& p,
                                     const std::vector<Vec2>& polyline,
                                     double sample_step = 1e-3) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Vec2 ab = polyline[i + 1] - polyline[i];
    const double len = ab.Norm();
    const int n = std::max(1, static_cast<int>(len / sample_step));
    for (int k = 0; k <= n; ++k) {
      const Vec2 q = polyline[i] + ab * (static_cast<double>(k) / n);
      best = std::min(best, (p - q).Norm());
    }
  }
  return best;
}

// Single straight lane along +x at a given y, with a drivable strip.
inline LaneGraph StraightLaneGraph(double y = 0.0, double x0 = -60.0,
                                   double x1 = 200.0, double half_width = 4.0,
                                   double speed = 8.0) {
  LaneGraph lg;
  Lane lane;
  lane.id = 0;
  lane.centerline = {{x0, y}, {x1, y}};
  lane.speed_limit = speed;
  lg.lanes.push_back(lane);
  lg.drivable.push_back(
      {{x0, y - half_width}, {x1, y - half_width}, {x1, y + half_width},
       {x0, y + half_width}});
  return lg;
}

}  // namespace bevplan::testing

#endif  // BEVPLAN_TESTS_TEST_UTIL_H_
