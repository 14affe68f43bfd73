#ifndef BEVPLAN_GEOMETRY_H_
#define BEVPLAN_GEOMETRY_H_

#include <cmath>
#include <vector>

namespace bevplan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double Dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double Cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double SquaredNorm() const { return x * x + y * y; }
  double Norm() const { return std::sqrt(SquaredNorm()); }
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 Heading() const { return {std::cos(theta), std::sin(theta)}; }
};

// Simple polygon, vertices in counter-clockwise order.
using Polygon = std::vector<Vec2>;

// Wraps an angle into (-pi, pi].
double WrapAngle(double a);

// Absolute angular difference wrapped into [0, pi].
double AngleDiff(double a, double b);

double PolygonArea(const Polygon& poly);

// Strict-interior test for a convex CCW polygon. Boundary points are out.
bool PointInConvexPolygon(const Vec2& p, const Polygon& poly);

// Even-odd crossing test for arbitrary simple polygons.
bool PointInPolygon(const Vec2& p, const Polygon& poly);

// Axis-aligned rectangle footprint of a rotated box centered at `pose`.
Polygon MakeBoxPolygon(const Pose2& pose, double length, double width);

// Separating-axis intersection test for two convex polygons.
bool ConvexPolygonsIntersect(const Polygon& a, const Polygon& b);

// Area of the intersection of two convex polygons (Sutherland-Hodgman).
double ConvexIntersectionArea(const Polygon& subject, const Polygon& clip);

double DistancePointToSegment(const Vec2& p, const Vec2& a, const Vec2& b);

struct PolylineProjection {
  double arclength = 0.0;       // along-polyline distance of the projection
  double lateral = 0.0;         // unsigned distance to the polyline
  double segment_heading = 0.0; // heading of the closest segment
  int segment_index = 0;
};

// Closest-point projection of `p` onto a polyline (>= 2 points).
PolylineProjection ProjectOntoPolyline(const Vec2& p,
                                       const std::vector<Vec2>& pts);

// Point at a given arclength along a polyline, clamped to its ends.
Vec2 SamplePolyline(const std::vector<Vec2>& pts, double arclength);

double PolylineLength(const std::vector<Vec2>& pts);

}  // namespace bevplan

#endif  // BEVPLAN_GEOMETRY_H_
