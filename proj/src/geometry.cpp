#include "bevplan/geometry.h"

#include <algorithm>
#include <limits>

namespace bevplan {

double WrapAngle(double a) {
  double w = std::remainder(a, 2.0 * M_PI);
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

double AngleDiff(double a, double b) {
  return std::abs(std::remainder(a - b, 2.0 * M_PI));
}

double PolygonArea(const Polygon& poly) {
  double twice = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    twice += a.Cross(b);
  }
  return 0.5 * twice;
}

bool PointInConvexPolygon(const Vec2& p, const Polygon& poly) {
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 edge = poly[(i + 1) % n] - poly[i];
    if (edge.Cross(p - poly[i]) <= 0.0) return false;
  }
  return true;
}

bool PointInPolygon(const Vec2& p, const Polygon& poly) {
  bool inside = false;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

Polygon MakeBoxPolygon(const Pose2& pose, double length, double width) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  auto corner = [&](double lx, double ly) -> Vec2 {
    return {pose.x + lx * c - ly * s, pose.y + lx * s + ly * c};
  };
  return {corner(hl, hw), corner(-hl, hw), corner(-hl, -hw), corner(hl, -hw)};
}

namespace {

// Projects polygon vertices onto an axis and checks interval separation.
bool SeparatedOnAxis(const Vec2& axis, const Polygon& a, const Polygon& b) {
  double a_min = std::numeric_limits<double>::infinity(), a_max = -a_min;
  for (const Vec2& v : a) {
    const double d = v.Dot(axis);
    a_min = std::min(a_min, d);
    a_max = std::max(a_max, d);
  }
  double b_min = std::numeric_limits<double>::infinity(), b_max = -b_min;
  for (const Vec2& v : b) {
    const double d = v.Dot(axis);
    b_min = std::min(b_min, d);
    b_max = std::max(b_max, d);
  }
  return a_max < b_min || b_max < a_min;
}

}  // namespace

bool ConvexPolygonsIntersect(const Polygon& a, const Polygon& b) {
  for (const Polygon* poly : {&a, &b}) {
    const size_t n = poly->size();
    for (size_t i = 0; i < n; ++i) {
      const Vec2 edge = (*poly)[(i + 1) % n] - (*poly)[i];
      const Vec2 axis{-edge.y, edge.x};
      if (SeparatedOnAxis(axis, a, b)) return false;
    }
  }
  return true;
}

double ConvexIntersectionArea(const Polygon& subject, const Polygon& clip) {
  Polygon poly = subject;
  const size_t n = clip.size();
  for (size_t i = 0; i < n && !poly.empty(); ++i) {
    const Vec2& ca = clip[i];
    const Vec2& cb = clip[(i + 1) % n];
    const Vec2 edge = cb - ca;
    Polygon next;
    next.reserve(poly.size() + 1);
    const size_t m = poly.size();
    for (size_t j = 0; j < m; ++j) {
      const Vec2& p = poly[j];
      const Vec2& q = poly[(j + 1) % m];
      const double dp = edge.Cross(p - ca);
      const double dq = edge.Cross(q - ca);
      if (dp >= 0.0) next.push_back(p);
      if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0)) {
        const double t = dp / (dp - dq);
        next.push_back(p + (q - p) * t);
      }
    }
    poly = std::move(next);
  }
  if (poly.size() < 3) return 0.0;
  return std::abs(PolygonArea(poly));
}

double DistancePointToSegment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.SquaredNorm();
  if (len2 <= 0.0) return (p - a).Norm();
  double t = (p - a).Dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).Norm();
}

PolylineProjection ProjectOntoPolyline(const Vec2& p,
                                       const std::vector<Vec2>& pts) {
  PolylineProjection best;
  best.lateral = std::numeric_limits<double>::infinity();
  double arc_at_segment = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[i + 1];
    const Vec2 ab = b - a;
    const double seg_len = ab.Norm();
    double t = 0.0;
    if (seg_len > 0.0) {
      t = std::clamp((p - a).Dot(ab) / (seg_len * seg_len), 0.0, 1.0);
    }
    const double d = (p - (a + ab * t)).Norm();
    if (d < best.lateral) {
      best.lateral = d;
      best.arclength = arc_at_segment + t * seg_len;
      best.segment_heading = std::atan2(ab.y, ab.x);
      best.segment_index = static_cast<int>(i);
    }
    arc_at_segment += seg_len;
  }
  return best;
}

Vec2 SamplePolyline(const std::vector<Vec2>& pts, double arclength) {
  if (pts.empty()) return {};
  if (arclength <= 0.0) return pts.front();
  double remaining = arclength;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 ab = pts[i + 1] - pts[i];
    const double seg_len = ab.Norm();
    if (remaining <= seg_len && seg_len > 0.0) {
      return pts[i] + ab * (remaining / seg_len);
    }
    remaining -= seg_len;
  }
  return pts.back();
}

double PolylineLength(const std::vector<Vec2>& pts) {
  double len = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    len += (pts[i + 1] - pts[i]).Norm();
  }
  return len;
}

}  // namespace bevplan
