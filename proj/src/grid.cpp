#include "bevplan/grid.h"

#include <algorithm>

namespace bevplan {

GridSpec GridSpec::Make(double length_m, double width_m, double resolution_m,
                        const Vec2& origin) {
  if (resolution_m <= 0.0) {
    throw std::invalid_argument("GridSpec: resolution must be positive");
  }
  GridSpec spec;
  spec.resolution_m = resolution_m;
  spec.length_m = length_m;
  spec.width_m = width_m;
  spec.origin = origin;
  spec.rows = static_cast<int>(std::lround(width_m / resolution_m));
  spec.cols = static_cast<int>(std::lround(length_m / resolution_m));
  if (spec.rows <= 0 || spec.cols <= 0) {
    throw std::invalid_argument("GridSpec: extent smaller than one cell");
  }
  return spec;
}

GridSpec GridSpec::MakeCentered(const Vec2& center, double length_m,
                                double width_m, double resolution_m) {
  Vec2 origin{center.x - 0.5 * length_m, center.y - 0.5 * width_m};
  origin.x = std::floor(origin.x / resolution_m) * resolution_m;
  origin.y = std::floor(origin.y / resolution_m) * resolution_m;
  return Make(length_m, width_m, resolution_m, origin);
}

void RasterizeFootprintInto(const Footprint& fp, const GridSpec& spec,
                            std::vector<int32_t>* out) {
  const Polygon& poly = fp.polygon;
  if (poly.size() < 3) return;

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
      if (PointInConvexPolygon(spec.CellCenter(row, col), poly)) {
        out->push_back(spec.Index(row, col));
      }
    }
  }
}

std::vector<int32_t> RasterizeFootprint(const Footprint& fp,
                                        const GridSpec& spec) {
  std::vector<int32_t> cells;
  RasterizeFootprintInto(fp, spec, &cells);
  return cells;
}

std::array<BilinearPart, 4> BilinearSplit(const Vec2& grid_point,
                                          const GridSpec& spec) {
  const double u = grid_point.x - 0.5;
  const double v = grid_point.y - 0.5;
  const int col0 = static_cast<int>(std::floor(u));
  const int row0 = static_cast<int>(std::floor(v));
  const double fx = u - col0;
  const double fy = v - row0;

  std::array<BilinearPart, 4> parts{{
      {row0, col0, (1.0 - fx) * (1.0 - fy), false},
      {row0, col0 + 1, fx * (1.0 - fy), false},
      {row0 + 1, col0, (1.0 - fx) * fy, false},
      {row0 + 1, col0 + 1, fx * fy, false},
  }};
  for (BilinearPart& part : parts) {
    part.in_grid = spec.Contains(part.row, part.col);
  }
  return parts;
}

}  // namespace bevplan
