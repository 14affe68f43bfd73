#ifndef BEVPLAN_GRID_H_
#define BEVPLAN_GRID_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bevplan/geometry.h"

namespace bevplan {

// Uniform axis-aligned BEV raster frame. Columns run along +x (length),
// rows along +y (width). Cell (0,0) has its corner at `origin`.
struct GridSpec {
  double resolution_m = 0.4;
  double length_m = 140.0;
  double width_m = 80.0;
  Vec2 origin{};
  int rows = 0;
  int cols = 0;

  static GridSpec Make(double length_m, double width_m, double resolution_m,
                       const Vec2& origin);
  // Centered on `center`, with the origin snapped to the resolution lattice
  // so a moving ROI keeps cell centers on a fixed world lattice.
  static GridSpec MakeCentered(const Vec2& center, double length_m,
                               double width_m, double resolution_m);

  int size() const { return rows * cols; }
  int Index(int row, int col) const { return row * cols + col; }
  bool Contains(int row, int col) const {
    return row >= 0 && row < rows && col >= 0 && col < cols;
  }

  // Continuous grid coordinates in cell units; (0,0) is the origin corner.
  Vec2 WorldToGrid(const Vec2& p) const {
    return {(p.x - origin.x) / resolution_m, (p.y - origin.y) / resolution_m};
  }
  Vec2 GridToWorld(const Vec2& g) const {
    return {origin.x + g.x * resolution_m, origin.y + g.y * resolution_m};
  }
  Vec2 CellCenter(int row, int col) const {
    return {origin.x + (col + 0.5) * resolution_m,
            origin.y + (row + 0.5) * resolution_m};
  }
  int RowAt(double y) const {
    return static_cast<int>(std::floor((y - origin.y) / resolution_m));
  }
  int ColAt(double x) const {
    return static_cast<int>(std::floor((x - origin.x) / resolution_m));
  }
  bool ContainsPoint(const Vec2& p) const {
    return Contains(RowAt(p.y), ColAt(p.x));
  }

  bool operator==(const GridSpec& o) const {
    return resolution_m == o.resolution_m && rows == o.rows && cols == o.cols &&
           origin.x == o.origin.x && origin.y == o.origin.y;
  }
};

template <typename T>
class BevGrid {
 public:
  BevGrid() = default;
  explicit BevGrid(const GridSpec& spec, T fill = T{})
      : spec_(spec), cells_(static_cast<size_t>(spec.size()), fill) {}

  const GridSpec& spec() const { return spec_; }
  int rows() const { return spec_.rows; }
  int cols() const { return spec_.cols; }

  T& at(int row, int col) { return cells_[spec_.Index(row, col)]; }
  T at(int row, int col) const { return cells_[spec_.Index(row, col)]; }
  T& operator[](int index) { return cells_[index]; }
  T operator[](int index) const { return cells_[index]; }

  // Value at a world point; `fallback` outside the grid.
  T AtWorld(const Vec2& p, T fallback = T{}) const {
    const int row = spec_.RowAt(p.y);
    const int col = spec_.ColAt(p.x);
    if (!spec_.Contains(row, col)) return fallback;
    return cells_[spec_.Index(row, col)];
  }

  std::vector<T>& cells() { return cells_; }
  const std::vector<T>& cells() const { return cells_; }

  void Fill(T value) { cells_.assign(cells_.size(), value); }

  bool operator==(const BevGrid& o) const {
    return spec_ == o.spec_ && cells_ == o.cells_;
  }

 private:
  GridSpec spec_;
  std::vector<T> cells_;
};

using BevGridD = BevGrid<double>;
using BevGridF = BevGrid<float>;

// SDV rectangle in world space at a given state; vertices CCW.
struct Footprint {
  Polygon polygon;

  static Footprint FromPose(const Pose2& pose, double length, double width) {
    return Footprint{MakeBoxPolygon(pose, length, width)};
  }
};

// Cells whose center falls strictly inside the footprint polygon.
// Appends indices in row-major order. Empty when there is no overlap.
void RasterizeFootprintInto(const Footprint& fp, const GridSpec& spec,
                            std::vector<int32_t>* out);

std::vector<int32_t> RasterizeFootprint(const Footprint& fp,
                                        const GridSpec& spec);

// One quarter of a bilinear mass split.
struct BilinearPart {
  int row = 0;
  int col = 0;
  double weight = 0.0;
  bool in_grid = false;
};

// Splits unit mass at a continuous grid coordinate over the 4 nearest cell
// centers. Weights are nonnegative and sum to 1; parts falling outside the
// grid keep their weight but are flagged out-of-grid.
std::array<BilinearPart, 4> BilinearSplit(const Vec2& grid_point,
                                          const GridSpec& spec);

}  // namespace bevplan

#endif  // BEVPLAN_GRID_H_
