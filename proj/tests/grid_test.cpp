#include "bevplan/grid.h"

#include <algorithm>
#include <filesystem>
#include <random>

#include "bevplan/grid_io.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace bevplan {
namespace {

using testing::OracleRasterize;

GridSpec SmallSpec(double res = 0.5, int cells = 20) {
  return GridSpec::Make(cells * res, cells * res, res, {0.0, 0.0});
}

TEST(GridSpec, DimensionsFromExtent) {
  const GridSpec spec = GridSpec::Make(140.0, 80.0, 0.4, {-70.0, -40.0});
  EXPECT_EQ(spec.cols, 350);
  EXPECT_EQ(spec.rows, 200);
  const GridSpec map_spec = GridSpec::Make(140.0, 80.0, 0.2, {-70.0, -40.0});
  EXPECT_EQ(map_spec.cols, 700);
  EXPECT_EQ(map_spec.rows, 400);
}

TEST(GridSpec, RejectsNonpositiveResolution) {
  EXPECT_THROW(GridSpec::Make(10.0, 10.0, 0.0, {0.0, 0.0}),
               std::invalid_argument);
  EXPECT_THROW(GridSpec::Make(10.0, 10.0, -0.5, {0.0, 0.0}),
               std::invalid_argument);
}

TEST(GridSpec, WorldGridRoundTrip) {
  const GridSpec spec = GridSpec::Make(40.0, 20.0, 0.4, {-3.3, 7.1});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-3.3, -3.3 + 40.0);
  std::uniform_real_distribution<double> uy(7.1, 7.1 + 20.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{ux(rng), uy(rng)};
    const int row = spec.RowAt(p.y);
    const int col = spec.ColAt(p.x);
    ASSERT_TRUE(spec.Contains(row, col));
    const Vec2 center = spec.CellCenter(row, col);
    EXPECT_LE(std::abs(center.x - p.x), spec.resolution_m / 2 + 1e-12);
    EXPECT_LE(std::abs(center.y - p.y), spec.resolution_m / 2 + 1e-12);
  }
}

TEST(RasterizeFootprint, UnitSquareOnCellCornerCoversBlock) {
  // A 1x1 m square centered on a cell corner has exactly the 2x2 block of
  // cell centers in its interior at 0.5 m resolution.
  const GridSpec spec = SmallSpec();
  Footprint fp;
  fp.polygon = {{1.5, 1.5}, {2.5, 1.5}, {2.5, 2.5}, {1.5, 2.5}};  // CCW
  const std::vector<int32_t> cells = RasterizeFootprint(fp, spec);
  EXPECT_EQ(cells.size(), 4u);
  std::vector<int32_t> expected = {spec.Index(3, 3), spec.Index(3, 4),
                                   spec.Index(4, 3), spec.Index(4, 4)};
  std::vector<int32_t> sorted = cells;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, expected);
}

TEST(RasterizeFootprint, OutsideExtentIsEmpty) {
  const GridSpec spec = SmallSpec();
  const Footprint fp = Footprint::FromPose({100.0, 100.0, 0.3}, 4.8, 2.0);
  EXPECT_TRUE(RasterizeFootprint(fp, spec).empty());
}

TEST(RasterizeFootprint, RotatedBoxMatchesBruteForceOracle) {
  const GridSpec spec = GridSpec::Make(16.0, 16.0, 0.4, {0.0, 0.0});
  const Footprint fp =
      Footprint::FromPose({7.03, 6.11, M_PI / 4.0}, 4.8, 2.0);
  std::vector<int32_t> cells = RasterizeFootprint(fp, spec);
  std::sort(cells.begin(), cells.end());
  const std::vector<int32_t> expected = OracleRasterize(fp.polygon, spec);
  EXPECT_EQ(cells, expected);
  EXPECT_GT(cells.size(), 0u);
}

TEST(RasterizeFootprint, ManyRandomPosesMatchOracle) {
  const GridSpec spec = GridSpec::Make(20.0, 12.0, 0.4, {-1.0, -2.0});
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> ux(0.0, 18.0);
  std::uniform_real_distribution<double> uy(-1.0, 9.0);
  std::uniform_real_distribution<double> ut(-M_PI, M_PI);
  for (int i = 0; i < 50; ++i) {
    const Footprint fp =
        Footprint::FromPose({ux(rng), uy(rng), ut(rng)}, 4.8, 2.0);
    std::vector<int32_t> cells = RasterizeFootprint(fp, spec);
    std::sort(cells.begin(), cells.end());
    EXPECT_EQ(cells, OracleRasterize(fp.polygon, spec)) << "case " << i;
  }
}

TEST(RasterizeFootprint, TranslationEquivariant) {
  // Dyadic vertex coordinates keep the shifted arithmetic exact, so the
  // index sets must shift identically.
  const GridSpec spec = SmallSpec(0.5, 40);
  Footprint fp;
  fp.polygon = {{1.25, 1.0}, {4.5, 2.25}, {3.75, 4.5}, {0.5, 3.0}};
  const int dc = 7, dr = 5;  // cells
  Footprint shifted;
  for (const Vec2& v : fp.polygon) {
    shifted.polygon.push_back({v.x + dc * 0.5, v.y + dr * 0.5});
  }
  std::vector<int32_t> base = RasterizeFootprint(fp, spec);
  std::vector<int32_t> moved = RasterizeFootprint(shifted, spec);
  ASSERT_EQ(base.size(), moved.size());
  std::sort(base.begin(), base.end());
  std::sort(moved.begin(), moved.end());
  for (size_t i = 0; i < base.size(); ++i) {
    const int row = base[i] / spec.cols;
    const int col = base[i] % spec.cols;
    EXPECT_EQ(moved[i], spec.Index(row + dr, col + dc));
  }
}

TEST(BilinearSplit, CellCenterIsIdentity) {
  const GridSpec spec = SmallSpec(1.0, 10);
  const auto parts = BilinearSplit({3.5, 2.5}, spec);
  EXPECT_EQ(parts[0].row, 2);
  EXPECT_EQ(parts[0].col, 3);
  EXPECT_DOUBLE_EQ(parts[0].weight, 1.0);
  EXPECT_DOUBLE_EQ(parts[1].weight, 0.0);
  EXPECT_DOUBLE_EQ(parts[2].weight, 0.0);
  EXPECT_DOUBLE_EQ(parts[3].weight, 0.0);
}

TEST(BilinearSplit, MidpointSplitsEvenly) {
  const GridSpec spec = SmallSpec(1.0, 10);
  const auto parts = BilinearSplit({3.0, 2.0}, spec);
  for (const BilinearPart& part : parts) {
    EXPECT_DOUBLE_EQ(part.weight, 0.25);
  }
}

TEST(BilinearSplit, FractionalOffsetMatchesTensorProduct) {
  // Offsets (0.3, 0.7) within the cell square give the separable 1-D
  // weights (0.7*0.3, 0.3*0.3, 0.7*0.7, 0.3*0.7).
  const GridSpec spec = SmallSpec(1.0, 10);
  const auto parts = BilinearSplit({3.8, 2.2}, spec);
  const double fx = 0.3, fy = 0.7;
  EXPECT_NEAR(parts[0].weight, (1 - fx) * (1 - fy), 1e-12);
  EXPECT_NEAR(parts[1].weight, fx * (1 - fy), 1e-12);
  EXPECT_NEAR(parts[2].weight, (1 - fx) * fy, 1e-12);
  EXPECT_NEAR(parts[3].weight, fx * fy, 1e-12);
}

TEST(BilinearSplit, WeightsSumToOneEverywhere) {
  const GridSpec spec = SmallSpec(0.4, 32);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 32.0);
  for (int i = 0; i < 100000; ++i) {
    const auto parts = BilinearSplit({u(rng), u(rng)}, spec);
    double sum = 0.0;
    for (const BilinearPart& part : parts) {
      EXPECT_GE(part.weight, 0.0);
      sum += part.weight;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(BilinearSplit, BoundaryPartsFlaggedOutOfGrid) {
  const GridSpec spec = SmallSpec(1.0, 4);
  const auto parts = BilinearSplit({0.2, 2.0}, spec);
  int out = 0;
  double out_weight = 0.0;
  double sum = 0.0;
  for (const BilinearPart& part : parts) {
    sum += part.weight;
    if (!part.in_grid) {
      ++out;
      out_weight += part.weight;
    }
  }
  EXPECT_EQ(out, 2);
  EXPECT_GT(out_weight, 0.0);
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(GridValues, ProbabilityWritesStayInRange) {
  const GridSpec spec = SmallSpec();
  BevGridD grid(spec);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < spec.size(); ++i) grid[i] = u(rng);
  for (int i = 0; i < spec.size(); ++i) {
    EXPECT_GE(grid[i], 0.0);
    EXPECT_LE(grid[i], 1.0);
  }
}

TEST(GridIo, BinaryContainerRoundTrip) {
  const GridSpec spec = GridSpec::Make(4.0, 2.0, 0.5, {-1.0, 3.0});
  BevGridD a(spec), b(spec);
  for (int i = 0; i < spec.size(); ++i) {
    a[i] = i * 0.125;  // exactly representable in float32
    b[i] = 1.0 - i * 0.0625;
  }
  const std::string path =
      (std::filesystem::temp_directory_path() / "bevplan_grid_test.bpg")
          .string();
  WriteGridFile(path, {&a, &b});
  const GridFile file = ReadGridFile(path);
  ASSERT_EQ(file.channels.size(), 2u);
  EXPECT_TRUE(file.spec == spec);
  for (int i = 0; i < spec.size(); ++i) {
    EXPECT_DOUBLE_EQ(file.channels[0][i], a[i]);
    EXPECT_DOUBLE_EQ(file.channels[1][i], b[i]);
  }
  std::filesystem::remove(path);
}

TEST(GridIo, TextExportIsLossless) {
  const GridSpec spec = GridSpec::Make(3.0, 3.0, 1.0, {0.25, -0.75});
  BevGridD grid(spec);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < spec.size(); ++i) grid[i] = u(rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "bevplan_grid_test.bpt")
          .string();
  WriteGridText(path, grid);
  const BevGridD loaded = ReadGridText(path);
  ASSERT_TRUE(loaded.spec() == spec);
  for (int i = 0; i < spec.size(); ++i) {
    EXPECT_EQ(loaded[i], grid[i]);  // bitwise
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace bevplan
