#include "bevplan/occupancy_flow.h"

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace bevplan {
namespace {

GridSpec SmallSpec(double res = 0.5, int cells = 16) {
  return GridSpec::Make(cells * res, cells * res, res, {0.0, 0.0});
}

// Independent target-major evaluation of
//   p(O_{t+1,i}) = 1 - prod_j (1 - p(F_{j->i}))
// with p(F_{j->i}) = p(O_j) * sum_k p(K=k) p(V=i), using its own bilinear
// weight arithmetic.
BevGridD OracleFlowStep(const BevGridD& occ, const MotionField& field,
                        double dt) {
  const GridSpec& spec = occ.spec();
  BevGridD out(spec);
  for (int tr = 0; tr < spec.rows; ++tr) {
    for (int tc = 0; tc < spec.cols; ++tc) {
      double comp = 1.0;
      for (int sr = 0; sr < spec.rows; ++sr) {
        for (int sc = 0; sc < spec.cols; ++sc) {
          const int src = spec.Index(sr, sc);
          const double p = occ[src];
          double mass = 0.0;  // sum over modes of p(K=k) p(V=target)
          for (int k = 0; k < field.num_modes; ++k) {
            const double pk = field.mode_probs[k][src];
            // Head of the displacement vector in continuous grid coords.
            const double hx =
                (spec.origin.x + (sc + 0.5) * spec.resolution_m +
                 field.vel_x[k][src] * dt - spec.origin.x) /
                spec.resolution_m;
            const double hy =
                (spec.origin.y + (sr + 0.5) * spec.resolution_m +
                 field.vel_y[k][src] * dt - spec.origin.y) /
                spec.resolution_m;
            const double u = hx - 0.5;
            const double v = hy - 0.5;
            const int c0 = static_cast<int>(std::floor(u));
            const int r0 = static_cast<int>(std::floor(v));
            const double fx = u - c0;
            const double fy = v - r0;
            double w = 0.0;
            if (tr == r0 && tc == c0) w = (1 - fx) * (1 - fy);
            if (tr == r0 && tc == c0 + 1) w = fx * (1 - fy);
            if (tr == r0 + 1 && tc == c0) w = (1 - fx) * fy;
            if (tr == r0 + 1 && tc == c0 + 1) w = fx * fy;
            mass += pk * w;
          }
          comp *= 1.0 - p * mass;
        }
      }
      out.at(tr, tc) = 1.0 - comp;
    }
  }
  return out;
}

MotionField UniformField(const GridSpec& spec, int k) {
  return MotionField(spec, k);
}

void SetModeEverywhere(MotionField* field, int k, double prob, float vx,
                       float vy) {
  field->mode_probs[k].Fill(prob);
  field->vel_x[k].Fill(vx);
  field->vel_y[k].Fill(vy);
}

TEST(FlowStep, AllZeroOccupancyStaysZero) {
  const GridSpec spec = SmallSpec();
  BevGridD occ(spec);
  MotionField field = UniformField(spec, 3);
  const BevGridD out = FlowStep(occ, field, 0.5);
  for (int i = 0; i < spec.size(); ++i) EXPECT_EQ(out[i], 0.0);
}

TEST(FlowStep, IntegerDisplacementMovesMassExactly) {
  const GridSpec spec = SmallSpec(0.5, 16);
  BevGridD occ(spec);
  occ.at(4, 4) = 1.0;
  MotionField field = UniformField(spec, 1);
  SetModeEverywhere(&field, 0, 1.0f, 1.0f, 0.0f);  // one cell per 0.5 s
  const BevGridD out = FlowStep(occ, field, 0.5);
  for (int row = 0; row < spec.rows; ++row) {
    for (int col = 0; col < spec.cols; ++col) {
      EXPECT_EQ(out.at(row, col), (row == 4 && col == 5) ? 1.0 : 0.0);
    }
  }
}

TEST(FlowStep, TwoHalfSourcesCombineByComplementProduct) {
  // Two p=0.5 sources flowing fully into one target: 1-(1-0.5)^2 = 0.75.
  const GridSpec spec = SmallSpec(0.5, 16);
  BevGridD occ(spec);
  occ.at(2, 2) = 0.5;
  occ.at(2, 4) = 0.5;
  MotionField field = UniformField(spec, 1);
  field.mode_probs[0].Fill(1.0f);
  field.vel_x[0].at(2, 2) = 1.0f;   // one cell right
  field.vel_x[0].at(2, 4) = -1.0f;  // one cell left
  const BevGridD out = FlowStep(occ, field, 0.5);
  EXPECT_DOUBLE_EQ(out.at(2, 3), 0.75);
  EXPECT_EQ(out.at(2, 2), 0.0);
  EXPECT_EQ(out.at(2, 4), 0.0);
}

TEST(FlowStep, TwoModesSplitMassByModeProbability) {
  const GridSpec spec = SmallSpec(0.5, 16);
  BevGridD occ(spec);
  occ.at(5, 5) = 1.0;
  MotionField field = UniformField(spec, 2);
  SetModeEverywhere(&field, 0, 0.6, 1.0f, 0.0f);
  SetModeEverywhere(&field, 1, 0.4, -1.0f, 0.0f);
  const BevGridD out = FlowStep(occ, field, 0.5);
  EXPECT_NEAR(out.at(5, 6), 0.6, 1e-12);
  EXPECT_NEAR(out.at(5, 4), 0.4, 1e-12);
  EXPECT_EQ(out.at(5, 5), 0.0);
}

TEST(FlowStep, RejectsGridSpecMismatch) {
  BevGridD occ(SmallSpec(0.5, 16));
  MotionField field = UniformField(SmallSpec(0.5, 8), 1);
  EXPECT_THROW(FlowStep(occ, field, 0.5), std::invalid_argument);
  MotionField ok = UniformField(SmallSpec(0.5, 16), 1);
  EXPECT_THROW(FlowStep(occ, ok, 0.0), std::invalid_argument);
}

MotionField RandomField(const GridSpec& spec, int k, std::mt19937_64* rng,
                        float vmax) {
  MotionField field(spec, k);
  std::uniform_real_distribution<float> uv(-vmax, vmax);
  std::uniform_real_distribution<double> up(0.0, 1.0);
  for (int i = 0; i < spec.size(); ++i) {
    double total = 0.0;
    std::vector<double> probs(k);
    for (int m = 0; m < k; ++m) {
      probs[m] = up(*rng) + 0.05;
      total += probs[m];
    }
    for (int m = 0; m < k; ++m) {
      field.mode_probs[m][i] = probs[m] / total;
      field.vel_x[m][i] = uv(*rng);
      field.vel_y[m][i] = uv(*rng);
    }
  }
  return field;
}

TEST(FlowStep, MatchesBruteForceOracleOnRandomCases) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> up(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const GridSpec spec = SmallSpec(0.5, 12);
    BevGridD occ(spec);
    std::uniform_int_distribution<int> idx(0, spec.size() - 1);
    for (int n = 0; n < 8; ++n) occ[idx(rng)] = up(rng);
    const MotionField field = RandomField(spec, 3, &rng, 3.0f);
    const BevGridD out = FlowStep(occ, field, 0.5);
    const BevGridD expected = OracleFlowStep(occ, field, 0.5);
    for (int i = 0; i < spec.size(); ++i) {
      ASSERT_NEAR(out[i], expected[i], 1e-10) << "trial " << trial;
    }
  }
}

TEST(FlowStep, OutputStaysWithinProbabilityBounds) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> up(0.0, 1.0);
  const GridSpec spec = SmallSpec(0.5, 16);
  for (int trial = 0; trial < 20; ++trial) {
    BevGridD occ(spec);
    for (int i = 0; i < spec.size(); ++i) occ[i] = up(rng);
    const MotionField field = RandomField(spec, 3, &rng, 4.0f);
    const BevGridD out = FlowStep(occ, field, 0.5);
    for (int i = 0; i < spec.size(); ++i) {
      ASSERT_GE(out[i], 0.0);
      ASSERT_LE(out[i], 1.0);
    }
  }
}

TEST(FlowStep, MonotoneInSourceOccupancy) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> up(0.0, 0.8);
  const GridSpec spec = SmallSpec(0.5, 12);
  BevGridD occ(spec);
  for (int i = 0; i < spec.size(); ++i) occ[i] = up(rng);
  const MotionField field = RandomField(spec, 2, &rng, 2.0f);
  const BevGridD base = FlowStep(occ, field, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    BevGridD bumped = occ;
    std::uniform_int_distribution<int> idx(0, spec.size() - 1);
    const int cell = idx(rng);
    bumped[cell] = std::min(1.0, bumped[cell] + 0.15);
    const BevGridD out = FlowStep(bumped, field, 0.5);
    for (int i = 0; i < spec.size(); ++i) {
      ASSERT_GE(out[i], base[i] - 1e-15);
    }
  }
}

TEST(FlowStep, NearLinearMassTransportForSmallOccupancy) {
  // With every source at p <= 0.01 and heads in-grid, the union bound is
  // linear to O(eps^2): total mass is preserved within 1e-3 relative.
  std::mt19937_64 rng(77);
  const GridSpec spec = SmallSpec(0.5, 32);
  BevGridD occ(spec);
  std::uniform_int_distribution<int> row(8, 23), col(8, 23);
  for (int n = 0; n < 20; ++n) occ.at(row(rng), col(rng)) = 0.01;
  const MotionField field = RandomField(spec, 3, &rng, 2.0f);
  const BevGridD out = FlowStep(occ, field, 0.5);
  double mass_in = 0.0, mass_out = 0.0;
  for (int i = 0; i < spec.size(); ++i) {
    mass_in += occ[i];
    mass_out += out[i];
  }
  EXPECT_LE(mass_out, mass_in + 1e-12);
  EXPECT_NEAR(mass_out, mass_in, 1e-3 * mass_in);
}

TEST(FlowStep, SingleEventPerTargetIsExactBilinearTransport) {
  const GridSpec spec = SmallSpec(0.5, 16);
  BevGridD occ(spec);
  occ.at(6, 6) = 0.37;
  MotionField field = UniformField(spec, 1);
  // Dyadic velocity components are exact in both float and double.
  SetModeEverywhere(&field, 0, 1.0, 1.25f, 0.75f);
  const BevGridD out = FlowStep(occ, field, 0.5);
  const auto parts = BilinearSplit(
      spec.WorldToGrid({spec.CellCenter(6, 6).x + 1.25 * 0.5,
                        spec.CellCenter(6, 6).y + 0.75 * 0.5}),
      spec);
  double total = 0.0;
  for (const BilinearPart& part : parts) {
    ASSERT_TRUE(part.in_grid);
    EXPECT_NEAR(out.at(part.row, part.col), 0.37 * part.weight, 1e-12);
    total += out.at(part.row, part.col);
  }
  EXPECT_NEAR(total, 0.37, 1e-9);
}

TEST(FlowStep, DeterministicBitwise) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> up(0.0, 1.0);
  const GridSpec spec = SmallSpec(0.5, 16);
  BevGridD occ(spec);
  for (int i = 0; i < spec.size(); ++i) occ[i] = up(rng);
  const MotionField field = RandomField(spec, 3, &rng, 3.0f);
  const BevGridD a = FlowStep(occ, field, 0.5);
  const BevGridD b = FlowStep(occ, field, 0.5);
  EXPECT_TRUE(a == b);
}

TEST(RollOut, ZeroVelocityIsBitwiseIdentity) {
  const GridSpec spec = SmallSpec(0.5, 16);
  BevGridD occ(spec);
  // Dyadic occupancies survive 1-(1-p) exactly, and dyadic mode
  // probabilities sum to exactly 1, so zero-velocity transport must hold
  // every grid bit-for-bit across all steps.
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> num(0, 1024);
  for (int i = 0; i < spec.size(); ++i) occ[i] = num(rng) / 1024.0;
  MotionField field(spec, 3);
  field.mode_probs[0].Fill(0.5);
  field.mode_probs[1].Fill(0.25);
  field.mode_probs[2].Fill(0.25);
  const std::vector<MotionField> fields(kFlowSteps, field);
  const OccupancyField rolled = RollOut(occ, fields, 0.5);
  ASSERT_EQ(rolled.occupancy.size(), static_cast<size_t>(kFlowSteps + 1));
  for (const BevGridD& grid : rolled.occupancy) {
    ASSERT_TRUE(grid == occ);
  }
}

TEST(RollOut, ElevenFieldsGiveTwelveGrids) {
  const GridSpec spec = SmallSpec(0.5, 8);
  const std::vector<MotionField> fields(11, UniformField(spec, 1));
  const OccupancyField rolled = RollOut(BevGridD(spec), fields, 0.5);
  EXPECT_EQ(rolled.occupancy.size(), 12u);
}

TEST(RollOut, ConstantVelocityMatchesIteratedOracle) {
  // 2 m/s along +x at 0.4 m resolution moves 2.5 cells per step; compare
  // against the dense per-step transport oracle.
  const GridSpec spec = SmallSpec(0.4, 32);
  BevGridD occ(spec);
  for (int row = 10; row <= 12; ++row) {
    for (int col = 4; col <= 8; ++col) occ.at(row, col) = 1.0;
  }
  std::vector<MotionField> fields;
  for (int t = 0; t < 6; ++t) {
    MotionField field = UniformField(spec, 1);
    SetModeEverywhere(&field, 0, 1.0f, 2.0f, 0.0f);
    fields.push_back(std::move(field));
  }
  const OccupancyField rolled = RollOut(occ, fields, 0.5);

  BevGridD expected = occ;
  for (int t = 0; t < 6; ++t) {
    expected = OracleFlowStep(expected, fields[t], 0.5);
    for (int i = 0; i < spec.size(); ++i) {
      ASSERT_NEAR(rolled.occupancy[t + 1][i], expected[i], 1e-10)
          << "step " << t;
    }
  }
}

TEST(RasterizeActors, StaticVehicleOccupiesFootprintWithZeroVelocity) {
  const GridSpec spec = SmallSpec(0.4, 32);
  FlowActor actor;
  actor.cls = ActorClass::kVehicle;
  actor.length = 4.0;
  actor.width = 1.6;
  ActorMode mode;
  mode.weight = 1.0;
  for (int k = 0; k <= kFlowSteps; ++k) {
    mode.poses.push_back({6.0, 6.0, 0.0});
    mode.velocities.push_back({0.0, 0.0});
  }
  actor.modes.push_back(mode);

  const auto flows = RasterizeActors({actor}, spec, 3);
  ASSERT_EQ(flows.size(), 1u);
  EXPECT_EQ(flows[0].cls, ActorClass::kVehicle);

  const auto cells = RasterizeFootprint(
      Footprint::FromPose({6.0, 6.0, 0.0}, 4.0, 1.6), spec);
  ASSERT_FALSE(cells.empty());
  double total = 0.0;
  for (int i = 0; i < spec.size(); ++i) total += flows[0].initial[i];
  EXPECT_DOUBLE_EQ(total, static_cast<double>(cells.size()));
  for (int32_t idx : cells) {
    EXPECT_EQ(flows[0].initial[idx], 1.0);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(flows[0].fields[0].vel_x[k][idx], 0.0f);
      EXPECT_EQ(flows[0].fields[0].vel_y[k][idx], 0.0f);
    }
  }
  // Occupancy stays put under the rollout.
  const OccupancyField rolled =
      RollOut(flows[0].initial, flows[0].fields, 0.5);
  EXPECT_TRUE(rolled.occupancy.back() == flows[0].initial);
}

TEST(RasterizeActors, TwoScriptedFuturesCarryModeWeights) {
  const GridSpec spec = SmallSpec(0.4, 32);
  FlowActor actor;
  actor.cls = ActorClass::kVehicle;
  ActorMode straight, turning;
  straight.weight = 0.7;
  turning.weight = 0.3;
  for (int k = 0; k <= kFlowSteps; ++k) {
    straight.poses.push_back({4.0 + 2.0 * 0.5 * k, 6.0, 0.0});
    straight.velocities.push_back({2.0, 0.0});
    turning.poses.push_back({4.0, 6.0 + 1.5 * 0.5 * k, M_PI / 2.0});
    turning.velocities.push_back({0.0, 1.5});
  }
  actor.modes = {straight, turning};

  const auto flows = RasterizeActors({actor}, spec, 2);
  ASSERT_EQ(flows.size(), 1u);
  // At t=0 both mode polygons overlap near the start pose; overlapping
  // cells carry the (0.7, 0.3) categorical.
  const int idx = spec.Index(spec.RowAt(6.0), spec.ColAt(4.0));
  EXPECT_NEAR(flows[0].fields[0].mode_probs[0][idx], 0.7, 1e-12);
  EXPECT_NEAR(flows[0].fields[0].mode_probs[1][idx], 0.3, 1e-12);
  EXPECT_NEAR(flows[0].fields[0].vel_x[0][idx], 2.0f, 1e-6);
  EXPECT_NEAR(flows[0].fields[0].vel_y[1][idx], 1.5f, 1e-6);
}

TEST(RasterizeActors, ClassesStaySeparate) {
  const GridSpec spec = SmallSpec(0.4, 32);
  auto make = [&](ActorClass cls, double x) {
    FlowActor actor;
    actor.cls = cls;
    actor.length = 1.0;
    actor.width = 1.0;
    ActorMode mode;
    for (int k = 0; k <= kFlowSteps; ++k) {
      mode.poses.push_back({x, 5.0, 0.0});
      mode.velocities.push_back({0.0, 0.0});
    }
    actor.modes.push_back(mode);
    return actor;
  };
  const auto flows = RasterizeActors(
      {make(ActorClass::kVehicle, 4.0), make(ActorClass::kPedestrian, 8.0)},
      spec, 1);
  ASSERT_EQ(flows.size(), 2u);
  EXPECT_EQ(flows[0].cls, ActorClass::kVehicle);
  EXPECT_EQ(flows[1].cls, ActorClass::kPedestrian);
  EXPECT_GT(flows[0].initial[spec.Index(spec.RowAt(5.0), spec.ColAt(4.0))],
            0.0);
  EXPECT_EQ(flows[0].initial[spec.Index(spec.RowAt(5.0), spec.ColAt(8.0))],
            0.0);
  EXPECT_GT(flows[1].initial[spec.Index(spec.RowAt(5.0), spec.ColAt(8.0))],
            0.0);
}

TEST(MotionField, ModeProbsSumToOneEverywhere) {
  const GridSpec spec = SmallSpec(0.4, 24);
  FlowActor actor;
  actor.cls = ActorClass::kVehicle;
  ActorMode a, b;
  a.weight = 0.6;
  b.weight = 0.4;
  for (int k = 0; k <= kFlowSteps; ++k) {
    a.poses.push_back({3.0 + 0.7 * k, 4.0, 0.0});
    a.velocities.push_back({1.4, 0.0});
    b.poses.push_back({3.0 + 0.3 * k, 4.0 + 0.4 * k, 0.9});
    b.velocities.push_back({0.6, 0.8});
  }
  actor.modes = {a, b};
  const auto flows = RasterizeActors({actor}, spec, 3);
  for (const MotionField& field : flows[0].fields) {
    for (int i = 0; i < spec.size(); ++i) {
      double sum = 0.0;
      for (int k = 0; k < field.num_modes; ++k) sum += field.mode_probs[k][i];
      ASSERT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

}  // namespace
}  // namespace bevplan
