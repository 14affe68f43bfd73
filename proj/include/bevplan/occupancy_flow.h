#ifndef BEVPLAN_OCCUPANCY_FLOW_H_
#define BEVPLAN_OCCUPANCY_FLOW_H_

#include <array>
#include <string>
#include <vector>

#include "bevplan/grid.h"

namespace bevplan {

inline constexpr int kFlowSteps = 11;   // motion fields per rollout
inline constexpr double kFlowDt = 0.5;  // seconds per step

enum class ActorClass : int { kVehicle = 0, kPedestrian = 1, kBicyclist = 2 };
inline constexpr int kNumActorClasses = 3;

std::string ActorClassName(ActorClass cls);
ActorClass ActorClassFromName(const std::string& name);

// K-mode motion field for one class at one timestep. Every cell carries a
// full categorical distribution; off-support cells hold uniform modes and
// zero velocity, which contributes nothing once occupancy there is zero.
struct MotionField {
  GridSpec spec;
  int num_modes = 0;
  std::vector<BevGridD> mode_probs;  // K channels, per-cell sum = 1
  std::vector<BevGridF> vel_x;       // m/s in BEV
  std::vector<BevGridF> vel_y;

  MotionField() = default;
  MotionField(const GridSpec& s, int k)
      : spec(s),
        num_modes(k),
        mode_probs(k, BevGridD(s, 1.0 / k)),
        vel_x(k, BevGridF(s)),
        vel_y(k, BevGridF(s)) {}
};

// Bernoulli occupancy per timestep, t = 0..T for T motion fields.
struct OccupancyField {
  ActorClass cls = ActorClass::kVehicle;
  std::vector<BevGridD> occupancy;
};

// One step of probabilistic occupancy transport:
//   p(O_{t+1,i}) = 1 - prod_j (1 - p(F_{(t,j)->(t+1,i)}))
// with flow probability p(F) = p(O_t,j) * p(K=k) * w and w the bilinear
// weight of cell i around the head of the displacement v*dt. Mass whose
// head falls outside the grid is dropped. Source cells are visited in
// row-major order so results are reproducible bit-for-bit.
BevGridD FlowStep(const BevGridD& occupancy, const MotionField& field,
                  double dt);

// Iterated flow starting from the occupancy at t=0; output holds
// fields.size()+1 grids.
OccupancyField RollOut(const BevGridD& initial,
                       const std::vector<MotionField>& fields, double dt,
                       ActorClass cls = ActorClass::kVehicle);

// One hypothesis of an actor's future: a pose and BEV velocity per flow
// timestep (kFlowSteps+1 entries, t=0 first).
struct ActorMode {
  double weight = 1.0;
  std::vector<Pose2> poses;
  std::vector<Vec2> velocities;
};

struct FlowActor {
  ActorClass cls = ActorClass::kVehicle;
  double length = 4.5;
  double width = 1.9;
  std::vector<ActorMode> modes;  // weights sum to 1; >= 1 mode
};

struct ClassFlow {
  ActorClass cls = ActorClass::kVehicle;
  BevGridD initial;
  std::vector<MotionField> fields;  // kFlowSteps entries
};

// Ground-truth occupancy/motion rasterizer standing in for the perception
// network. Returns one entry per class that has at least one actor.
// `num_modes` caps K; actors with fewer hypotheses leave the remaining
// modes at zero probability.
std::vector<ClassFlow> RasterizeActors(const std::vector<FlowActor>& actors,
                                       const GridSpec& spec,
                                       int num_modes = 3);

}  // namespace bevplan

#endif  // BEVPLAN_OCCUPANCY_FLOW_H_
