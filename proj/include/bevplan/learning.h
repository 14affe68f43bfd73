#ifndef BEVPLAN_LEARNING_H_
#define BEVPLAN_LEARNING_H_

#include <array>
#include <memory>
#include <vector>

#include "bevplan/costs.h"
#include "bevplan/planner.h"
#include "bevplan/trajectory.h"

namespace bevplan {

// One max-margin example. Owns its scene data (the map may be shared
// across examples of one scenario); MakeScene returns views into this
// object, so the example must outlive them.
struct TrainingExample {
  std::shared_ptr<const OnlineMap> map;
  struct Dynamics {
    ActorClass cls = ActorClass::kVehicle;
    OccupancyField occupancy;
    std::vector<MotionField> motion;
  };
  std::vector<Dynamics> dynamics;
  LightState light = LightState::kGreen;
  VehicleParams vehicle;
  SafetyParams safety;
  CostParams params;

  SdvState x0;
  Trajectory expert;                       // kinematically consistent
  std::vector<Trajectory> candidates;
  // Ground-truth actor polygons per trajectory step, for the safety
  // task loss.
  std::vector<std::vector<Polygon>> actor_polygons;

  PlanningScene MakeScene() const;
};

// Mean L1 distance between candidate and expert xy positions over the
// horizon, meters.
double ImitationTaskLoss(const Trajectory& candidate,
                         const Trajectory& expert);

// Collision severity per step: overlap area fraction of the SDV footprint
// with ground-truth actor polygons, scaled by `severity`.
std::vector<double> CollisionTaskLoss(
    const Trajectory& traj,
    const std::vector<std::vector<Polygon>>& actor_polygons,
    const VehicleParams& vehicle, double severity = 10.0);

// Projects recorded states into the control parameterization (per-step
// finite differences of v and kappa) and re-rolls the bicycle model, so
// scored expert trajectories are kinematically consistent.
Trajectory ProjectToProfile(const std::vector<SdvState>& states, double dt,
                            const KinematicLimits& limits = {});

struct MarginLossResult {
  double loss = 0.0;
  std::array<double, kNumSubcosts> subgradient{};
  int argmax_candidate = -1;
};

// Hinge loss over candidates:
//   max_tau [ f_r(tau_h) - f_r(tau) + l_im
//             + sum_t [f_o^t(tau_h) - f_o^t(tau) + l_o^t]_+ ]_+
// where f_o^t is the weighted occupancy cost at step t and f_r the
// weighted sum of every other subcost. The subgradient is taken at the
// maximizing candidate.
MarginLossResult MarginLoss(const TrainingExample& example,
                            const CostWeights& weights,
                            double severity = 10.0);

struct FitOptions {
  double learning_rate = 0.05;
  int steps = 500;
  CostWeights init = CostWeights{};
  double severity = 10.0;
};

struct FitResult {
  CostWeights weights;
  std::vector<double> loss_history;  // mean dataset loss, per step
};

// Projected subgradient descent with a fixed step size; weights stay in
// the nonnegative orthant.
FitResult Fit(const std::vector<TrainingExample>& dataset,
              const FitOptions& opts);

}  // namespace bevplan

#endif  // BEVPLAN_LEARNING_H_
