#include "bevplan/learning.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bevplan {

PlanningScene TrainingExample::MakeScene() const {
  PlanningScene scene;
  scene.map = map.get();
  for (const Dynamics& dyn : dynamics) {
    scene.dynamics.push_back({dyn.cls, &dyn.occupancy, &dyn.motion});
  }
  scene.light = light;
  scene.vehicle = vehicle;
  scene.safety = safety;
  scene.params = params;
  return scene;
}

double ImitationTaskLoss(const Trajectory& candidate,
                         const Trajectory& expert) {
  const size_t n = std::min(candidate.states.size(), expert.states.size());
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (size_t t = 0; t < n; ++t) {
    sum += std::abs(candidate.states[t].x - expert.states[t].x) +
           std::abs(candidate.states[t].y - expert.states[t].y);
  }
  return sum / static_cast<double>(n);
}

std::vector<double> CollisionTaskLoss(
    const Trajectory& traj,
    const std::vector<std::vector<Polygon>>& actor_polygons,
    const VehicleParams& vehicle, double severity) {
  std::vector<double> losses(traj.states.size(), 0.0);
  const double footprint_area = vehicle.length * vehicle.width;
  for (size_t t = 0; t < traj.states.size(); ++t) {
    if (t >= actor_polygons.size()) break;
    const Polygon footprint = MakeBoxPolygon(traj.states[t].pose(),
                                             vehicle.length, vehicle.width);
    double overlap = 0.0;
    for (const Polygon& actor : actor_polygons[t]) {
      overlap += ConvexIntersectionArea(footprint, actor);
    }
    losses[t] = severity * overlap / footprint_area;
  }
  return losses;
}

Trajectory ProjectToProfile(const std::vector<SdvState>& states, double dt,
                            const KinematicLimits& limits) {
  if (states.size() < 2) {
    throw std::invalid_argument("ProjectToProfile: need at least 2 states");
  }
  ControlProfile profile;
  profile.reserve(states.size() - 1);
  for (size_t t = 0; t + 1 < states.size(); ++t) {
    profile.push_back({(states[t + 1].v - states[t].v) / dt,
                       (states[t + 1].kappa - states[t].kappa) / dt});
  }
  return BicycleRollout(states[0], profile, dt, limits);
}

MarginLossResult MarginLoss(const TrainingExample& example,
                            const CostWeights& weights, double severity) {
  if (example.candidates.empty()) {
    throw std::invalid_argument("MarginLoss: empty candidate set");
  }
  const PlanningScene scene = example.MakeScene();
  TrajectoryEvaluator evaluator(scene, weights);

  const CostBreakdown expert_b = evaluator.Evaluate(example.expert).breakdown;
  const std::array<double, kNumSubcosts> expert_values = expert_b.Values();

  auto weighted_rest = [&](const std::array<double, kNumSubcosts>& values) {
    double total = 0.0;
    for (int j = 0; j < kNumSubcosts; ++j) {
      if (j == kOccupancy) continue;
      total += weights[j] * values[j];
    }
    return total;
  };
  const double expert_rest = weighted_rest(expert_values);

  MarginLossResult result;
  double best_margin = -std::numeric_limits<double>::infinity();
  CostBreakdown best_breakdown;
  std::vector<double> best_hinges;  // occupancy gap per active step

  for (size_t i = 0; i < example.candidates.size(); ++i) {
    const Trajectory& candidate = example.candidates[i];
    const CostBreakdown b = evaluator.Evaluate(candidate).breakdown;
    const std::array<double, kNumSubcosts> values = b.Values();

    const double l_im = ImitationTaskLoss(candidate, example.expert);
    const std::vector<double> l_o = CollisionTaskLoss(
        candidate, example.actor_polygons, example.vehicle, severity);

    double margin = expert_rest - weighted_rest(values) + l_im;
    const size_t steps = std::min(expert_b.occupancy_cls.size(),
                                  b.occupancy_cls.size());
    std::vector<double> hinges(steps, 0.0);
    for (size_t t = 0; t < steps; ++t) {
      const double occupancy_gap =
          expert_b.OccupancyAt(static_cast<int>(t)) -
          b.OccupancyAt(static_cast<int>(t));
      const double inner = weights[kOccupancy] * occupancy_gap +
                           (t < l_o.size() ? l_o[t] : 0.0);
      if (inner > 0.0) {
        margin += inner;
        hinges[t] = occupancy_gap;
      } else {
        hinges[t] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    if (margin > best_margin) {
      best_margin = margin;
      result.argmax_candidate = static_cast<int>(i);
      best_breakdown = b;
      best_hinges = hinges;
    }
  }

  if (best_margin <= 0.0) {
    result.loss = 0.0;
    return result;
  }
  result.loss = best_margin;

  const std::array<double, kNumSubcosts> best_values =
      best_breakdown.Values();
  for (int j = 0; j < kNumSubcosts; ++j) {
    if (j == kOccupancy) continue;
    result.subgradient[j] = expert_values[j] - best_values[j];
  }
  double occ_grad = 0.0;
  for (size_t t = 0; t < best_hinges.size(); ++t) {
    if (!std::isnan(best_hinges[t])) occ_grad += best_hinges[t];
  }
  result.subgradient[kOccupancy] = occ_grad;
  return result;
}

FitResult Fit(const std::vector<TrainingExample>& dataset,
              const FitOptions& opts) {
  if (dataset.empty()) {
    throw std::invalid_argument("Fit: empty dataset");
  }
  FitResult result;
  result.weights = opts.init;
  for (int j = 0; j < kNumSubcosts; ++j) {
    result.weights[j] = std::max(0.0, result.weights[j]);
  }

  for (int step = 0; step < opts.steps; ++step) {
    double mean_loss = 0.0;
    std::array<double, kNumSubcosts> mean_grad{};
    for (const TrainingExample& example : dataset) {
      const MarginLossResult r =
          MarginLoss(example, result.weights, opts.severity);
      mean_loss += r.loss;
      for (int j = 0; j < kNumSubcosts; ++j) mean_grad[j] += r.subgradient[j];
    }
    const double inv = 1.0 / static_cast<double>(dataset.size());
    mean_loss *= inv;
    result.loss_history.push_back(mean_loss);
    for (int j = 0; j < kNumSubcosts; ++j) {
      result.weights[j] = std::max(
          0.0, result.weights[j] - opts.learning_rate * mean_grad[j] * inv);
    }
  }
  return result;
}

}  // namespace bevplan
