#ifndef BEVPLAN_PLANNER_H_
#define BEVPLAN_PLANNER_H_

#include <stdexcept>
#include <vector>

#include "bevplan/costs.h"
#include "bevplan/trajectory.h"

namespace bevplan {

struct NoCandidates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlanResult {
  Trajectory best;
  double best_cost = 0.0;
  int best_index = -1;
  int candidate_count = 0;
  std::vector<double> totals;               // per candidate
  std::vector<CostBreakdown> breakdowns;    // per candidate
};

// Scores a fixed candidate set in parallel and returns the argmin, with
// ties broken toward the lowest candidate index. The reduction order is
// fixed, so the result does not depend on thread scheduling.
PlanResult PlanCandidates(const std::vector<Trajectory>& candidates,
                          const PlanningScene& scene,
                          const CostWeights& weights, int parallelism = 0);

// Samples the bank at x0 (with fallback) and selects the minimum-cost
// trajectory.
PlanResult Plan(const SdvState& x0, const PlanningScene& scene,
                const TrajectoryBank& bank, const CostWeights& weights,
                const KinematicLimits& limits = {}, int parallelism = 0);

}  // namespace bevplan

#endif  // BEVPLAN_PLANNER_H_
