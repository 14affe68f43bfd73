#include "bevplan/planner.h"

#include <algorithm>
#include <thread>

namespace bevplan {

PlanResult PlanCandidates(const std::vector<Trajectory>& candidates,
                          const PlanningScene& scene,
                          const CostWeights& weights, int parallelism) {
  if (candidates.empty()) {
    throw NoCandidates("PlanCandidates: empty candidate set");
  }
  const int n = static_cast<int>(candidates.size());
  PlanResult result;
  result.candidate_count = n;
  result.totals.resize(n);
  result.breakdowns.resize(n);

  int workers = parallelism > 0
                    ? parallelism
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n);

  auto score_range = [&](int begin, int end) {
    TrajectoryEvaluator evaluator(scene, weights);
    for (int i = begin; i < end; ++i) {
      Evaluation eval = evaluator.Evaluate(candidates[i]);
      result.totals[i] = eval.total;
      result.breakdowns[i] = std::move(eval.breakdown);
    }
  };

  if (workers <= 1) {
    score_range(0, n);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back(score_range, begin, end);
    }
    for (std::thread& t : threads) t.join();
  }

  // Sequential argmin over the stored totals keeps tie-breaking stable.
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (result.totals[i] < result.totals[best]) best = i;
  }
  result.best = candidates[best];
  result.best_cost = result.totals[best];
  result.best_index = best;
  return result;
}

PlanResult Plan(const SdvState& x0, const PlanningScene& scene,
                const TrajectoryBank& bank, const CostWeights& weights,
                const KinematicLimits& limits, int parallelism) {
  const std::vector<Trajectory> candidates = SampleBank(bank, x0, limits);
  return PlanCandidates(candidates, scene, weights, parallelism);
}

}  // namespace bevplan
