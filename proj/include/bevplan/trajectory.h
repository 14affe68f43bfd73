#ifndef BEVPLAN_TRAJECTORY_H_
#define BEVPLAN_TRAJECTORY_H_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bevplan/geometry.h"

namespace bevplan {

inline constexpr int kPlanSteps = 10;    // control steps over the horizon
inline constexpr double kPlanDt = 0.5;   // seconds per step
inline constexpr double kPlanHorizonSeconds = kPlanSteps * kPlanDt;

struct SdvState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;           // m/s, >= 0
  double a = 0.0;           // m/s^2
  double kappa = 0.0;       // 1/m
  double kappa_rate = 0.0;  // 1/(m*s)

  Vec2 position() const { return {x, y}; }
  Pose2 pose() const { return {x, y, theta}; }
};

struct Control {
  double accel = 0.0;
  double kappa_rate = 0.0;
};

using ControlProfile = std::vector<Control>;

struct KinematicLimits {
  double kappa_max = 0.2;        // 1/m
  double accel_max = 4.0;        // m/s^2
  double kappa_rate_max = 0.1;   // 1/(m*s)
};

struct ProfileInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// kPlanSteps+1 states at kPlanDt spacing. states[t] carries the control
// applied over [t, t+1); the terminal state holds zero controls.
struct Trajectory {
  std::vector<SdvState> states;

  const SdvState& at(int t) const { return states[t]; }
  int steps() const { return static_cast<int>(states.size()) - 1; }
};

// Controls embedded in a rolled-out trajectory.
ControlProfile ExtractProfile(const Trajectory& traj);

// Kinematic bicycle rollout: kappa integrates kappa_rate, v integrates
// accel (floored at 0), heading integrates v*kappa, position follows a
// constant-curvature arc within each sub-step. Throws ProfileInfeasible
// when |kappa| would exceed limits.kappa_max.
Trajectory BicycleRollout(const SdvState& x0, const ControlProfile& profile,
                          double dt, const KinematicLimits& limits = {},
                          int substeps = 10);

// Max deviation between states[t+1] and a one-step re-integration from
// states[t]; ~0 for trajectories produced by BicycleRollout.
double KinematicConsistencyError(const Trajectory& traj, double dt,
                                 const KinematicLimits& limits = {},
                                 int substeps = 10);

struct BankBinKey {
  int v_bin = 0;
  int kappa_bin = 0;
  int accel_bin = 0;
  auto operator<=>(const BankBinKey&) const = default;
};

// Prototype control profiles bucketed by the initial (v, kappa, a) bin.
struct TrajectoryBank {
  double v_bin_size = 2.0;
  double kappa_bin_size = 0.02;
  double accel_bin_size = 1.0;
  int plan_steps = kPlanSteps;
  double dt = kPlanDt;
  int max_prototypes_per_bin = 0;
  std::map<BankBinKey, std::vector<ControlProfile>> bins;

  BankBinKey KeyFor(const SdvState& state) const;
  size_t TotalPrototypes() const;
};

// Bins demos by initial state, k-means-clusters each bin on the xy shape
// in the initial-state frame, and keeps the member closest to each cluster
// prototype. Deterministic per seed.
TrajectoryBank BuildBank(const std::vector<Trajectory>& demos, int n_clusters,
                         uint64_t seed, const KinematicLimits& limits = {});

// Re-rolls the retrieved bin's profiles from x0 so every candidate starts
// exactly at the current state. Falls back to a fixed constant-control
// lattice when the bin is empty; never returns an empty set.
std::vector<Trajectory> SampleBank(const TrajectoryBank& bank,
                                   const SdvState& x0,
                                   const KinematicLimits& limits = {});

// Parameterized trapezoidal-acceleration / triangular-steering families
// standing in for expert driving logs.
struct DemoFamilies {
  double v0_min = 0.0;
  double v0_max = 14.0;
  double kappa0_max = 0.04;
  double accel_peak_max = 2.5;
  double kappa_rate_peak_max = 0.08;
};

std::vector<Trajectory> GenerateSyntheticDemos(const DemoFamilies& families,
                                               int count, uint64_t seed,
                                               const KinematicLimits& limits =
                                                   {});

void SaveBank(const std::string& path, const TrajectoryBank& bank);
TrajectoryBank LoadBank(const std::string& path);

}  // namespace bevplan

#endif  // BEVPLAN_TRAJECTORY_H_
