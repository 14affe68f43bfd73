#include "bevplan/trajectory.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

namespace bevplan {

namespace {

// One integrator sub-step with constant controls; exact for constant
// curvature and velocity within the sub-step.
void IntegrateSubstep(SdvState* s, double accel, double kappa_rate, double h) {
  const double v_end = std::max(0.0, s->v + accel * h);
  const double v_mid = 0.5 * (s->v + v_end);
  const double kappa_end = s->kappa + kappa_rate * h;
  const double kappa_mid = 0.5 * (s->kappa + kappa_end);
  const double ds = v_mid * h;
  const double dtheta = ds * kappa_mid;
  if (std::abs(kappa_mid) > 1e-9) {
    s->x += (std::sin(s->theta + dtheta) - std::sin(s->theta)) / kappa_mid;
    s->y -= (std::cos(s->theta + dtheta) - std::cos(s->theta)) / kappa_mid;
  } else {
    s->x += ds * std::cos(s->theta + 0.5 * dtheta);
    s->y += ds * std::sin(s->theta + 0.5 * dtheta);
  }
  s->theta = WrapAngle(s->theta + dtheta);
  s->v = v_end;
  s->kappa = kappa_end;
}

constexpr double kKappaSlack = 1e-12;

}  // namespace

ControlProfile ExtractProfile(const Trajectory& traj) {
  ControlProfile profile;
  profile.reserve(traj.steps());
  for (int t = 0; t < traj.steps(); ++t) {
    profile.push_back({traj.states[t].a, traj.states[t].kappa_rate});
  }
  return profile;
}

Trajectory BicycleRollout(const SdvState& x0, const ControlProfile& profile,
                          double dt, const KinematicLimits& limits,
                          int substeps) {
  if (std::abs(x0.kappa) > limits.kappa_max + kKappaSlack) {
    throw ProfileInfeasible("initial curvature exceeds kappa_max");
  }
  Trajectory traj;
  traj.states.reserve(profile.size() + 1);

  SdvState state = x0;
  const double h = dt / substeps;
  for (size_t t = 0; t < profile.size(); ++t) {
    state.a = profile[t].accel;
    state.kappa_rate = profile[t].kappa_rate;
    traj.states.push_back(state);
    for (int i = 0; i < substeps; ++i) {
      IntegrateSubstep(&state, profile[t].accel, profile[t].kappa_rate, h);
      if (std::abs(state.kappa) > limits.kappa_max + kKappaSlack) {
        throw ProfileInfeasible("curvature exceeds kappa_max during rollout");
      }
    }
  }
  state.a = 0.0;
  state.kappa_rate = 0.0;
  traj.states.push_back(state);
  return traj;
}

double KinematicConsistencyError(const Trajectory& traj, double dt,
                                 const KinematicLimits& limits, int substeps) {
  double worst = 0.0;
  const double h = dt / substeps;
  for (int t = 0; t + 1 < static_cast<int>(traj.states.size()); ++t) {
    SdvState s = traj.states[t];
    for (int i = 0; i < substeps; ++i) {
      IntegrateSubstep(&s, traj.states[t].a, traj.states[t].kappa_rate, h);
    }
    const SdvState& next = traj.states[t + 1];
    worst = std::max(worst, std::abs(s.x - next.x));
    worst = std::max(worst, std::abs(s.y - next.y));
    worst = std::max(worst, AngleDiff(s.theta, next.theta));
    worst = std::max(worst, std::abs(s.v - next.v));
    worst = std::max(worst, std::abs(s.kappa - next.kappa));
  }
  (void)limits;
  return worst;
}

BankBinKey TrajectoryBank::KeyFor(const SdvState& state) const {
  return {static_cast<int>(std::floor(state.v / v_bin_size)),
          static_cast<int>(std::floor(state.kappa / kappa_bin_size)),
          static_cast<int>(std::floor(state.a / accel_bin_size))};
}

size_t TrajectoryBank::TotalPrototypes() const {
  size_t total = 0;
  for (const auto& [key, profiles] : bins) total += profiles.size();
  return total;
}

namespace {

constexpr int kShapePoints = 16;

// Trajectory shape feature: xy resampled by arclength in the frame of the
// initial state.
std::vector<double> ShapeFeature(const Trajectory& traj) {
  const SdvState& s0 = traj.states[0];
  const double c = std::cos(-s0.theta);
  const double s = std::sin(-s0.theta);
  std::vector<Vec2> local;
  local.reserve(traj.states.size());
  for (const SdvState& st : traj.states) {
    const double dx = st.x - s0.x;
    const double dy = st.y - s0.y;
    local.push_back({dx * c - dy * s, dx * s + dy * c});
  }
  const double length = PolylineLength(local);
  std::vector<double> feature;
  feature.reserve(2 * kShapePoints);
  for (int i = 0; i < kShapePoints; ++i) {
    const double arc = length * i / (kShapePoints - 1);
    const Vec2 p = SamplePolyline(local, arc);
    feature.push_back(p.x);
    feature.push_back(p.y);
  }
  return feature;
}

double SquaredDistance(const std::vector<double>& a,
                       const std::vector<double>& b) {
  double d2 = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return d2;
}

// Lloyd's iterations with k-means++ seeding and empty-cluster reseeding.
// Returns one member index per cluster (the member nearest the centroid).
std::vector<int> ClusterPrototypes(const std::vector<std::vector<double>>& X,
                                   int k, std::mt19937_64* rng) {
  const int n = static_cast<int>(X.size());
  const size_t dim = X[0].size();

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  std::uniform_int_distribution<int> first(0, n - 1);
  centroids.push_back(X[first(*rng)]);
  std::vector<double> min_d2(n);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) {
        best = std::min(best, SquaredDistance(X[i], c));
      }
      min_d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      // All remaining points coincide with a centroid; fill arbitrarily.
      centroids.push_back(X[first(*rng)]);
      continue;
    }
    std::uniform_real_distribution<double> pick(0.0, total);
    double target = pick(*rng);
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      target -= min_d2[i];
      if (target <= 0.0) {
        chosen = i;
        break;
      }
    }
    centroids.push_back(X[chosen]);
  }

  std::vector<int> assignment(n, 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d2 = SquaredDistance(X[i], centroids[c]);
        if (d2 < best_d2) {
          best_d2 = d2;
          best_c = c;
        }
      }
      if (assignment[i] != best_c) {
        assignment[i] = best_c;
        changed = true;
      }
    }

    std::vector<int> counts(k, 0);
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    for (int i = 0; i < n; ++i) {
      ++counts[assignment[i]];
      for (size_t d = 0; d < dim; ++d) sums[assignment[i]][d] += X[i][d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Reseed an empty cluster with the member farthest from its
        // centroid.
        int farthest = 0;
        double far_d2 = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d2 = SquaredDistance(X[i], centroids[assignment[i]]);
          if (d2 > far_d2) {
            far_d2 = d2;
            farthest = i;
          }
        }
        centroids[c] = X[farthest];
        assignment[farthest] = c;
        changed = true;
        continue;
      }
      for (size_t d = 0; d < dim; ++d) {
        centroids[c][d] = sums[c][d] / counts[c];
      }
    }
    if (!changed) break;
  }

  std::vector<int> prototypes;
  prototypes.reserve(k);
  for (int c = 0; c < k; ++c) {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (assignment[i] != c) continue;
      const double d2 = SquaredDistance(X[i], centroids[c]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    if (best >= 0) prototypes.push_back(best);
  }
  return prototypes;
}

}  // namespace

TrajectoryBank BuildBank(const std::vector<Trajectory>& demos, int n_clusters,
                         uint64_t seed, const KinematicLimits& limits) {
  if (demos.empty()) {
    throw std::invalid_argument("BuildBank: empty demo list");
  }
  if (n_clusters < 1) {
    throw std::invalid_argument("BuildBank: n_clusters must be >= 1");
  }
  (void)limits;

  TrajectoryBank bank;
  bank.max_prototypes_per_bin = n_clusters;

  std::map<BankBinKey, std::vector<int>> members;
  for (size_t i = 0; i < demos.size(); ++i) {
    if (static_cast<int>(demos[i].states.size()) < bank.plan_steps + 1) {
      throw std::invalid_argument("BuildBank: demo shorter than horizon");
    }
    members[bank.KeyFor(demos[i].states[0])].push_back(static_cast<int>(i));
  }

  for (const auto& [key, indices] : members) {
    std::vector<ControlProfile>& prototypes = bank.bins[key];
    if (static_cast<int>(indices.size()) <= n_clusters) {
      for (int i : indices) prototypes.push_back(ExtractProfile(demos[i]));
      continue;
    }
    std::vector<std::vector<double>> features;
    features.reserve(indices.size());
    for (int i : indices) features.push_back(ShapeFeature(demos[i]));

    // Per-bin RNG stream keyed on the bin so bins are order-independent.
    std::mt19937_64 rng(seed ^ (static_cast<uint64_t>(key.v_bin + 512) << 40) ^
                        (static_cast<uint64_t>(key.kappa_bin + 512) << 20) ^
                        static_cast<uint64_t>(key.accel_bin + 512));
    const std::vector<int> chosen =
        ClusterPrototypes(features, n_clusters, &rng);
    for (int c : chosen) {
      prototypes.push_back(ExtractProfile(demos[indices[c]]));
    }
  }
  return bank;
}

std::vector<Trajectory> SampleBank(const TrajectoryBank& bank,
                                   const SdvState& x0,
                                   const KinematicLimits& limits) {
  std::vector<Trajectory> samples;
  const auto it = bank.bins.find(bank.KeyFor(x0));
  if (it != bank.bins.end()) {
    for (const ControlProfile& profile : it->second) {
      try {
        samples.push_back(BicycleRollout(x0, profile, bank.dt, limits));
      } catch (const ProfileInfeasible&) {
        // Profile does not transfer to this exact state; drop it.
      }
    }
  }
  if (!samples.empty()) return samples;

  // Fallback lattice of constant-control profiles, clipped to feasibility.
  const double horizon = bank.plan_steps * bank.dt;
  for (double accel : {-3.0, -1.0, 0.0, 1.0}) {
    const double a = std::clamp(accel, -limits.accel_max, limits.accel_max);
    for (int i = 0; i < 7; ++i) {
      double kdot =
          -limits.kappa_rate_max + i * (2.0 * limits.kappa_rate_max / 6.0);
      kdot = std::clamp(kdot, (-limits.kappa_max - x0.kappa) / horizon,
                        (limits.kappa_max - x0.kappa) / horizon);
      ControlProfile profile(bank.plan_steps, Control{a, kdot});
      samples.push_back(BicycleRollout(x0, profile, bank.dt, limits));
    }
  }
  return samples;
}

std::vector<Trajectory> GenerateSyntheticDemos(const DemoFamilies& families,
                                               int count, uint64_t seed,
                                               const KinematicLimits& limits) {
  if (count <= 0) {
    throw std::invalid_argument("GenerateSyntheticDemos: count must be > 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Trajectory> demos;
  demos.reserve(count);
  for (int n = 0; n < count; ++n) {
    SdvState x0;
    x0.v = families.v0_min + (families.v0_max - families.v0_min) * unit(rng);
    x0.kappa = families.kappa0_max * (2.0 * unit(rng) - 1.0);

    const double peak_a =
        families.accel_peak_max * (2.0 * unit(rng) - 1.0);
    const double peak_kdot =
        families.kappa_rate_peak_max * (2.0 * unit(rng) - 1.0);
    // Trapezoidal acceleration: ramp over [0,r), hold, ramp down after f.
    const double ramp = 0.2 + 0.3 * unit(rng);
    const double fall = 0.6 + 0.3 * unit(rng);

    ControlProfile profile(kPlanSteps);
    double kappa = x0.kappa;
    for (int t = 0; t < kPlanSteps; ++t) {
      const double phase = (t + 0.5) / kPlanSteps;
      double shape = 1.0;
      if (phase < ramp) {
        shape = phase / ramp;
      } else if (phase > fall) {
        shape = std::max(0.0, (1.0 - phase) / (1.0 - fall));
      }
      double accel = std::clamp(peak_a * shape, -limits.accel_max,
                                limits.accel_max);
      // Triangular steering-rate pulse: steer in, then back out.
      const double steer_shape = phase < 0.5 ? phase / 0.5
                                             : (1.0 - phase) / 0.5;
      double kdot = std::clamp(peak_kdot * steer_shape,
                               -limits.kappa_rate_max, limits.kappa_rate_max);
      // Sequential clip keeps curvature inside the feasible band.
      const double next_kappa = kappa + kdot * kPlanDt;
      if (next_kappa > limits.kappa_max) {
        kdot = (limits.kappa_max - kappa) / kPlanDt;
      } else if (next_kappa < -limits.kappa_max) {
        kdot = (-limits.kappa_max - kappa) / kPlanDt;
      }
      kappa += kdot * kPlanDt;
      profile[t] = {accel, kdot};
    }
    x0.a = profile[0].accel;
    x0.kappa_rate = profile[0].kappa_rate;
    demos.push_back(BicycleRollout(x0, profile, kPlanDt, limits));
  }
  return demos;
}

namespace {

constexpr char kBankMagic[4] = {'T', 'B', 'K', '1'};
constexpr uint32_t kBankVersion = 1;

template <typename T>
void WriteRaw(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadRaw(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

void SaveBank(const std::string& path, const TrajectoryBank& bank) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("SaveBank: cannot open " + path);
  os.write(kBankMagic, 4);
  WriteRaw(os, kBankVersion);
  WriteRaw(os, bank.v_bin_size);
  WriteRaw(os, bank.kappa_bin_size);
  WriteRaw(os, bank.accel_bin_size);
  WriteRaw(os, static_cast<uint32_t>(bank.plan_steps));
  WriteRaw(os, bank.dt);
  WriteRaw(os, static_cast<uint32_t>(bank.max_prototypes_per_bin));
  WriteRaw(os, static_cast<uint32_t>(bank.bins.size()));
  for (const auto& [key, profiles] : bank.bins) {
    WriteRaw(os, static_cast<int32_t>(key.v_bin));
    WriteRaw(os, static_cast<int32_t>(key.kappa_bin));
    WriteRaw(os, static_cast<int32_t>(key.accel_bin));
    WriteRaw(os, static_cast<uint32_t>(profiles.size()));
    for (const ControlProfile& profile : profiles) {
      for (const Control& c : profile) {
        WriteRaw(os, c.accel);
        WriteRaw(os, c.kappa_rate);
      }
    }
  }
  if (!os) throw std::runtime_error("SaveBank: write failed: " + path);
}

TrajectoryBank LoadBank(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("LoadBank: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kBankMagic, 4) != 0) {
    throw std::runtime_error("LoadBank: bad magic in " + path);
  }
  if (ReadRaw<uint32_t>(is) != kBankVersion) {
    throw std::runtime_error("LoadBank: unsupported version");
  }
  TrajectoryBank bank;
  bank.v_bin_size = ReadRaw<double>(is);
  bank.kappa_bin_size = ReadRaw<double>(is);
  bank.accel_bin_size = ReadRaw<double>(is);
  bank.plan_steps = static_cast<int>(ReadRaw<uint32_t>(is));
  bank.dt = ReadRaw<double>(is);
  bank.max_prototypes_per_bin = static_cast<int>(ReadRaw<uint32_t>(is));
  const uint32_t bin_count = ReadRaw<uint32_t>(is);
  for (uint32_t b = 0; b < bin_count; ++b) {
    BankBinKey key;
    key.v_bin = ReadRaw<int32_t>(is);
    key.kappa_bin = ReadRaw<int32_t>(is);
    key.accel_bin = ReadRaw<int32_t>(is);
    const uint32_t count = ReadRaw<uint32_t>(is);
    std::vector<ControlProfile> profiles(count);
    for (uint32_t p = 0; p < count; ++p) {
      ControlProfile profile(bank.plan_steps);
      for (int t = 0; t < bank.plan_steps; ++t) {
        profile[t].accel = ReadRaw<double>(is);
        profile[t].kappa_rate = ReadRaw<double>(is);
      }
      profiles[p] = std::move(profile);
    }
    bank.bins[key] = std::move(profiles);
  }
  if (!is) throw std::runtime_error("LoadBank: truncated file");
  return bank;
}

}  // namespace bevplan
