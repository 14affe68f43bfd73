#include "bevplan/occupancy_flow.h"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace bevplan {

std::string ActorClassName(ActorClass cls) {
  switch (cls) {
    case ActorClass::kVehicle: return "vehicle";
    case ActorClass::kPedestrian: return "pedestrian";
    case ActorClass::kBicyclist: return "bicyclist";
  }
  return "vehicle";
}

ActorClass ActorClassFromName(const std::string& name) {
  if (name == "vehicle") return ActorClass::kVehicle;
  if (name == "pedestrian") return ActorClass::kPedestrian;
  if (name == "bicyclist") return ActorClass::kBicyclist;
  throw std::invalid_argument("unknown actor class: " + name);
}

BevGridD FlowStep(const BevGridD& occupancy, const MotionField& field,
                  double dt) {
  if (!(occupancy.spec() == field.spec)) {
    throw std::invalid_argument("FlowStep: grid spec mismatch");
  }
  if (dt <= 0.0) {
    throw std::invalid_argument("FlowStep: dt must be positive");
  }
  const GridSpec& spec = occupancy.spec();

  // Probability that no flow event targets a cell, accumulated as a
  // product of complements in fixed row-major source order. One flow
  // event exists per (source, target) pair: its probability sums the
  // mode-weighted bilinear mass over all K modes first.
  BevGridD no_flow(spec, 1.0);
  struct TargetMass {
    int32_t index;
    double mass;
  };
  std::vector<TargetMass> targets;
  targets.reserve(4 * field.num_modes);
  for (int row = 0; row < spec.rows; ++row) {
    for (int col = 0; col < spec.cols; ++col) {
      const double p_occ = occupancy.at(row, col);
      if (p_occ <= 0.0) continue;
      const int src = spec.Index(row, col);
      const Vec2 center = spec.CellCenter(row, col);
      targets.clear();
      auto deposit = [&targets](int32_t idx, double mass) {
        for (TargetMass& t : targets) {
          if (t.index == idx) {
            t.mass += mass;
            return;
          }
        }
        targets.push_back({idx, mass});
      };
      for (int k = 0; k < field.num_modes; ++k) {
        const double p_mode = field.mode_probs[k][src];
        if (p_mode <= 0.0) continue;
        const float vx = field.vel_x[k][src];
        const float vy = field.vel_y[k][src];
        if (vx == 0.0f && vy == 0.0f) {
          // Zero displacement is the identity split; keep it exact.
          deposit(src, p_mode);
          continue;
        }
        const Vec2 head{center.x + vx * dt, center.y + vy * dt};
        const auto parts = BilinearSplit(spec.WorldToGrid(head), spec);
        for (const BilinearPart& part : parts) {
          if (!part.in_grid || part.weight <= 0.0) continue;
          deposit(spec.Index(part.row, part.col), p_mode * part.weight);
        }
      }
      for (const TargetMass& t : targets) {
        no_flow[t.index] *= 1.0 - p_occ * t.mass;
      }
    }
  }

  BevGridD out(spec);
  for (int i = 0; i < spec.size(); ++i) out[i] = 1.0 - no_flow[i];
  return out;
}

OccupancyField RollOut(const BevGridD& initial,
                       const std::vector<MotionField>& fields, double dt,
                       ActorClass cls) {
  OccupancyField field;
  field.cls = cls;
  field.occupancy.reserve(fields.size() + 1);
  field.occupancy.push_back(initial);
  for (const MotionField& motion : fields) {
    field.occupancy.push_back(FlowStep(field.occupancy.back(), motion, dt));
  }
  return field;
}

namespace {

struct CellClaim {
  int actor = 0;
  int mode = 0;
  double weight = 0.0;
  float vx = 0.0f;
  float vy = 0.0f;
  double centroid_dist2 = 0.0;
};

}  // namespace

std::vector<ClassFlow> RasterizeActors(const std::vector<FlowActor>& actors,
                                       const GridSpec& spec, int num_modes) {
  if (num_modes < 1) {
    throw std::invalid_argument("RasterizeActors: need at least one mode");
  }
  for (const FlowActor& actor : actors) {
    if (actor.modes.empty()) {
      throw std::invalid_argument("RasterizeActors: actor without modes");
    }
    if (static_cast<int>(actor.modes.size()) > num_modes) {
      throw std::invalid_argument("RasterizeActors: more modes than K");
    }
  }

  std::vector<ClassFlow> result;
  std::vector<int32_t> cell_buffer;
  for (int c = 0; c < kNumActorClasses; ++c) {
    const ActorClass cls = static_cast<ActorClass>(c);
    std::vector<int> members;
    for (size_t a = 0; a < actors.size(); ++a) {
      if (actors[a].cls == cls) members.push_back(static_cast<int>(a));
    }
    if (members.empty()) continue;

    ClassFlow flow;
    flow.cls = cls;
    flow.initial = BevGridD(spec);

    for (int a : members) {
      const FlowActor& actor = actors[a];
      for (const ActorMode& mode : actor.modes) {
        const Footprint fp = Footprint::FromPose(mode.poses.at(0),
                                                 actor.length, actor.width);
        cell_buffer.clear();
        RasterizeFootprintInto(fp, spec, &cell_buffer);
        for (int32_t idx : cell_buffer) flow.initial[idx] = 1.0;
      }
    }

    flow.fields.reserve(kFlowSteps);
    for (int t = 0; t < kFlowSteps; ++t) {
      MotionField field(spec, num_modes);
      // Claims on cells from every (actor, mode) polygon at this step.
      std::unordered_map<int, std::vector<CellClaim>> claims;
      for (int a : members) {
        const FlowActor& actor = actors[a];
        for (size_t k = 0; k < actor.modes.size(); ++k) {
          const ActorMode& mode = actor.modes[k];
          const Pose2& pose = mode.poses.at(t);
          const Vec2& vel = mode.velocities.at(t);
          const Footprint fp =
              Footprint::FromPose(pose, actor.length, actor.width);
          cell_buffer.clear();
          RasterizeFootprintInto(fp, spec, &cell_buffer);
          for (int32_t idx : cell_buffer) {
            const int row = idx / spec.cols;
            const int col = idx % spec.cols;
            const Vec2 center = spec.CellCenter(row, col);
            CellClaim claim;
            claim.actor = a;
            claim.mode = static_cast<int>(k);
            claim.weight = mode.weight;
            claim.vx = static_cast<float>(vel.x);
            claim.vy = static_cast<float>(vel.y);
            claim.centroid_dist2 = (center - pose.position()).SquaredNorm();
            claims[idx].push_back(claim);
          }
        }
      }

      for (auto& [idx, cell_claims] : claims) {
        // Overlapping same-class actors: the nearer centroid owns the cell.
        int owner = cell_claims[0].actor;
        double owner_dist = cell_claims[0].centroid_dist2;
        for (const CellClaim& claim : cell_claims) {
          if (claim.centroid_dist2 < owner_dist ||
              (claim.centroid_dist2 == owner_dist && claim.actor < owner)) {
            owner = claim.actor;
            owner_dist = claim.centroid_dist2;
          }
        }
        double total_weight = 0.0;
        for (const CellClaim& claim : cell_claims) {
          if (claim.actor == owner) total_weight += claim.weight;
        }
        if (total_weight <= 0.0) continue;
        for (int k = 0; k < num_modes; ++k) {
          field.mode_probs[k][idx] = 0.0;
        }
        for (const CellClaim& claim : cell_claims) {
          if (claim.actor != owner) continue;
          field.mode_probs[claim.mode][idx] = claim.weight / total_weight;
          field.vel_x[claim.mode][idx] = claim.vx;
          field.vel_y[claim.mode][idx] = claim.vy;
        }
      }
      flow.fields.push_back(std::move(field));
    }
    result.push_back(std::move(flow));
  }
  return result;
}

}  // namespace bevplan
