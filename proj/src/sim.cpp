#include "bevplan/sim.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace bevplan {

namespace {

ScriptSample SampleScript(const std::vector<ScriptSample>& track, double t) {
  if (track.empty()) return {};
  if (t <= track.front().t) return track.front();
  if (t >= track.back().t) {
    // Constant-velocity extrapolation past the script end.
    ScriptSample s = track.back();
    const double dt = t - s.t;
    s.x += s.vx * dt;
    s.y += s.vy * dt;
    s.t = t;
    return s;
  }
  for (size_t i = 0; i + 1 < track.size(); ++i) {
    const ScriptSample& a = track[i];
    const ScriptSample& b = track[i + 1];
    if (t > b.t) continue;
    const double span = b.t - a.t;
    const double u = span > 0.0 ? (t - a.t) / span : 0.0;
    ScriptSample s;
    s.t = t;
    s.x = a.x + (b.x - a.x) * u;
    s.y = a.y + (b.y - a.y) * u;
    s.theta = a.theta + WrapAngle(b.theta - a.theta) * u;
    s.vx = a.vx + (b.vx - a.vx) * u;
    s.vy = a.vy + (b.vy - a.vy) * u;
    return s;
  }
  return track.back();
}

std::vector<Vec2> ExpertPolyline(const Scenario& scenario) {
  std::vector<Vec2> pts;
  pts.reserve(scenario.expert.size());
  for (const SdvState& s : scenario.expert) {
    if (!pts.empty() && (s.position() - pts.back()).Norm() < 1e-6) continue;
    pts.push_back(s.position());
  }
  if (pts.size() < 2) pts.push_back(pts.back() + Vec2{1e-3, 0.0});
  return pts;
}

// Predicted futures for the occupancy oracle at the current time.
std::vector<FlowActor> PredictActors(const WorldState& world, double dt) {
  std::vector<FlowActor> flow_actors;
  flow_actors.reserve(world.actors.size());
  for (const ActorRuntime& actor : world.actors) {
    FlowActor fa;
    fa.cls = actor.script->cls;
    fa.length = actor.script->length;
    fa.width = actor.script->width;
    if (actor.idm_active) {
      // IDM actors are predicted with constant velocity.
      ActorMode mode;
      mode.weight = 1.0;
      for (int k = 0; k <= kFlowSteps; ++k) {
        const double ahead = k * dt;
        mode.poses.push_back({actor.pose.x + actor.velocity.x * ahead,
                              actor.pose.y + actor.velocity.y * ahead,
                              actor.pose.theta});
        mode.velocities.push_back(actor.velocity);
      }
      fa.modes.push_back(std::move(mode));
    } else {
      const auto add_mode = [&](const std::vector<ScriptSample>& track,
                                double weight) {
        ActorMode mode;
        mode.weight = weight;
        for (int k = 0; k <= kFlowSteps; ++k) {
          const ScriptSample s = SampleScript(track, world.time + k * dt);
          mode.poses.push_back({s.x, s.y, s.theta});
          mode.velocities.push_back({s.vx, s.vy});
        }
        fa.modes.push_back(std::move(mode));
      };
      if (actor.script->branches.empty()) {
        add_mode(actor.script->track, 1.0);
      } else {
        double total = 0.0;
        for (const auto& branch : actor.script->branches) {
          total += branch.weight;
        }
        for (const auto& branch : actor.script->branches) {
          add_mode(branch.track, total > 0.0 ? branch.weight / total : 1.0);
        }
      }
    }
    flow_actors.push_back(std::move(fa));
  }
  return flow_actors;
}

struct TickDynamics {
  std::vector<ClassFlow> flows;
  std::vector<OccupancyField> occupancy;

  void Attach(PlanningScene* scene) {
    for (size_t i = 0; i < flows.size(); ++i) {
      scene->dynamics.push_back(
          {flows[i].cls, &occupancy[i], &flows[i].fields});
    }
  }
};

TickDynamics BuildDynamics(const WorldState& world, const GridSpec& occ_spec,
                           const SimOptions& opts, double dt) {
  TickDynamics dynamics;
  const std::vector<FlowActor> flow_actors = PredictActors(world, dt);
  int modes = 1;
  for (const FlowActor& fa : flow_actors) {
    modes = std::max(modes, static_cast<int>(fa.modes.size()));
  }
  modes = std::min(modes, opts.flow_modes);
  dynamics.flows = RasterizeActors(flow_actors, occ_spec, modes);
  dynamics.occupancy.reserve(dynamics.flows.size());
  for (const ClassFlow& flow : dynamics.flows) {
    dynamics.occupancy.push_back(
        RollOut(flow.initial, flow.fields, dt, flow.cls));
  }
  return dynamics;
}

// Episode-wide map frame: lane graph and expert bounding box plus margin.
GridSpec EpisodeMapSpec(const Scenario& scenario, double resolution,
                        double margin = 30.0) {
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  auto include = [&](const Vec2& p) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  };
  for (const Lane& lane : scenario.lane_graph.lanes) {
    for (const Vec2& p : lane.centerline) include(p);
  }
  for (const Polygon& poly : scenario.lane_graph.drivable) {
    for (const Vec2& p : poly) include(p);
  }
  for (const SdvState& s : scenario.expert) include(s.position());

  min_x -= margin;
  min_y -= margin;
  max_x += margin;
  max_y += margin;
  const Vec2 origin{std::floor(min_x / resolution) * resolution,
                    std::floor(min_y / resolution) * resolution};
  const double length = std::ceil((max_x - origin.x) / resolution) * resolution;
  const double width = std::ceil((max_y - origin.y) / resolution) * resolution;
  return GridSpec::Make(length, width, resolution, origin);
}

struct LaneFollow {
  const Lane* lane = nullptr;
  double arclength = 0.0;
};

// Advances along-lane position across successor boundaries.
LaneFollow AdvanceAlongLanes(const LaneGraph& lg, const Lane* lane,
                             double arclength) {
  LaneFollow out{lane, arclength};
  int guard = 0;
  while (out.lane != nullptr && out.arclength > out.lane->Length() &&
         ++guard < 16) {
    const Lane* next = nullptr;
    double best_turn = std::numeric_limits<double>::infinity();
    for (int id : out.lane->successors) {
      const Lane* cand = lg.FindLane(id);
      if (cand == nullptr) continue;
      // Prefer the straightest continuation.
      double turn = 0.0;
      if (cand->centerline.size() >= 2) {
        const Vec2 d0 = cand->centerline[1] - cand->centerline[0];
        turn = std::abs(
            WrapAngle(std::atan2(d0.y, d0.x) -
                      out.lane->HeadingAt(out.lane->Length())));
      }
      if (turn < best_turn) {
        best_turn = turn;
        next = cand;
      }
    }
    if (next == nullptr) {
      out.arclength = out.lane->Length();
      break;
    }
    out.arclength -= out.lane->Length();
    out.lane = next;
  }
  return out;
}

void IntegrateIdmActor(ActorRuntime* actor, const WorldState& world,
                       const Scenario& scenario, const SimOptions& opts) {
  const LaneGraph& lg = scenario.lane_graph;
  const Lane* lane = lg.FindLane(actor->idm_lane);
  if (lane == nullptr) return;

  IdmParams params = opts.idm;
  params.desired_speed = std::max(0.5, lane->speed_limit);

  const int substeps = 5;
  const double h = scenario.tick_dt / substeps;
  for (int i = 0; i < substeps; ++i) {
    // Nearest entity ahead on this lane: the SDV or another actor.
    double lead_arc = std::numeric_limits<double>::infinity();
    double lead_speed = 0.0;
    double lead_length = 0.0;
    auto consider = [&](const Vec2& pos, double speed, double length) {
      const PolylineProjection proj = ProjectOntoPolyline(pos,
                                                          lane->centerline);
      if (proj.lateral > 2.0) return;
      if (proj.arclength <= actor->idm_arclength) return;
      if (proj.arclength < lead_arc) {
        lead_arc = proj.arclength;
        lead_speed = speed;
        lead_length = length;
      }
    };
    consider(world.sdv.position(), world.sdv.v, opts.vehicle.length);
    for (const ActorRuntime& other : world.actors) {
      if (&other == actor) continue;
      consider(other.pose.position(), other.velocity.Norm(),
               other.script->length);
    }

    double accel;
    if (std::isinf(lead_arc)) {
      accel = IdmFreeRoadAcceleration(actor->idm_speed, params);
    } else {
      const double gap = lead_arc - actor->idm_arclength -
                         0.5 * (lead_length + actor->script->length);
      accel = IdmAcceleration(actor->idm_speed, lead_speed, gap, params);
    }
    actor->idm_speed = std::max(0.0, actor->idm_speed + accel * h);
    actor->idm_arclength += actor->idm_speed * h;
  }

  const LaneFollow follow = AdvanceAlongLanes(lg, lane, actor->idm_arclength);
  if (follow.lane != lane) {
    actor->idm_lane = follow.lane->id;
    actor->idm_arclength = follow.arclength;
  }
  const Vec2 pos = SamplePolyline(follow.lane->centerline, follow.arclength);
  const double heading = follow.lane->HeadingAt(follow.arclength);
  actor->pose = {pos.x, pos.y, heading};
  actor->velocity = {actor->idm_speed * std::cos(heading),
                     actor->idm_speed * std::sin(heading)};
}

void InitWorld(WorldState* world, const Scenario& scenario) {
  world->time = 0.0;
  world->tick = 0;
  world->sdv = scenario.expert.at(0);
  world->actors.clear();
  for (const ActorScript& script : scenario.actors) {
    ActorRuntime actor;
    actor.script = &script;
    const ScriptSample s = SampleScript(script.track, 0.0);
    actor.pose = {s.x, s.y, s.theta};
    actor.velocity = {s.vx, s.vy};
    world->actors.push_back(actor);
  }
}

}  // namespace

const char* SimEvent::KindName(int kind) {
  switch (kind) {
    case kCollision: return "collision";
    case kOffRoute: return "off_route";
    case kOffRoad: return "off_road";
    case kOncomingTraffic: return "oncoming_traffic";
  }
  return "unknown";
}

void StepWorld(WorldState* world, const Scenario& scenario,
               const Trajectory& chosen, const SimOptions& opts) {
  world->sdv = chosen.states.at(1);
  world->time += scenario.tick_dt;
  ++world->tick;

  // Divergence trigger: the SDV trails its log position along the expert
  // path, so rear vehicles become reactive.
  const std::vector<Vec2> log_path = ExpertPolyline(scenario);
  const int expert_tick = std::min(
      world->tick, static_cast<int>(scenario.expert.size()) - 1);
  const double log_arc =
      ProjectOntoPolyline(scenario.expert[expert_tick].position(), log_path)
          .arclength;
  const PolylineProjection sdv_proj =
      ProjectOntoPolyline(world->sdv.position(), log_path);
  const bool diverged = log_arc - sdv_proj.arclength > opts.idm_switch_gap_m;

  for (ActorRuntime& actor : world->actors) {
    if (actor.idm_active) {
      IntegrateIdmActor(&actor, *world, scenario, opts);
      continue;
    }
    const ScriptSample s = SampleScript(actor.script->track, world->time);
    actor.pose = {s.x, s.y, s.theta};
    actor.velocity = {s.vx, s.vy};

    if (diverged) {
      const PolylineProjection proj =
          ProjectOntoPolyline(actor.pose.position(), log_path);
      const bool rear = proj.arclength < sdv_proj.arclength &&
                        proj.lateral < 3.5;
      if (rear) {
        const int lane_id = scenario.lane_graph.FindNearestLane(
            actor.pose.position(), actor.pose.theta);
        if (lane_id >= 0) {
          actor.idm_active = true;
          actor.idm_lane = lane_id;
          actor.idm_arclength =
              ProjectOntoPolyline(
                  actor.pose.position(),
                  scenario.lane_graph.FindLane(lane_id)->centerline)
                  .arclength;
          actor.idm_speed = actor.velocity.Norm();
        }
      }
    }
  }
}

std::vector<SimEvent> DetectEvents(const WorldState& world,
                                   const Scenario& scenario,
                                   const OnlineMap& map,
                                   const RoutePlan& true_route,
                                   const SimOptions& opts) {
  std::vector<SimEvent> events;
  const Vec2 pos = world.sdv.position();
  const Polygon sdv_poly = MakeBoxPolygon(world.sdv.pose(),
                                          opts.vehicle.length,
                                          opts.vehicle.width);

  for (const ActorRuntime& actor : world.actors) {
    const Polygon actor_poly = MakeBoxPolygon(actor.pose,
                                              actor.script->length,
                                              actor.script->width);
    if (ConvexPolygonsIntersect(sdv_poly, actor_poly)) {
      events.push_back({SimEvent::kCollision, world.tick, pos});
      break;
    }
  }

  if (!true_route.polyline.empty()) {
    const double lateral =
        ProjectOntoPolyline(pos, true_route.polyline).lateral;
    if (lateral >
        opts.map_params.corridor_halfwidth_m + opts.off_route_margin_m) {
      events.push_back({SimEvent::kOffRoute, world.tick, pos});
    }
  }

  // Off-road: any footprint cell outside the drivable oracle.
  const std::vector<int32_t> cells =
      RasterizeFootprint(Footprint{sdv_poly}, map.spec);
  for (int32_t idx : cells) {
    if (map.drivable[idx] < 0.5) {
      events.push_back({SimEvent::kOffRoad, world.tick, pos});
      break;
    }
  }

  // Oncoming traffic: the SDV sits on a lane opposing its heading and on
  // no lane agreeing with it (turn lanes overlap inside intersections).
  bool on_agreeing = false;
  bool on_opposing = false;
  for (const Lane& lane : scenario.lane_graph.lanes) {
    if (lane.centerline.size() < 2) continue;
    const PolylineProjection proj = ProjectOntoPolyline(pos, lane.centerline);
    if (proj.lateral > opts.lane_membership_m) continue;
    if (AngleDiff(proj.segment_heading, world.sdv.theta) > M_PI / 2.0) {
      on_opposing = true;
    } else {
      on_agreeing = true;
    }
  }
  if (on_opposing && !on_agreeing) {
    events.push_back({SimEvent::kOncomingTraffic, world.tick, pos});
  }
  return events;
}

EpisodeMetrics RunEpisode(const Scenario& scenario,
                          const TrajectoryBank& bank,
                          const CostWeights& weights,
                          const SimOptions& opts) {
  return RunEpisode(scenario, bank, weights, opts, nullptr);
}

EpisodeMetrics RunEpisode(const Scenario& scenario,
                          const TrajectoryBank& bank,
                          const CostWeights& weights, const SimOptions& opts,
                          std::vector<TickTrace>* trace) {
  if (scenario.expert.empty()) {
    throw std::runtime_error("RunEpisode: scenario without expert states");
  }
  EpisodeMetrics metrics;
  metrics.scenario = scenario.name;

  // Static oracle layers once per episode; the lane graph does not change.
  const GridSpec map_spec = EpisodeMapSpec(scenario, opts.map_resolution_m);
  const Pose2 start_pose = scenario.expert[0].pose();
  OnlineMap map = RasterizeMap(scenario.lane_graph, start_pose, map_spec,
                               opts.map_params);
  const uint64_t route_seed =
      opts.seed ^ std::hash<std::string>{}(scenario.name);
  map.route = RasterizeRoute(scenario.lane_graph, start_pose,
                             scenario.command, map_spec,
                             opts.route_noise_std_m, route_seed,
                             opts.map_params);
  map = PerturbMap(map, opts.map_noise, route_seed + 1);
  const RoutePlan true_route = ResolveRoute(
      scenario.lane_graph, start_pose, scenario.command,
      scenario.command.distance_m);

  WorldState world;
  InitWorld(&world, scenario);

  std::array<bool, SimEvent::kNumKinds> seen_kinds{};
  std::vector<double> executed_accels;
  std::vector<double> executed_lat_accels;
  executed_lat_accels.push_back(world.sdv.v * world.sdv.v * world.sdv.kappa);

  const int ticks = scenario.Ticks();
  for (int tick = 0; tick < ticks; ++tick) {
    const int expert_tick =
        std::min(tick, static_cast<int>(scenario.expert.size()) - 1);
    metrics.l2_to_expert.push_back(
        (world.sdv.position() - scenario.expert[expert_tick].position())
            .Norm());

    const GridSpec occ_spec = GridSpec::MakeCentered(
        world.sdv.position(), opts.occ_roi_length_m, opts.occ_roi_width_m,
        opts.occ_resolution_m);
    TickDynamics dynamics =
        BuildDynamics(world, occ_spec, opts, scenario.tick_dt);

    PlanningScene scene;
    scene.map = &map;
    dynamics.Attach(&scene);
    scene.light = scenario.light;
    scene.vehicle = opts.vehicle;
    scene.safety = opts.safety;
    scene.params = opts.cost_params;

    const PlanResult plan =
        Plan(world.sdv, scene, bank, weights, opts.limits, opts.parallelism);

    if (trace != nullptr) {
      trace->push_back({tick, world.sdv, plan.best_cost,
                        plan.candidate_count, metrics.l2_to_expert.back()});
    }

    const Vec2 before = world.sdv.position();
    StepWorld(&world, scenario, plan.best, opts);
    metrics.progress_m += (world.sdv.position() - before).Norm();
    executed_accels.push_back(plan.best.states[0].a);
    executed_lat_accels.push_back(world.sdv.v * world.sdv.v *
                                  world.sdv.kappa);

    for (const SimEvent& event :
         DetectEvents(world, scenario, map, true_route, opts)) {
      if (seen_kinds[event.kind]) continue;
      seen_kinds[event.kind] = true;
      metrics.events.push_back(event);
    }

    // Abort when execution diverges too far from the commanded route.
    if (!true_route.polyline.empty()) {
      const double lateral =
          ProjectOntoPolyline(world.sdv.position(), true_route.polyline)
              .lateral;
      if (lateral - opts.map_params.corridor_halfwidth_m >
          opts.abort_distance_m) {
        metrics.aborted = true;
        break;
      }
    }
  }

  const int expert_last =
      std::min(world.tick, static_cast<int>(scenario.expert.size()) - 1);
  metrics.l2_to_expert.push_back(
      (world.sdv.position() - scenario.expert[expert_last].position())
          .Norm());
  metrics.ticks = world.tick;

  double l2_sum = 0.0;
  for (double d : metrics.l2_to_expert) l2_sum += d;
  metrics.mean_l2 = l2_sum / static_cast<double>(metrics.l2_to_expert.size());

  double jerk_sq = 0.0;
  int jerk_n = 0;
  for (size_t i = 0; i + 1 < executed_accels.size(); ++i) {
    const double jerk =
        (executed_accels[i + 1] - executed_accels[i]) / scenario.tick_dt;
    jerk_sq += jerk * jerk;
    ++jerk_n;
  }
  metrics.jerk_rms = jerk_n > 0 ? std::sqrt(jerk_sq / jerk_n) : 0.0;
  double lat_sq = 0.0;
  for (double lat : executed_lat_accels) lat_sq += lat * lat;
  metrics.lat_accel_rms =
      std::sqrt(lat_sq / static_cast<double>(executed_lat_accels.size()));

  metrics.off_route = seen_kinds[SimEvent::kOffRoute];
  metrics.success = metrics.events.empty() && !metrics.aborted;
  return metrics;
}

BatchSummary Aggregate(const std::vector<EpisodeMetrics>& episodes) {
  BatchSummary summary;
  summary.episodes = static_cast<int>(episodes.size());
  if (episodes.empty()) return summary;

  int successes = 0;
  int off_route = 0;
  double l2_sum = 0.0;
  size_t l2_count = 0;
  for (const EpisodeMetrics& m : episodes) {
    successes += m.success ? 1 : 0;
    off_route += m.off_route ? 1 : 0;
    summary.total_meters += m.progress_m;
    for (double d : m.l2_to_expert) l2_sum += d;
    l2_count += m.l2_to_expert.size();
    for (const SimEvent& event : m.events) {
      ++summary.event_counts[event.kind];
      ++summary.total_events;
    }
  }
  summary.success_rate = static_cast<double>(successes) / summary.episodes;
  summary.off_route_pct = 100.0 * off_route / summary.episodes;
  summary.mean_l2 = l2_count > 0 ? l2_sum / l2_count : 0.0;
  summary.meters_per_event_overall =
      summary.total_events > 0
          ? summary.total_meters / summary.total_events
          : summary.total_meters;
  for (int kind = 0; kind < SimEvent::kNumKinds; ++kind) {
    summary.meters_per_event[kind] =
        summary.event_counts[kind] > 0
            ? summary.total_meters / summary.event_counts[kind]
            : summary.total_meters;
  }
  return summary;
}

std::vector<TrainingExample> BuildTrainingExamples(
    const Scenario& scenario, const TrajectoryBank& bank,
    const SimOptions& opts, int stride) {
  if (stride < 1) stride = 1;
  const GridSpec map_spec = EpisodeMapSpec(scenario, opts.map_resolution_m);
  const Pose2 start_pose = scenario.expert[0].pose();
  auto map = std::make_shared<OnlineMap>(RasterizeMap(
      scenario.lane_graph, start_pose, map_spec, opts.map_params));
  // Learning sees the noise-free route; the expert followed the true one.
  map->route = RasterizeRoute(scenario.lane_graph, start_pose,
                              scenario.command, map_spec, 0.0, 0,
                              opts.map_params);

  WorldState world;
  InitWorld(&world, scenario);

  std::vector<TrainingExample> examples;
  const int last_start =
      static_cast<int>(scenario.expert.size()) - 1 - kPlanSteps;
  for (int start = 0; start <= last_start; start += stride) {
    TrainingExample example;
    example.map = map;
    example.light = scenario.light;
    example.vehicle = opts.vehicle;
    example.safety = opts.safety;
    example.params = opts.cost_params;
    example.x0 = scenario.expert[start];

    const std::vector<SdvState> segment(
        scenario.expert.begin() + start,
        scenario.expert.begin() + start + kPlanSteps + 1);
    example.expert = ProjectToProfile(segment, scenario.tick_dt, opts.limits);
    example.candidates = SampleBank(bank, example.x0, opts.limits);

    WorldState snapshot;
    snapshot.time = start * scenario.tick_dt;
    snapshot.tick = start;
    snapshot.sdv = example.x0;
    snapshot.actors = world.actors;
    for (ActorRuntime& actor : snapshot.actors) {
      const ScriptSample s = SampleScript(actor.script->track, snapshot.time);
      actor.pose = {s.x, s.y, s.theta};
      actor.velocity = {s.vx, s.vy};
    }
    const GridSpec occ_spec = GridSpec::MakeCentered(
        example.x0.position(), 80.0, 50.0, opts.occ_resolution_m);
    TickDynamics dynamics =
        BuildDynamics(snapshot, occ_spec, opts, scenario.tick_dt);
    for (size_t i = 0; i < dynamics.flows.size(); ++i) {
      example.dynamics.push_back({dynamics.flows[i].cls,
                                  std::move(dynamics.occupancy[i]),
                                  std::move(dynamics.flows[i].fields)});
    }

    example.actor_polygons.resize(kPlanSteps + 1);
    for (int t = 0; t <= kPlanSteps; ++t) {
      const double at = (start + t) * scenario.tick_dt;
      for (const ActorScript& script : scenario.actors) {
        const ScriptSample s = SampleScript(script.track, at);
        example.actor_polygons[t].push_back(MakeBoxPolygon(
            {s.x, s.y, s.theta}, script.length, script.width));
      }
    }
    examples.push_back(std::move(example));
  }
  return examples;
}

}  // namespace bevplan
