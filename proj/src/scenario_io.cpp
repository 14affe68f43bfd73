#include "bevplan/scenario_io.h"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace bevplan {

namespace {

using nlohmann::json;

json PointToJson(const Vec2& p) { return json::array({p.x, p.y}); }

Vec2 PointFromJson(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json PolygonToJson(const Polygon& poly) {
  json j = json::array();
  for (const Vec2& p : poly) j.push_back(PointToJson(p));
  return j;
}

Polygon PolygonFromJson(const json& j) {
  Polygon poly;
  for (const auto& p : j) poly.push_back(PointFromJson(p));
  if (poly.size() < 3) {
    throw std::runtime_error("scenario: polygon with fewer than 3 points");
  }
  return poly;
}

json TrackToJson(const std::vector<ScriptSample>& track) {
  json j = json::array();
  for (const ScriptSample& s : track) {
    j.push_back(json::array({s.t, s.x, s.y, s.theta, s.vx, s.vy}));
  }
  return j;
}

std::vector<ScriptSample> TrackFromJson(const json& j) {
  std::vector<ScriptSample> track;
  for (const auto& row : j) {
    if (row.size() != 6) {
      throw std::runtime_error("scenario: track sample must have 6 fields");
    }
    track.push_back({row.at(0).get<double>(), row.at(1).get<double>(),
                     row.at(2).get<double>(), row.at(3).get<double>(),
                     row.at(4).get<double>(), row.at(5).get<double>()});
  }
  if (track.empty()) {
    throw std::runtime_error("scenario: empty actor track");
  }
  return track;
}

std::string ActionName(DrivingCommand::Action action) {
  switch (action) {
    case DrivingCommand::Action::kKeepLane: return "keep_lane";
    case DrivingCommand::Action::kTurnLeft: return "turn_left";
    case DrivingCommand::Action::kTurnRight: return "turn_right";
  }
  return "keep_lane";
}

DrivingCommand::Action ActionFromName(const std::string& name) {
  if (name == "keep_lane") return DrivingCommand::Action::kKeepLane;
  if (name == "turn_left") return DrivingCommand::Action::kTurnLeft;
  if (name == "turn_right") return DrivingCommand::Action::kTurnRight;
  throw std::runtime_error("scenario: unknown command action " + name);
}

}  // namespace

Scenario LoadScenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("LoadScenario: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("LoadScenario: " + path + ": " + e.what());
  }

  Scenario scenario;
  scenario.name = j.value("name", std::filesystem::path(path).stem().string());
  scenario.duration_s = j.value("duration_s", 18.0);
  scenario.tick_dt = j.value("tick_dt", 0.5);

  const json& cmd = j.at("command");
  scenario.command.action = ActionFromName(cmd.at("action").get<std::string>());
  scenario.command.distance_m = cmd.value("distance_m", 0.0);
  if (scenario.command.distance_m < 0.0) {
    throw std::runtime_error("scenario: negative command distance");
  }

  const std::string light = j.value("light", "green");
  if (light == "green") {
    scenario.light = LightState::kGreen;
  } else if (light == "red") {
    scenario.light = LightState::kRed;
  } else {
    throw std::runtime_error("scenario: unknown light state " + light);
  }

  const json& lg = j.at("lane_graph");
  for (const auto& jl : lg.at("lanes")) {
    Lane lane;
    lane.id = jl.at("id").get<int>();
    for (const auto& p : jl.at("centerline")) {
      lane.centerline.push_back(PointFromJson(p));
    }
    if (lane.centerline.size() < 2) {
      throw std::runtime_error("scenario: lane centerline needs 2+ points");
    }
    if (jl.contains("successors")) {
      for (const auto& s : jl.at("successors")) {
        lane.successors.push_back(s.get<int>());
      }
    }
    lane.left_neighbor = jl.value("left", -1);
    lane.right_neighbor = jl.value("right", -1);
    lane.speed_limit = jl.value("speed_limit", 8.0);
    scenario.lane_graph.lanes.push_back(std::move(lane));
  }
  if (scenario.lane_graph.lanes.empty()) {
    throw std::runtime_error("scenario: empty lane graph");
  }
  for (const Lane& lane : scenario.lane_graph.lanes) {
    for (int succ : lane.successors) {
      if (scenario.lane_graph.FindLane(succ) == nullptr) {
        throw std::runtime_error("scenario: dangling successor lane id");
      }
    }
  }
  if (lg.contains("drivable")) {
    for (const auto& poly : lg.at("drivable")) {
      scenario.lane_graph.drivable.push_back(PolygonFromJson(poly));
    }
  }
  if (lg.contains("intersections")) {
    for (const auto& poly : lg.at("intersections")) {
      scenario.lane_graph.intersections.push_back(PolygonFromJson(poly));
    }
  }

  for (const auto& row : j.at("expert")) {
    if (row.size() != 7) {
      throw std::runtime_error("scenario: expert state must have 7 fields");
    }
    SdvState s;
    s.x = row.at(0).get<double>();
    s.y = row.at(1).get<double>();
    s.theta = row.at(2).get<double>();
    s.v = row.at(3).get<double>();
    s.a = row.at(4).get<double>();
    s.kappa = row.at(5).get<double>();
    s.kappa_rate = row.at(6).get<double>();
    scenario.expert.push_back(s);
  }
  if (static_cast<int>(scenario.expert.size()) < scenario.Ticks() + 1) {
    throw std::runtime_error("scenario: expert does not cover the duration");
  }

  if (j.contains("actors")) {
    for (const auto& ja : j.at("actors")) {
      ActorScript actor;
      actor.id = ja.value("id", 0);
      actor.cls = ActorClassFromName(ja.at("class").get<std::string>());
      actor.length = ja.value("length", 4.5);
      actor.width = ja.value("width", 1.9);
      actor.track = TrackFromJson(ja.at("track"));
      if (actor.track.back().t < scenario.duration_s - 1e-9) {
        throw std::runtime_error("scenario: actor track ends early");
      }
      if (ja.contains("branches")) {
        for (const auto& jb : ja.at("branches")) {
          ActorScript::Branch branch;
          branch.weight = jb.at("weight").get<double>();
          if (branch.weight <= 0.0) {
            throw std::runtime_error("scenario: branch weight must be > 0");
          }
          branch.track = TrackFromJson(jb.at("track"));
          actor.branches.push_back(std::move(branch));
        }
      }
      scenario.actors.push_back(std::move(actor));
    }
  }
  return scenario;
}

void SaveScenario(const std::string& path, const Scenario& scenario) {
  json j;
  j["name"] = scenario.name;
  j["duration_s"] = scenario.duration_s;
  j["tick_dt"] = scenario.tick_dt;
  j["command"] = {{"action", ActionName(scenario.command.action)},
                  {"distance_m", scenario.command.distance_m}};
  j["light"] = scenario.light == LightState::kRed ? "red" : "green";

  json lanes = json::array();
  for (const Lane& lane : scenario.lane_graph.lanes) {
    json jl;
    jl["id"] = lane.id;
    json centerline = json::array();
    for (const Vec2& p : lane.centerline) centerline.push_back(PointToJson(p));
    jl["centerline"] = centerline;
    jl["successors"] = lane.successors;
    jl["left"] = lane.left_neighbor;
    jl["right"] = lane.right_neighbor;
    jl["speed_limit"] = lane.speed_limit;
    lanes.push_back(jl);
  }
  json lg;
  lg["lanes"] = lanes;
  json drivable = json::array();
  for (const Polygon& poly : scenario.lane_graph.drivable) {
    drivable.push_back(PolygonToJson(poly));
  }
  lg["drivable"] = drivable;
  json intersections = json::array();
  for (const Polygon& poly : scenario.lane_graph.intersections) {
    intersections.push_back(PolygonToJson(poly));
  }
  lg["intersections"] = intersections;
  j["lane_graph"] = lg;

  json expert = json::array();
  for (const SdvState& s : scenario.expert) {
    expert.push_back(
        json::array({s.x, s.y, s.theta, s.v, s.a, s.kappa, s.kappa_rate}));
  }
  j["expert"] = expert;

  json actors = json::array();
  for (const ActorScript& actor : scenario.actors) {
    json ja;
    ja["id"] = actor.id;
    ja["class"] = ActorClassName(actor.cls);
    ja["length"] = actor.length;
    ja["width"] = actor.width;
    ja["track"] = TrackToJson(actor.track);
    if (!actor.branches.empty()) {
      json branches = json::array();
      for (const auto& branch : actor.branches) {
        branches.push_back(
            {{"weight", branch.weight}, {"track", TrackToJson(branch.track)}});
      }
      ja["branches"] = branches;
    }
    actors.push_back(ja);
  }
  j["actors"] = actors;

  std::ofstream os(path);
  if (!os) throw std::runtime_error("SaveScenario: cannot open " + path);
  os << j.dump(1) << "\n";
}

std::vector<Scenario> LoadScenarioDir(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Scenario> scenarios;
  for (const std::string& path : paths) {
    scenarios.push_back(LoadScenario(path));
  }
  return scenarios;
}

}  // namespace bevplan
