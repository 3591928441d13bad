#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "specrecov/error.hpp"
#include "specrecov/vehicle.hpp"

namespace specrecov {

enum class MissionPhase { takeoff = 0, cruise, landing };

struct Obstacle {
  double x = 0, y = 0, z = 0;
  double radius = 1.0;
  bool column = true;  // infinite vertical cylinder vs sphere

  double clearance(const VehicleState& s) const {
    if (column) return std::hypot(s.x - x, s.y - y) - radius;
    const double dx = s.x - x, dy = s.y - y, dz = s.z - z;
    return std::sqrt(dx * dx + dy * dy + dz * dz) - radius;
  }
};

struct Waypoint {
  double x = 0, y = 0, z = 0;
  double t_open = 0, t_close = 0;  // F-spec scope window, s
};

// Mission world: planned path (start -> waypoints), obstacle set, geofence.
struct Environment {
  std::vector<Obstacle> obstacles;
  std::vector<Waypoint> waypoints;
  double start_x = 0, start_y = 0, start_z = 0;
  double home_x = 0, home_y = 0;
  double geofence_ref_alt = 0;  // altitude the vertical fence margin is
                                // measured from
  double geofence_horizontal_m = 50.0;
  double geofence_vertical_m = 10.0;
  double loiter_x = 0, loiter_y = 0;
  MissionPhase phase = MissionPhase::cruise;

  double obstacle_distance(const VehicleState& s) const {
    double best = 1e6;
    for (const auto& o : obstacles) best = std::min(best, o.clearance(s));
    return best;
  }

  // xy distance from the planned polyline start -> w1 -> ... -> wn.
  double path_deviation(const VehicleState& s) const {
    if (waypoints.empty()) return std::hypot(s.x - start_x, s.y - start_y);
    double best = std::numeric_limits<double>::max();
    double px = start_x, py = start_y;
    for (const auto& w : waypoints) {
      best = std::min(best, point_segment_dist(s.x, s.y, px, py, w.x, w.y));
      px = w.x;
      py = w.y;
    }
    return best;
  }

  double dist_to_waypoint(const VehicleState& s, int index) const {
    if (index < 0 || index >= static_cast<int>(waypoints.size()))
      throw Error(ErrorCode::config, "waypoint index out of range");
    const auto& w = waypoints[static_cast<size_t>(index)];
    const double dx = s.x - w.x, dy = s.y - w.y, dz = s.z - w.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }

  double horizontal_fence_margin(const VehicleState& s) const {
    return geofence_horizontal_m - std::hypot(s.x - home_x, s.y - home_y);
  }

  double vertical_fence_margin(const VehicleState& s) const {
    return geofence_vertical_m - std::abs(s.z - geofence_ref_alt);
  }

  static double point_segment_dist(double px, double py, double ax, double ay,
                                   double bx, double by) {
    const double abx = bx - ax, aby = by - ay;
    const double len2 = abx * abx + aby * aby;
    double u = 0;
    if (len2 > 0) u = std::clamp(((px - ax) * abx + (py - ay) * aby) / len2, 0.0, 1.0);
    return std::hypot(px - (ax + u * abx), py - (ay + u * aby));
  }
};

enum class TemporalOp { always, eventually };
enum class Comparator { lt, gt, le, ge };

struct StlSpec {
  std::string id;
  TemporalOp op = TemporalOp::always;
  std::string condition;
  Comparator cmp = Comparator::gt;
  double param = 0;
  std::optional<double> t_lo, t_hi;  // scope window
  bool critical = false;
  int waypoint_index = -1;           // for dist_to_waypoint conditions
  std::optional<MissionPhase> phase; // phase gate; unset = always active
  double weight = 1.0;               // cumulative-reward weight

  bool in_scope(double t) const {
    if (t_lo && t < *t_lo) return false;
    if (t_hi && t > *t_hi) return false;
    return true;
  }

  bool active(MissionPhase p) const { return !phase || *phase == p; }

  bool holds(double f) const {
    switch (cmp) {
      case Comparator::lt: return f < param;
      case Comparator::gt: return f > param;
      case Comparator::le: return f <= param;
      case Comparator::ge: return f >= param;
    }
    return false;
  }

  // Signed margin, positive when the comparator holds.
  double margin(double f) const {
    return (cmp == Comparator::lt || cmp == Comparator::le) ? param - f
                                                            : f - param;
  }
};

// Real-valued condition evaluator; names mirror the autopilot APIs the specs
// are written against.
inline double evaluate_condition(const StlSpec& spec, const VehicleState& s,
                                 const Environment& env) {
  const std::string& c = spec.condition;
  if (c == "obstacle_distance") return env.obstacle_distance(s);
  if (c == "check_current_position") return env.path_deviation(s);
  if (c == "altitude") return s.z;
  if (c == "dist_to_waypoint") return env.dist_to_waypoint(s, spec.waypoint_index);
  if (c == "velocity_xy") return s.speed_xy();
  if (c == "velocity_z") return std::abs(s.vz);
  if (c == "climb_rate") return s.vz;
  if (c == "loiter_distance") return std::hypot(s.x - env.loiter_x, s.y - env.loiter_y);
  if (c == "geofence_margin")
    return std::min(env.horizontal_fence_margin(s), env.vertical_fence_margin(s));
  if (c == "geofence_margin_h") return env.horizontal_fence_margin(s);
  throw Error(ErrorCode::config, "unknown condition: " + c);
}

struct SpecStatus {
  double margin = 0;            // latest signed margin
  bool evaluated = false;       // condition evaluated at least once
  bool active_now = false;      // phase gate open at the latest step
  bool satisfied_now = false;
  bool violated_ever = false;   // G latch, monotone
  bool satisfied_once = false;  // F latch, monotone
  double first_violation_t = -1;
  double first_satisfaction_t = -1;
};

// Advance all spec statuses by one monitoring step at time t. Margins are
// recorded for the reward engine; G violations latch inside the scope window,
// F satisfactions latch inside the time bound.
inline void monitor_step(std::vector<SpecStatus>& statuses,
                         const std::vector<StlSpec>& specs,
                         const VehicleState& state, const Environment& env,
                         double t) {
  if (statuses.size() != specs.size())
    statuses.assign(specs.size(), SpecStatus{});
  for (size_t i = 0; i < specs.size(); ++i) {
    const StlSpec& spec = specs[i];
    SpecStatus& st = statuses[i];
    st.active_now = spec.active(env.phase);
    if (!st.active_now) continue;
    const double f = evaluate_condition(spec, state, env);
    st.margin = spec.margin(f);
    st.satisfied_now = spec.holds(f);
    st.evaluated = true;
    if (!spec.in_scope(t)) continue;
    if (spec.op == TemporalOp::always) {
      if (!st.satisfied_now && !st.violated_ever) {
        st.violated_ever = true;
        st.first_violation_t = t;
      }
    } else {
      if (st.satisfied_now && !st.satisfied_once) {
        st.satisfied_once = true;
        st.first_satisfaction_t = t;
      }
    }
  }
}

struct MissionVerdict {
  bool compliant = true;
  std::vector<std::string> violated_ids;
};

// Compliant iff no G-spec violated and every F-spec was satisfied within its
// bound (F-specs whose phase never became active are vacuously satisfied).
inline MissionVerdict mission_verdict(const std::vector<SpecStatus>& statuses,
                                      const std::vector<StlSpec>& specs) {
  MissionVerdict v;
  for (size_t i = 0; i < specs.size(); ++i) {
    const StlSpec& spec = specs[i];
    const SpecStatus& st = statuses[i];
    bool violated = false;
    if (spec.op == TemporalOp::always) {
      violated = st.violated_ever;
    } else {
      violated = st.evaluated ? !st.satisfied_once : false;
      if (!st.evaluated && !spec.phase) violated = true;  // bound elapsed unseen
    }
    if (violated) {
      v.compliant = false;
      v.violated_ids.push_back(spec.id);
    }
  }
  return v;
}

struct CatalogParams {
  double collision_clearance_m = 5.0;   // S1/S6
  double boundary_m = 10.0;             // S2
  double min_altitude_m = 10.0;         // S3
  double max_altitude_m = 20.0;         // S4
  double waypoint_radius_m = 5.0;       // S5
  double min_velocity_mps = 5.0;        // S7
  double max_velocity_mps = 12.0;       // S8
  double landing_speed_mps = 0.5;       // S9
  double takeoff_speed_mps = 2.0;       // S10
  double loiter_radius_m = 8.0;         // S11
  double geofence_margin_m = 1.0;       // S12
  double critical_weight = 2.0;
  double waypoint_weight = 1.0;   // mission-progress emphasis in the reward
  bool include_min_velocity = true;
};

// The 12-spec quadcopter catalog. S5 expands into one F-spec per waypoint
// with that waypoint's time window.
inline std::vector<StlSpec> quadcopter_catalog(
    const std::vector<Waypoint>& waypoints, const CatalogParams& p = {}) {
  std::vector<StlSpec> specs;
  auto add = [&](StlSpec s) {
    if (s.critical) s.weight = p.critical_weight;
    specs.push_back(std::move(s));
  };
  add({.id = "S1", .op = TemporalOp::always, .condition = "obstacle_distance",
       .cmp = Comparator::gt, .param = p.collision_clearance_m, .critical = true});
  add({.id = "S2", .op = TemporalOp::always, .condition = "check_current_position",
       .cmp = Comparator::lt, .param = p.boundary_m, .critical = true});
  add({.id = "S3", .op = TemporalOp::always, .condition = "altitude",
       .cmp = Comparator::gt, .param = p.min_altitude_m,
       .phase = MissionPhase::cruise});
  add({.id = "S4", .op = TemporalOp::always, .condition = "altitude",
       .cmp = Comparator::lt, .param = p.max_altitude_m,
       .phase = MissionPhase::cruise});
  for (size_t i = 0; i < waypoints.size(); ++i) {
    add({.id = "S5_w" + std::to_string(i + 1),
         .op = TemporalOp::eventually, .condition = "dist_to_waypoint",
         .cmp = Comparator::lt, .param = p.waypoint_radius_m,
         .t_lo = waypoints[i].t_open, .t_hi = waypoints[i].t_close,
         .waypoint_index = static_cast<int>(i),
         .weight = p.waypoint_weight});
  }
  add({.id = "S6", .op = TemporalOp::always, .condition = "obstacle_distance",
       .cmp = Comparator::gt, .param = p.collision_clearance_m});
  if (p.include_min_velocity) {
    add({.id = "S7", .op = TemporalOp::always, .condition = "velocity_xy",
         .cmp = Comparator::gt, .param = p.min_velocity_mps,
         .phase = MissionPhase::cruise});
  }
  add({.id = "S8", .op = TemporalOp::always, .condition = "velocity_xy",
       .cmp = Comparator::lt, .param = p.max_velocity_mps});
  add({.id = "S9", .op = TemporalOp::always, .condition = "velocity_z",
       .cmp = Comparator::le, .param = p.landing_speed_mps,
       .phase = MissionPhase::landing});
  add({.id = "S10", .op = TemporalOp::always, .condition = "climb_rate",
       .cmp = Comparator::ge, .param = p.takeoff_speed_mps,
       .phase = MissionPhase::takeoff});
  add({.id = "S11", .op = TemporalOp::always, .condition = "loiter_distance",
       .cmp = Comparator::lt, .param = p.loiter_radius_m,
       .phase = MissionPhase::landing});
  add({.id = "S12", .op = TemporalOp::always, .condition = "geofence_margin",
       .cmp = Comparator::gt, .param = p.geofence_margin_m, .critical = true});
  return specs;
}

// The 7-spec rover subset: no altitude, landing, takeoff, or loiter specs,
// single-factor geofence.
inline std::vector<StlSpec> rover_catalog(const std::vector<Waypoint>& waypoints,
                                          const CatalogParams& p = {}) {
  std::vector<StlSpec> specs;
  auto add = [&](StlSpec s) {
    if (s.critical) s.weight = p.critical_weight;
    specs.push_back(std::move(s));
  };
  add({.id = "S1", .op = TemporalOp::always, .condition = "obstacle_distance",
       .cmp = Comparator::gt, .param = p.collision_clearance_m, .critical = true});
  add({.id = "S2", .op = TemporalOp::always, .condition = "check_current_position",
       .cmp = Comparator::lt, .param = p.boundary_m, .critical = true});
  for (size_t i = 0; i < waypoints.size(); ++i) {
    add({.id = "S5_w" + std::to_string(i + 1),
         .op = TemporalOp::eventually, .condition = "dist_to_waypoint",
         .cmp = Comparator::lt, .param = p.waypoint_radius_m,
         .t_lo = waypoints[i].t_open, .t_hi = waypoints[i].t_close,
         .waypoint_index = static_cast<int>(i),
         .weight = p.waypoint_weight});
  }
  add({.id = "S6", .op = TemporalOp::always, .condition = "obstacle_distance",
       .cmp = Comparator::gt, .param = p.collision_clearance_m});
  if (p.include_min_velocity) {
    add({.id = "S7", .op = TemporalOp::always, .condition = "velocity_xy",
         .cmp = Comparator::gt, .param = p.min_velocity_mps,
         .phase = MissionPhase::cruise});
  }
  add({.id = "S8", .op = TemporalOp::always, .condition = "velocity_xy",
       .cmp = Comparator::lt, .param = p.max_velocity_mps});
  add({.id = "S12", .op = TemporalOp::always, .condition = "geofence_margin_h",
       .cmp = Comparator::gt, .param = p.geofence_margin_m, .critical = true});
  return specs;
}

}  // namespace specrecov
