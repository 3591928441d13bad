#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "specrecov/config.hpp"
#include "specrecov/detect.hpp"
#include "specrecov/nav.hpp"
#include "specrecov/policy.hpp"
#include "specrecov/reconstruct.hpp"
#include "specrecov/reward.hpp"
#include "specrecov/sensors.hpp"
#include "specrecov/stl.hpp"
#include "specrecov/vehicle.hpp"

namespace specrecov {

struct StepLog {
  double t = 0;
  VehicleState truth;
  VehicleState est;        // estimate the controller acted on
  SensorFrame frame;
  ActuatorSetpoint cmd;
  double reward = 0;
  std::vector<double> margins;
  bool alarm = false;
  bool recovery_active = false;
  int action = -1;         // recovery action index, -1 = tracker
};

struct EpisodeRecord {
  std::string scenario_id;
  std::uint64_t seed = 0;
  RecoveryMode recovery = RecoveryMode::none;
  std::vector<StepLog> steps;
  std::vector<SpecStatus> statuses;
  MissionVerdict verdict;
  std::optional<AttackScript> script;

  double completion_t = -1;   // mission completion time; -1 = never completed
  double final_error = std::numeric_limits<double>::infinity();
  bool crash = false;
  bool stall = false;
  bool reconstruction_expired = false;
  bool alarm_occurred = false;
  double first_alarm_t = -1;
  double t2r = -1;            // time to recovery; -1 = none/not recovered
  double mean_reward = 0;

  bool attacked() const { return script.has_value(); }
  bool completed() const { return completion_t >= 0; }
  bool success(double radius_m = 5.0) const {
    return completed() && final_error < radius_m && !crash && !stall;
  }
};

// Per-step policy hooks for the trainers: pick the action from the input
// vector (with the tracker's preferred discrete action available as a
// guidance hint), and observe the resulting transition reward.
struct MissionCallbacks {
  std::function<RecoveryAction(const std::vector<double>&, int guide,
                               int num_actions)>
      choose_action;
  std::function<void(const std::vector<double>&, RecoveryAction, double)>
      on_transition;
};

inline constexpr int kBaseInputWidth = 12;
inline constexpr int kExtendedInputWidth = 24;

// Policy input vector: the 12 estimated state components, optionally extended
// with 12 mission-reference deltas.
inline std::vector<double> policy_input(const VehicleState& est,
                                        const Environment& env,
                                        std::size_t wp_index, int width,
                                        double t, double timeout_s) {
  const auto comps = state_to_array(est);
  std::vector<double> x(comps.begin(), comps.end());
  if (width == kBaseInputWidth) return x;
  if (width != kExtendedInputWidth)
    throw Error(ErrorCode::config, "unsupported policy input width");
  const auto& w =
      env.waypoints[std::min(wp_index, env.waypoints.size() - 1)];
  const double ex = w.x - est.x, ey = w.y - est.y, ez = w.z - est.z;
  const double dist = std::hypot(ex, ey);
  const double bearing = std::atan2(ey, ex);
  const double rel = wrap_angle(bearing - est.yaw);
  x.push_back(ex);
  x.push_back(ey);
  x.push_back(ez);
  x.push_back(dist);
  x.push_back(std::cos(rel));
  x.push_back(std::sin(rel));
  x.push_back(env.path_deviation(est));
  x.push_back(env.obstacle_distance(est));
  x.push_back(env.horizontal_fence_margin(est));
  x.push_back(env.vertical_fence_margin(est));
  x.push_back(est.speed_xy());
  x.push_back(timeout_s > 0 ? t / timeout_s : 0.0);
  return x;
}

// Per-spec sigmoid steepness: gentle slope for the long-range waypoint
// distances, configured slope elsewhere.
inline std::vector<RewardShape> scenario_shapes(const std::vector<StlSpec>& specs,
                                                const ScenarioConfig& cfg) {
  std::vector<RewardShape> shapes;
  shapes.reserve(specs.size());
  for (const auto& s : specs) {
    const bool waypoint = s.condition == "dist_to_waypoint";
    shapes.push_back(
        shape_for_spec(s, waypoint ? cfg.waypoint_sigmoid_k : cfg.sigmoid_k));
  }
  return shapes;
}

namespace detail {

// One-step lookahead rewards per action, on a noise-free copy of the
// dynamics so selection is deterministic.
inline std::vector<double> lookahead_rewards(
    const VehicleState& est, const ScenarioConfig& cfg, const Environment& env,
    const std::vector<StlSpec>& specs, const std::vector<RewardShape>& shapes,
    int num_actions, const std::vector<SpecStatus>* statuses = nullptr) {
  VehicleProfile quiet = cfg.vehicle;
  quiet.vel_noise_mag = 0;
  std::vector<double> rewards(static_cast<size_t>(num_actions), 0.0);
  for (int a = 0; a < num_actions; ++a) {
    Rng dummy(0);
    const auto sp =
        action_to_setpoint(static_cast<RecoveryAction>(a), est, quiet);
    const auto next = step_dynamics(est, sp, quiet, dummy);
    const auto evals = evaluate_specs(specs, next, env, statuses);
    rewards[static_cast<size_t>(a)] = cumulative_reward(specs, evals, shapes);
  }
  return rewards;
}

// Action values r + gamma * V(next input) per candidate action. The learned
// value head carries long-range mission progress that the piecewise reward
// saturates away, so greedy selection over these navigates while the
// immediate reward keeps the hard constraints in view.
inline std::vector<double> lookahead_values(
    const PolicyParams& policy, const VehicleState& est,
    const ScenarioConfig& cfg, const Environment& env,
    const std::vector<StlSpec>& specs, const std::vector<RewardShape>& shapes,
    int num_actions, const std::vector<SpecStatus>* statuses,
    std::size_t wp_index, double t) {
  VehicleProfile quiet = cfg.vehicle;
  quiet.vel_noise_mag = 0;
  std::vector<double> values(static_cast<size_t>(num_actions), 0.0);
  for (int a = 0; a < num_actions; ++a) {
    Rng dummy(0);
    const auto sp =
        action_to_setpoint(static_cast<RecoveryAction>(a), est, quiet);
    const auto next = step_dynamics(est, sp, quiet, dummy);
    const auto evals = evaluate_specs(specs, next, env, statuses);
    const double r = cumulative_reward(specs, evals, shapes);
    const auto next_input = policy_input(next, env, wp_index,
                                         cfg.policy_input_width, t + quiet.dt,
                                         cfg.mission_timeout_s);
    values[static_cast<size_t>(a)] =
        r + cfg.gamma * state_value(policy, next_input);
  }
  return values;
}

// Worst signed critical-spec margin after one quiet step, per candidate
// action. Recovery gives the hard constraints priority: near a limit the
// candidate set is cut to the actions that keep these margins highest
// before the probability-weighted selection runs.
inline std::vector<double> critical_margins(
    const VehicleState& est, const ScenarioConfig& cfg, const Environment& env,
    const std::vector<StlSpec>& specs, int num_actions,
    const std::vector<SpecStatus>* statuses = nullptr) {
  VehicleProfile quiet = cfg.vehicle;
  quiet.vel_noise_mag = 0;
  std::vector<double> margins(static_cast<size_t>(num_actions), 0.0);
  for (int a = 0; a < num_actions; ++a) {
    Rng dummy(0);
    const auto sp =
        action_to_setpoint(static_cast<RecoveryAction>(a), est, quiet);
    const auto next = step_dynamics(est, sp, quiet, dummy);
    const auto evals = evaluate_specs(specs, next, env, statuses);
    double worst = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < specs.size(); ++i) {
      if (!specs[i].critical || !evals[i].active) continue;
      const double f = std::min(evals[i].f, evals[i].f2);
      worst = std::min(worst, specs[i].margin(f));
    }
    margins[static_cast<size_t>(a)] = worst;
  }
  return margins;
}

// Probability-times-value argmax restricted to the actions whose one-step
// critical margin stays above the safety buffer (or, when none can, to the
// actions tied with the best attainable margin).
inline RecoveryAction act_weighted_safe(const PolicyParams& policy,
                                        const std::vector<double>& input,
                                        const std::vector<double>& values,
                                        const std::vector<double>& margins,
                                        double buffer) {
  const auto probs = action_probabilities(policy, input);
  const std::size_t n =
      std::min({probs.size(), values.size(), margins.size()});
  double best_margin = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    best_margin = std::max(best_margin, margins[i]);
  const double floor = std::min(buffer, best_margin) - 1e-12;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (margins[i] < floor) continue;
    const double score = probs[i] * values[i];
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return static_cast<RecoveryAction>(best);
}

// Discrete action whose body-frame direction dominates the tracker's
// command; used as an imitation hint for guided rollout exploration.
inline int guide_action(const TrackerCmd& c, int num_actions) {
  const double ax = std::abs(c.bx), ay = std::abs(c.by), az = std::abs(c.bz);
  if (num_actions > 4 && az > ax && az > ay)
    return c.bz >= 0 ? static_cast<int>(RecoveryAction::pos_z)
                     : static_cast<int>(RecoveryAction::neg_z);
  if (ay > ax)
    return c.by >= 0 ? static_cast<int>(RecoveryAction::pos_y)
                     : static_cast<int>(RecoveryAction::neg_y);
  return c.bx >= 0 ? static_cast<int>(RecoveryAction::pos_x)
                   : static_cast<int>(RecoveryAction::neg_x);
}

}  // namespace detail

// Execute one full mission. Deterministic given (cfg, policy, script,
// callbacks): all stochasticity flows from cfg.seed.
inline EpisodeRecord run_mission(const ScenarioConfig& cfg,
                                 const PolicyParams* policy = nullptr,
                                 const AttackScript* script_override = nullptr,
                                 const MissionCallbacks* callbacks = nullptr,
                                 bool log_steps = true) {
  if ((cfg.recovery == RecoveryMode::reactive ||
       cfg.recovery == RecoveryMode::proactive ||
       cfg.recovery == RecoveryMode::no_sr) &&
      policy == nullptr && (callbacks == nullptr || !callbacks->choose_action))
    throw Error(ErrorCode::config, "recovery mode requires a policy");

  Rng root(cfg.seed);
  Rng env_rng = root.fork(1);
  Rng dyn_rng = root.fork(2);
  Rng sensor_rng = root.fork(3);
  Rng jitter_rng = root.fork(4);

  const Environment env = build_environment(cfg, env_rng);
  const bool rover = cfg.vehicle.kind == VehicleKind::rover;
  const auto specs = rover ? rover_catalog(env.waypoints, cfg.catalog)
                           : quadcopter_catalog(env.waypoints, cfg.catalog);
  const auto shapes = scenario_shapes(specs, cfg);
  const int num_actions = rover ? kNumPlanarActions : kNumActions;

  SensorProfile sensors = cfg.sensors;
  sensors.flow_scale = 1.0 + jitter_rng.sym_uniform(cfg.flow_scale_jitter);

  std::optional<AttackScript> script;
  if (script_override != nullptr) script = *script_override;
  else if (cfg.attack_source == AttackSource::script) script = cfg.script;
  if (script) validate_script(*script, cfg.sensors, cfg.vehicle.dt,
                              cfg.detector_multiplier);

  EpisodeRecord rec;
  rec.scenario_id = cfg.id;
  rec.seed = cfg.seed;
  rec.recovery = cfg.recovery;
  rec.script = script;

  VehicleState truth;
  truth.x = env.start_x;
  truth.y = env.start_y;
  truth.z = env.start_z;

  NavFilter nav(cfg.nav);
  WaypointTracker tracker(cfg.tracker);

  // Training-time spawn scatter: start somewhere along the mission path with
  // lateral/vertical offsets and a random heading, targeting the matching
  // waypoint. The relative-delta policy inputs make homing behavior learned
  // from scattered spawns generalize to the nominal start.
  if (cfg.spawn_randomization && !env.waypoints.empty()) {
    Rng spawn_rng = root.fork(5);
    const std::size_t j = spawn_rng.uniform_index(env.waypoints.size());
    const auto& w = env.waypoints[j];
    const double px = j == 0 ? env.start_x : env.waypoints[j - 1].x;
    const double py = j == 0 ? env.start_y : env.waypoints[j - 1].y;
    const double u = spawn_rng.uniform01();
    truth.x = px + u * (w.x - px) + spawn_rng.sym_uniform(6.0);
    truth.y = py + u * (w.y - py) + spawn_rng.sym_uniform(6.0);
    truth.z = cfg.cruise_alt_m + spawn_rng.sym_uniform(3.0);
    truth.yaw = spawn_rng.sym_uniform(M_PI);
    tracker.set_index(j);
  }
  nav.reset(truth);
  ResidualDetector residual(cfg.sensors, cfg.detector_multiplier,
                            cfg.detector_window);
  Checkpoint checkpoint(cfg.checkpoint_window);
  EstimatorModel model;
  RedundantReconstructor redundancy;
  std::vector<ActuatorSetpoint> cmds_since_alarm;
  std::vector<VehicleState> est_since_alarm;
  bool prev_alarm = false;

  const double dt = cfg.vehicle.dt;
  const int max_steps = static_cast<int>(cfg.mission_timeout_s / dt);
  const bool use_reconstruction = cfg.recovery == RecoveryMode::reactive ||
                                  cfg.recovery == RecoveryMode::proactive ||
                                  cfg.recovery == RecoveryMode::no_rcp;
  const Waypoint& goal = env.waypoints.back();

  double reward_sum = 0;
  double best_goal_dist = std::numeric_limits<double>::infinity();
  double last_progress_t = 0;
  VehicleState prev_truth = truth;
  VehicleState prev_est = truth;
  ActuatorSetpoint last_cmd;

  for (int step = 0; step < max_steps; ++step) {
    const double t = truth.t;

    SensorFrame frame = sample_sensors(truth, sensors, sensor_rng,
                                       step > 0 ? &prev_truth : nullptr);
    if (script) frame = inject_attack(frame, *script, t, dt);

    prev_est = nav.estimate();
    nav.step(frame, dt);
    VehicleState est = nav.estimate();

    // Detection.
    DetectorEvent ev;
    if (script && cfg.detector == DetectorMode::oracle) {
      ev = oracle_detect(*script, t, cfg.oracle_delay_s);
    } else if (cfg.detector == DetectorMode::residual) {
      const VehicleState predicted = predict_fallback(prev_est, last_cmd, dt);
      const double expected_yaw_rate = wrap_angle(predicted.yaw - prev_est.yaw) / dt;
      ev = residual.step(frame, predicted, expected_yaw_rate, t);
    }
    if (ev.alarm && !rec.alarm_occurred) {
      rec.alarm_occurred = true;
      rec.first_alarm_t = t;
    }

    // Reconstruction across the alarm window.
    if (ev.alarm && use_reconstruction && ev.diagnosed) {
      if (!prev_alarm) {
        cmds_since_alarm.clear();
        est_since_alarm.clear();
        // The checkpoint tail recorded between attack onset and the alarm is
        // already poisoned; purge it back past the detection latency and
        // replay its commands through the reconstruction rollout instead.
        const double rollback =
            cfg.detector == DetectorMode::oracle
                ? cfg.oracle_delay_s + dt
                : cfg.detector_window * dt + dt;
        const auto dropped = checkpoint.drop_after(t - rollback);
        try {
          model = fit_estimator(checkpoint, cfg.estimator_min_entries);
        } catch (const Error&) {
          model = EstimatorModel{};
          model.dt = dt;
          model.fitted = true;
          model.fallback = true;  // dead reckoning until enough history
        }
        redundancy.arm(checkpoint.empty() ? est : checkpoint.back().state);
        for (const auto& d : dropped) {
          cmds_since_alarm.push_back(d.command);
          est_since_alarm.push_back(d.state);
        }
      }
      est_since_alarm.push_back(est);
      try {
        if (*ev.diagnosed == SensorChannel::gps)
          est = reconstruct_state(model, checkpoint, *ev.diagnosed,
                                  cmds_since_alarm, est, est_since_alarm,
                                  cfg.reconstruction_horizon);
        else
          est = redundancy.apply(*ev.diagnosed, frame, est, dt);
        // A poorly conditioned fit can roll out to divergent values; keep
        // the estimate inside physically plausible bounds.
        const double pos_cap = 10.0 * cfg.corridor_length_m;
        const double vel_cap = 3.0 * cfg.vehicle.max_speed;
        const double acc_cap = 3.0 * cfg.vehicle.max_accel;
        auto cap = [](double v, double b) {
          if (!std::isfinite(v)) return 0.0;
          return std::clamp(v, -b, b);
        };
        est.x = cap(est.x, pos_cap);
        est.y = cap(est.y, pos_cap);
        est.z = cap(est.z, pos_cap);
        est.vx = cap(est.vx, vel_cap);
        est.vy = cap(est.vy, vel_cap);
        est.vz = cap(est.vz, vel_cap);
        est.ax = cap(est.ax, acc_cap);
        est.ay = cap(est.ay, acc_cap);
        est.az = cap(est.az, acc_cap);
        est.roll = wrap_angle(cap(est.roll, 10.0));
        est.pitch = wrap_angle(cap(est.pitch, 10.0));
        est.yaw = wrap_angle(cap(est.yaw, 10.0));
        nav.set_estimate(est);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::reconstruction_expired) {
          rec.reconstruction_expired = true;
          rec.stall = true;
          break;
        }
        throw;
      }
    }
    if (!ev.alarm && prev_alarm) {
      cmds_since_alarm.clear();
      est_since_alarm.clear();
    }

    // Recovery switch.
    const bool recovery_active =
        cfg.recovery == RecoveryMode::proactive ||
        ((cfg.recovery == RecoveryMode::reactive ||
          cfg.recovery == RecoveryMode::no_sr) &&
         ev.alarm);

    // Commands are computed in the controller's estimated frame but executed
    // through the vehicle's real attitude; the yaw-estimate error rotates the
    // executed motion.
    auto misalign = [&](ActuatorSetpoint s) {
      const double e = wrap_angle(truth.yaw - est.yaw);
      const double c = std::cos(e), sn = std::sin(e);
      const double vx = s.vx * c - s.vy * sn;
      const double vy = s.vx * sn + s.vy * c;
      s.vx = vx;
      s.vy = vy;
      if (vx != 0.0 || vy != 0.0) s.yaw = std::atan2(vy, vx);
      return s;
    };

    ActuatorSetpoint sp;
    int action = -1;
    std::vector<double> input;
    tracker.advance(est, env);
    // Under an active alarm the recovery target is the earliest waypoint
    // spec whose window is still open but unsatisfied: a corrupted estimate
    // can advance the tracker past a waypoint the vehicle never actually
    // reached, and only the monitor knows the difference.
    std::size_t target_wp = tracker.current_waypoint();
    if (ev.alarm) {
      for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].op != TemporalOp::eventually ||
            specs[i].waypoint_index < 0)
          continue;
        if (i < rec.statuses.size() && rec.statuses[i].satisfied_once)
          continue;
        if (specs[i].t_hi > 0 && t > specs[i].t_hi) continue;
        target_wp = std::min(
            target_wp, static_cast<std::size_t>(specs[i].waypoint_index));
      }
    }
    if (recovery_active) {
      input = policy_input(est, env, target_wp, cfg.policy_input_width, t,
                           cfg.mission_timeout_s);
      RecoveryAction a;
      if (callbacks && callbacks->choose_action) {
        const int guide =
            detail::guide_action(tracker.command(est, env), num_actions);
        a = callbacks->choose_action(input, guide, num_actions);
      } else if (cfg.eq_literal_selection) {
        const auto values = detail::lookahead_values(
            *policy, est, cfg, env, specs, shapes, num_actions, &rec.statuses,
            target_wp, t);
        const auto margins = detail::critical_margins(
            est, cfg, env, specs, num_actions, &rec.statuses);
        a = detail::act_weighted_safe(*policy, input, values, margins,
                                      cfg.critical_margin_buffer_m);
      } else {
        Rng unused(0);
        a = act(*policy, input, false, unused, num_actions);
      }
      action = static_cast<int>(a);
      sp = misalign(action_to_setpoint(a, est, cfg.vehicle));
    } else {
      const TrackerCmd c = tracker.command(est, env);
      sp = misalign(body_to_earth_setpoint(c.bx, c.by, c.bz, est, cfg.vehicle));
    }

    prev_truth = truth;
    truth = step_dynamics(truth, sp, cfg.vehicle, dyn_rng);
    last_cmd = sp;
    if (ev.alarm) cmds_since_alarm.push_back(sp);
    checkpoint.push({t, est, frame, sp}, ev.alarm);
    prev_alarm = ev.alarm;

    // Monitoring happens on the true state; rewards on the estimate the
    // controller can see.
    monitor_step(rec.statuses, specs, truth, env, truth.t);
    VehicleState reward_est = nav.estimate();
    reward_est.t = truth.t;
    const auto evals = evaluate_specs(specs, reward_est, env, &rec.statuses);
    const double reward = cfg.binary_reward
                              ? binary_reward(specs, evals)
                              : cumulative_reward(specs, evals, shapes);
    reward_sum += reward;
    if (recovery_active && callbacks && callbacks->on_transition)
      callbacks->on_transition(input, static_cast<RecoveryAction>(
                                          action < 0 ? 0 : action),
                               reward);

    if (log_steps) {
      StepLog log;
      log.t = truth.t;
      log.truth = truth;
      log.est = nav.estimate();
      log.frame = frame;
      log.cmd = sp;
      log.reward = reward;
      log.alarm = ev.alarm;
      log.recovery_active = recovery_active;
      log.action = action;
      log.margins.reserve(specs.size());
      for (const auto& st : rec.statuses) log.margins.push_back(st.margin);
      rec.steps.push_back(std::move(log));
    }

    // Time to recovery: estimate error back under 1 m after the alarm.
    if (rec.alarm_occurred && rec.t2r < 0 && truth.t > rec.first_alarm_t) {
      const auto& e = nav.estimate();
      if (std::hypot(e.x - truth.x, e.y - truth.y) < 1.0 && !ev.alarm)
        rec.t2r = truth.t - rec.first_alarm_t;
    }

    // Crash: obstacle intersection or ground contact above the landing-speed
    // limit (quadcopter only).
    if (env.obstacle_distance(truth) <= 0) {
      rec.crash = true;
      break;
    }
    if (!rover && truth.z <= 0 &&
        std::abs(truth.vz) > cfg.catalog.landing_speed_mps) {
      rec.crash = true;
      break;
    }

    // Completion / stall.
    const double goal_dist =
        std::hypot(truth.x - goal.x, truth.y - goal.y);
    if (goal_dist < best_goal_dist - 0.5) {
      best_goal_dist = goal_dist;
      last_progress_t = truth.t;
    }
    if (goal_dist < cfg.catalog.waypoint_radius_m) {
      rec.completion_t = truth.t;
      rec.final_error = env.dist_to_waypoint(
          truth, static_cast<int>(env.waypoints.size()) - 1);
      break;
    }
    if (truth.t - last_progress_t > cfg.stall_timeout_s) {
      rec.stall = true;
      break;
    }
  }

  if (!rec.completed())
    rec.final_error =
        env.dist_to_waypoint(truth, static_cast<int>(env.waypoints.size()) - 1);
  rec.verdict = mission_verdict(rec.statuses, specs);
  const long n = std::max<long>(1, static_cast<long>(
      log_steps ? rec.steps.size() : max_steps));
  rec.mean_reward = reward_sum / static_cast<double>(
      log_steps ? std::max<std::size_t>(1, rec.steps.size()) : n);
  return rec;
}

// --- serialization ----------------------------------------------------------

inline nlohmann::json step_to_json(const StepLog& s) {
  auto state_json = [](const VehicleState& v) {
    return nlohmann::json::array({v.x, v.y, v.z, v.vx, v.vy, v.vz, v.ax, v.ay,
                                  v.az, v.roll, v.pitch, v.yaw});
  };
  return {{"t", s.t},
          {"truth", state_json(s.truth)},
          {"est", state_json(s.est)},
          {"frame",
           {s.frame.gps_x, s.frame.gps_y, s.frame.gps_z, s.frame.gyro_roll,
            s.frame.gyro_pitch, s.frame.gyro_yaw, s.frame.accel_x,
            s.frame.accel_y, s.frame.accel_z, s.frame.mag_heading,
            s.frame.baro_alt, s.frame.flow_x, s.frame.flow_y}},
          {"cmd", {s.cmd.vx, s.cmd.vy, s.cmd.vz, s.cmd.roll, s.cmd.pitch, s.cmd.yaw}},
          {"reward", s.reward},
          {"margins", s.margins},
          {"alarm", s.alarm},
          {"recovery", s.recovery_active},
          {"action", s.action}};
}

inline void write_episode_jsonl(std::ostream& out, const EpisodeRecord& r) {
  nlohmann::json head = {{"scenario", r.scenario_id},
                         {"seed", r.seed},
                         {"recovery", recovery_mode_name(r.recovery)},
                         {"compliant", r.verdict.compliant},
                         {"violated", r.verdict.violated_ids},
                         {"completion_t", r.completion_t},
                         {"final_error_m", r.final_error},
                         {"crash", r.crash},
                         {"stall", r.stall},
                         {"alarm_t", r.first_alarm_t},
                         {"t2r", r.t2r},
                         {"mean_reward", r.mean_reward}};
  if (r.script) head["script"] = *r.script;
  out << head.dump() << "\n";
  for (const auto& s : r.steps) out << step_to_json(s).dump() << "\n";
}

inline std::string episode_csv_header() {
  return "scenario,seed,recovery,compliant,violated,success,t2r,"
         "completion_t,final_error_m,crash,stall,mean_reward";
}

inline std::string episode_csv_row(const EpisodeRecord& r) {
  std::ostringstream os;
  os << r.scenario_id << ',' << r.seed << ','
     << recovery_mode_name(r.recovery) << ',' << (r.verdict.compliant ? 1 : 0)
     << ',';
  for (std::size_t i = 0; i < r.verdict.violated_ids.size(); ++i)
    os << (i ? ";" : "") << r.verdict.violated_ids[i];
  os << ',' << (r.success() ? 1 : 0) << ',' << r.t2r << ',' << r.completion_t
     << ',' << r.final_error << ',' << (r.crash ? 1 : 0) << ','
     << (r.stall ? 1 : 0) << ',' << r.mean_reward;
  return os.str();
}

}  // namespace specrecov
