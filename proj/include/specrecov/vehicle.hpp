#pragma once

#include <algorithm>
#include <cmath>

#include "specrecov/error.hpp"
#include "specrecov/rng.hpp"

namespace specrecov {

// Normalize an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

struct VehicleState {
  double x = 0, y = 0, z = 0;     // position, m
  double vx = 0, vy = 0, vz = 0;  // velocity, m/s
  double ax = 0, ay = 0, az = 0;  // acceleration, m/s^2
  double roll = 0, pitch = 0, yaw = 0;  // attitude, rad, wrapped to (-pi, pi]
  double t = 0;                   // s

  double speed_xy() const { return std::hypot(vx, vy); }
  bool finite() const {
    for (double v : {x, y, z, vx, vy, vz, ax, ay, az, roll, pitch, yaw, t})
      if (!std::isfinite(v)) return false;
    return true;
  }
};

struct ActuatorSetpoint {
  double vx = 0, vy = 0, vz = 0;        // earth-frame velocity setpoint, m/s
  double roll = 0, pitch = 0, yaw = 0;  // attitude setpoint, rad

  bool finite() const {
    for (double v : {vx, vy, vz, roll, pitch, yaw})
      if (!std::isfinite(v)) return false;
    return true;
  }
};

enum class VehicleKind { quadcopter, rover };

enum class RecoveryAction { pos_x = 0, neg_x, pos_y, neg_y, pos_z, neg_z };
inline constexpr int kNumActions = 6;
inline constexpr int kNumPlanarActions = 4;

struct VehicleProfile {
  VehicleKind kind = VehicleKind::quadcopter;
  double dt = 0.1;             // s
  double resolution = 0.5;     // movement resolution per action, m
  double max_speed = 12.0;     // m/s, 3D norm
  double max_accel = 10.0;     // m/s^2 per axis
  double lag_tau = 0.0;        // velocity setpoint lag time constant, s; <= dt tracks exactly
  double attitude_tau = 0.0;   // attitude setpoint lag, s
  double max_yaw_rate = M_PI;  // rover heading slew, rad/s
  double vel_noise_mag = 0.0;  // zero-mean uniform half-width per axis, m/s
  // Body->earth rotation sign convention for the second row. The default is
  // the standard rotation; the alternate mode negates the cosine term.
  bool alt_rotation_sign = false;
};

// One step of the discrete-time model: double integrator with first-order
// setpoint lag for the quadcopter, planar unicycle for the rover. Additive
// velocity noise lumps wind/drag/friction. Deterministic given `rng` state.
inline VehicleState step_dynamics(const VehicleState& state,
                                  const ActuatorSetpoint& sp,
                                  const VehicleProfile& profile, Rng& rng) {
  if (!sp.finite())
    throw Error(ErrorCode::rejected_input, "non-finite actuator setpoint");

  const double dt = profile.dt;
  const double alpha =
      profile.lag_tau <= dt ? 1.0 : dt / profile.lag_tau;
  const double beta =
      profile.attitude_tau <= dt ? 1.0 : dt / profile.attitude_tau;

  VehicleState next = state;
  next.t = state.t + dt;

  if (profile.kind == VehicleKind::quadcopter) {
    double v[3] = {state.vx, state.vy, state.vz};
    const double target[3] = {sp.vx, sp.vy, sp.vz};
    for (int i = 0; i < 3; ++i) {
      double dv = alpha * (target[i] - v[i]);
      const double dv_max = profile.max_accel * dt;
      dv = std::clamp(dv, -dv_max, dv_max);
      v[i] += dv;
    }
    if (profile.vel_noise_mag > 0) {
      for (double& vi : v) vi += rng.sym_uniform(profile.vel_noise_mag);
    }
    const double speed = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (speed > profile.max_speed) {
      const double s = profile.max_speed / speed;
      for (double& vi : v) vi *= s;
    }
    next.vx = v[0];
    next.vy = v[1];
    next.vz = v[2];
    next.ax = (next.vx - state.vx) / dt;
    next.ay = (next.vy - state.vy) / dt;
    next.az = (next.vz - state.vz) / dt;
    next.x = state.x + next.vx * dt;
    next.y = state.y + next.vy * dt;
    next.z = state.z + next.vz * dt;
    next.roll = wrap_angle(state.roll + beta * wrap_angle(sp.roll - state.roll));
    next.pitch =
        wrap_angle(state.pitch + beta * wrap_angle(sp.pitch - state.pitch));
    next.yaw = wrap_angle(state.yaw + beta * wrap_angle(sp.yaw - state.yaw));
  } else {
    // Rover: heading slews toward the setpoint yaw, speed tracks the planar
    // setpoint magnitude with the same lag, motion stays in the plane.
    double heading = state.yaw;
    const double yaw_err = wrap_angle(sp.yaw - heading);
    const double max_dyaw = profile.max_yaw_rate * dt;
    heading = wrap_angle(heading + std::clamp(yaw_err, -max_dyaw, max_dyaw));

    const double target_speed =
        std::min(std::hypot(sp.vx, sp.vy), profile.max_speed);
    double speed = state.speed_xy();
    double dv = alpha * (target_speed - speed);
    const double dv_max = profile.max_accel * dt;
    speed += std::clamp(dv, -dv_max, dv_max);
    speed = std::clamp(speed, 0.0, profile.max_speed);

    next.vx = speed * std::cos(heading);
    next.vy = speed * std::sin(heading);
    if (profile.vel_noise_mag > 0) {
      next.vx += rng.sym_uniform(profile.vel_noise_mag);
      next.vy += rng.sym_uniform(profile.vel_noise_mag);
    }
    next.ax = (next.vx - state.vx) / dt;
    next.ay = (next.vy - state.vy) / dt;
    next.x = state.x + next.vx * dt;
    next.y = state.y + next.vy * dt;
    next.yaw = heading;
    next.z = next.vz = next.az = 0;
    next.roll = next.pitch = 0;
  }
  return next;
}

namespace detail {

inline double safe_ratio(double num, double den) {
  if (den == 0.0) return num == 0.0 ? 0.0 : std::copysign(1.0, num);
  return num / den;
}

}  // namespace detail

// Translate a discrete trajectory-adjustment action into an earth-frame
// velocity setpoint: one movement resolution along the body axis per step,
// rotated through the current yaw, with yaw from arctan2 and pitch/roll from
// arcsine expressions over the current accelerations (arguments clamped).
inline ActuatorSetpoint action_to_setpoint(RecoveryAction action,
                                           const VehicleState& state,
                                           const VehicleProfile& profile) {
  if (profile.kind == VehicleKind::rover &&
      (action == RecoveryAction::pos_z || action == RecoveryAction::neg_z)) {
    throw Error(ErrorCode::unsupported_action,
                "rover profile does not support vertical actions");
  }

  const double v = profile.resolution / profile.dt;
  double bx = 0, by = 0, bz = 0;  // body-frame velocity
  switch (action) {
    case RecoveryAction::pos_x: bx = v; break;
    case RecoveryAction::neg_x: bx = -v; break;
    case RecoveryAction::pos_y: by = v; break;
    case RecoveryAction::neg_y: by = -v; break;
    case RecoveryAction::pos_z: bz = v; break;
    case RecoveryAction::neg_z: bz = -v; break;
  }

  const double c = std::cos(state.yaw);
  const double s = std::sin(state.yaw);
  ActuatorSetpoint sp;
  sp.vx = bx * c - by * s;
  sp.vy = profile.alt_rotation_sign ? bx * s - by * c : bx * s + by * c;
  sp.vz = bz;

  sp.yaw = (sp.vx == 0.0 && sp.vy == 0.0) ? state.yaw
                                          : std::atan2(sp.vy, sp.vx);

  const double ax2 = state.ax * state.ax;
  const double ay2 = state.ay * state.ay;
  const double az2 = state.az * state.az;
  const double theta_arg =
      detail::safe_ratio(ay2 + az2, std::sqrt(ax2 + ay2) + az2);
  const double phi_arg = detail::safe_ratio(ax2 + az2, state.ay);
  sp.pitch = std::asin(std::clamp(theta_arg, -1.0, 1.0));
  sp.roll = std::asin(std::clamp(phi_arg, -1.0, 1.0));
  return sp;
}

// Earth-frame setpoint from a body-frame velocity command; used by the
// nominal tracking controller whose actuation goes through the vehicle's
// actual attitude.
inline ActuatorSetpoint body_to_earth_setpoint(double bx, double by, double bz,
                                               const VehicleState& state,
                                               const VehicleProfile& profile) {
  const double c = std::cos(state.yaw);
  const double s = std::sin(state.yaw);
  ActuatorSetpoint sp;
  sp.vx = bx * c - by * s;
  sp.vy = profile.alt_rotation_sign ? bx * s - by * c : bx * s + by * c;
  sp.vz = bz;
  sp.yaw = (sp.vx == 0.0 && sp.vy == 0.0) ? state.yaw
                                          : std::atan2(sp.vy, sp.vx);
  return sp;
}

}  // namespace specrecov
