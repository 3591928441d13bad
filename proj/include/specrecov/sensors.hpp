#pragma once

#include <array>
#include <cmath>
#include <string>

#include "specrecov/error.hpp"
#include "specrecov/rng.hpp"
#include "specrecov/vehicle.hpp"

namespace specrecov {

enum class SensorChannel {
  gps = 0,
  gyroscope,
  accelerometer,
  magnetometer,
  barometer,
  optical_flow,
};
inline constexpr int kNumSensors = 6;

inline const char* sensor_name(SensorChannel c) {
  switch (c) {
    case SensorChannel::gps: return "gps";
    case SensorChannel::gyroscope: return "gyroscope";
    case SensorChannel::accelerometer: return "accelerometer";
    case SensorChannel::magnetometer: return "magnetometer";
    case SensorChannel::barometer: return "barometer";
    case SensorChannel::optical_flow: return "optical_flow";
  }
  return "?";
}

// Optical flow is reported in px/frame; the simulated camera geometry maps
// 1 px/frame to 1 m/s of horizontal velocity.
inline constexpr double kFlowPxPerMps = 1.0;
// Standard-atmosphere slope near ground: 0.1 kPa of pressure bias shifts the
// derived altitude by ~8.3 m.
inline constexpr double kAltMetersPerKpa = 83.0;

struct SensorFrame {
  double gps_x = 0, gps_y = 0, gps_z = 0;        // m
  double gyro_roll = 0, gyro_pitch = 0, gyro_yaw = 0;  // rad/s
  double accel_x = 0, accel_y = 0, accel_z = 0;  // m/s^2
  double mag_heading = 0;                        // rad
  double baro_alt = 0;                           // m, pressure-derived
  double flow_x = 0, flow_y = 0;                 // px/frame
  std::array<bool, kNumSensors> valid{true, true, true, true, true, true};
};

struct SensorProfile {
  double gps_sigma = 0.0;        // m
  double gyro_sigma = 0.0;       // rad/s
  double accel_sigma = 0.0;      // m/s^2
  double mag_sigma = 0.0;        // rad
  double baro_sigma = 0.0;       // m of derived altitude
  double flow_sigma = 0.0;       // px/frame
  double flow_speed_sigma = 0.0; // extra px/frame per m/s of speed
  double flow_scale = 1.0;       // per-episode calibration factor

  double sigma(SensorChannel c) const {
    switch (c) {
      case SensorChannel::gps: return gps_sigma;
      case SensorChannel::gyroscope: return gyro_sigma;
      case SensorChannel::accelerometer: return accel_sigma;
      case SensorChannel::magnetometer: return mag_sigma;
      case SensorChannel::barometer: return baro_sigma;
      case SensorChannel::optical_flow: return flow_sigma;
    }
    return 0.0;
  }
};

// Project the true state onto the six sensor channels with bounded zero-mean
// noise. Angular rates need the previous state; without it they read zero.
inline SensorFrame sample_sensors(const VehicleState& state,
                                  const SensorProfile& profile, Rng& rng,
                                  const VehicleState* prev = nullptr) {
  SensorFrame f;
  f.gps_x = state.x + rng.gaussian(0, profile.gps_sigma);
  f.gps_y = state.y + rng.gaussian(0, profile.gps_sigma);
  f.gps_z = state.z + rng.gaussian(0, profile.gps_sigma);

  if (prev != nullptr) {
    const double dt = state.t - prev->t;
    if (dt > 0) {
      f.gyro_roll = wrap_angle(state.roll - prev->roll) / dt;
      f.gyro_pitch = wrap_angle(state.pitch - prev->pitch) / dt;
      f.gyro_yaw = wrap_angle(state.yaw - prev->yaw) / dt;
    }
  }
  f.gyro_roll += rng.gaussian(0, profile.gyro_sigma);
  f.gyro_pitch += rng.gaussian(0, profile.gyro_sigma);
  f.gyro_yaw += rng.gaussian(0, profile.gyro_sigma);

  f.accel_x = state.ax + rng.gaussian(0, profile.accel_sigma);
  f.accel_y = state.ay + rng.gaussian(0, profile.accel_sigma);
  f.accel_z = state.az + rng.gaussian(0, profile.accel_sigma);

  f.mag_heading = wrap_angle(state.yaw + rng.gaussian(0, profile.mag_sigma));
  f.baro_alt = state.z + rng.gaussian(0, profile.baro_sigma);

  const double flow_noise =
      profile.flow_sigma + profile.flow_speed_sigma * state.speed_xy();
  f.flow_x = profile.flow_scale * state.vx * kFlowPxPerMps +
             rng.gaussian(0, flow_noise);
  f.flow_y = profile.flow_scale * state.vy * kFlowPxPerMps +
             rng.gaussian(0, flow_noise);
  return f;
}

enum class BiasPattern { constant, ramp_up, ramp_down };
enum class AttackClass { overt, stealthy };

struct AttackScript {
  SensorChannel target = SensorChannel::gps;
  BiasPattern pattern = BiasPattern::constant;
  double magnitude = 0;   // channel units: GPS m, flow px/frame, gyro rad,
                          // accel rad/s^2, magnetometer deg, barometer kPa
  double start_s = 0;
  double duration_s = 0;
  AttackClass attack_class = AttackClass::overt;
  int direction = 1;      // sign of the injected bias

  bool in_window(double t) const {
    return t >= start_s && t <= start_s + duration_s;
  }

  // Pattern envelope in the script's magnitude units; zero outside the window.
  double envelope(double t) const {
    if (!in_window(t) || duration_s <= 0) return in_window(t) ? magnitude : 0.0;
    const double frac = (t - start_s) / duration_s;
    switch (pattern) {
      case BiasPattern::constant: return magnitude;
      case BiasPattern::ramp_up: return magnitude * frac;
      case BiasPattern::ramp_down: return magnitude * (1.0 - frac);
    }
    return 0.0;
  }
};

struct MagnitudeRange {
  double lo, hi;
};

inline MagnitudeRange allowed_magnitude(SensorChannel c) {
  switch (c) {
    case SensorChannel::gps: return {1.0, 50.0};             // m
    case SensorChannel::optical_flow: return {1.0, 7.07};    // px/frame
    case SensorChannel::gyroscope: return {0.5, 9.47};       // rad (attitude)
    case SensorChannel::accelerometer: return {0.5, 6.2};    // rad/s^2
    case SensorChannel::magnetometer: return {90.0, 180.0};  // deg
    case SensorChannel::barometer: return {0.0, 0.1};        // kPa
  }
  return {0, 0};
}

inline void validate_script_magnitude(const AttackScript& s) {
  const auto r = allowed_magnitude(s.target);
  if (!(s.magnitude >= r.lo && s.magnitude <= r.hi) ||
      (s.target == SensorChannel::barometer && s.magnitude <= 0)) {
    throw Error(ErrorCode::invalid_script,
                std::string("bias magnitude out of range for ") +
                    sensor_name(s.target));
  }
}

// Additive bias injection y^a_t = y_t + b_t on the targeted channel only.
// Attitude-unit biases (gyroscope) are applied as the rate equivalent of the
// envelope so the integrated attitude error reaches the scripted magnitude;
// barometer bias is converted from kPa to derived-altitude meters.
inline SensorFrame inject_attack(const SensorFrame& frame,
                                 const AttackScript& script, double t,
                                 double dt = 0.1) {
  validate_script_magnitude(script);
  SensorFrame f = frame;
  if (!script.in_window(t)) return f;

  const double env = script.envelope(t) * script.direction;
  switch (script.target) {
    case SensorChannel::gps:
      f.gps_x += env;
      break;
    case SensorChannel::optical_flow:
      f.flow_x += env;
      break;
    case SensorChannel::magnetometer:
      f.mag_heading = wrap_angle(f.mag_heading + env * M_PI / 180.0);
      break;
    case SensorChannel::barometer:
      f.baro_alt += env * kAltMetersPerKpa;
      break;
    case SensorChannel::accelerometer:
      f.accel_x += env;
      break;
    case SensorChannel::gyroscope: {
      // Rate offset = discrete derivative of the attitude-bias envelope.
      const double t_prev = t - dt;
      const double prev_env =
          script.in_window(t_prev) ? script.envelope(t_prev) : 0.0;
      f.gyro_yaw += (env - prev_env * script.direction) / dt;
      break;
    }
  }
  return f;
}

// Peak injected bias on the first in-window step, in the channel's native
// units (rates for the gyroscope).
inline double first_step_bias(const AttackScript& script, double dt) {
  const double env = script.envelope(script.start_s + dt * 0.5);
  double first = env;
  if (script.pattern == BiasPattern::ramp_up && script.duration_s > 0)
    first = script.magnitude * dt / script.duration_s;
  if (script.target == SensorChannel::gyroscope) first /= dt;
  if (script.target == SensorChannel::magnetometer) first *= M_PI / 180.0;
  if (script.target == SensorChannel::barometer) first *= kAltMetersPerKpa;
  return std::abs(first);
}

// Largest per-step change of the injected bias, channel units.
inline double max_step_increment(const AttackScript& script, double dt) {
  double slope_step = 0;
  if (script.duration_s > 0)
    slope_step = std::abs(script.magnitude) * dt / script.duration_s;
  double onset = first_step_bias(script, dt);
  if (script.target == SensorChannel::gyroscope) {
    // Rate-channel injection: the increment is the rate offset itself.
    return onset;
  }
  double inc = slope_step;
  if (script.target == SensorChannel::magnetometer) inc *= M_PI / 180.0;
  if (script.target == SensorChannel::barometer) inc *= kAltMetersPerKpa;
  return std::max(onset, inc);
}

// Class consistency against the residual detector's alarm threshold
// (threshold_multiplier x per-channel sensor sigma). Checked at script load.
inline void validate_script(const AttackScript& script,
                            const SensorProfile& sensors, double dt,
                            double threshold_multiplier = 5.0) {
  validate_script_magnitude(script);
  if (script.duration_s <= 0)
    throw Error(ErrorCode::invalid_script, "non-positive attack duration");
  const double threshold = threshold_multiplier * sensors.sigma(script.target);
  if (script.attack_class == AttackClass::stealthy) {
    if (script.pattern == BiasPattern::constant)
      throw Error(ErrorCode::invalid_script,
                  "stealthy scripts must use ramp patterns");
    if (threshold > 0 && max_step_increment(script, dt) >= threshold)
      throw Error(ErrorCode::invalid_script,
                  "stealthy script exceeds per-step detector threshold");
  } else {
    if (threshold > 0 && first_step_bias(script, dt) < threshold)
      throw Error(ErrorCode::invalid_script,
                  "overt script starts below detector threshold");
  }
}

}  // namespace specrecov
