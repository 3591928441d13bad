#pragma once

#include <algorithm>
#include <cmath>

#include "specrecov/sensors.hpp"
#include "specrecov/stl.hpp"
#include "specrecov/vehicle.hpp"

namespace specrecov {

// Complementary-filter gains. Small blend values lean on dead reckoning
// (inertial integration), large values lean on the direct measurement.
struct NavParams {
  double gps_blend = 0.08;    // horizontal position correction per step
  double baro_blend = 0.25;   // altitude correction
  double baro_rate_blend = 0.3;
  double flow_blend = 0.06;   // horizontal velocity correction from flow
  double mag_blend = 0.03;    // heading correction
  double attitude_leak = 0.02;  // roll/pitch integration leak toward level
};

// Sensor-fusion state estimator: dead-reckons on the inertial channels and
// corrects with the absolute ones. Every channel feeds some estimated
// component, so a bias on any one of them steers the estimate.
class NavFilter {
public:
  explicit NavFilter(const NavParams& params = {}) : params_(params) {}

  void reset(const VehicleState& truth) {
    est_ = truth;
    prev_baro_ = truth.z;
    initialized_ = true;
  }

  bool initialized() const { return initialized_; }
  const VehicleState& estimate() const { return est_; }

  // Override selected components (selective state reconstruction output).
  void set_estimate(const VehicleState& est) { est_ = est; }

  void step(const SensorFrame& frame, double dt) {
    const NavParams& p = params_;

    // Attitude: integrate rates, lightly corrected (heading by the
    // magnetometer, roll/pitch leaked toward level).
    est_.yaw = wrap_angle(est_.yaw + frame.gyro_yaw * dt);
    est_.yaw = wrap_angle(est_.yaw +
                          p.mag_blend * wrap_angle(frame.mag_heading - est_.yaw));
    est_.roll = (1.0 - p.attitude_leak) * (est_.roll + frame.gyro_roll * dt);
    est_.pitch = (1.0 - p.attitude_leak) * (est_.pitch + frame.gyro_pitch * dt);

    // Horizontal velocity: accelerometer dead reckoning corrected by flow.
    est_.ax = frame.accel_x;
    est_.ay = frame.accel_y;
    est_.az = frame.accel_z;
    est_.vx = (1.0 - p.flow_blend) * (est_.vx + frame.accel_x * dt) +
              p.flow_blend * frame.flow_x / kFlowPxPerMps;
    est_.vy = (1.0 - p.flow_blend) * (est_.vy + frame.accel_y * dt) +
              p.flow_blend * frame.flow_y / kFlowPxPerMps;

    // Vertical: barometer-derived altitude and rate.
    const double baro_rate = (frame.baro_alt - prev_baro_) / dt;
    prev_baro_ = frame.baro_alt;
    est_.vz = (1.0 - p.baro_rate_blend) * (est_.vz + frame.accel_z * dt) +
              p.baro_rate_blend * baro_rate;
    est_.z = (1.0 - p.baro_blend) * (est_.z + est_.vz * dt) +
             p.baro_blend * frame.baro_alt;

    // Horizontal position: velocity integration corrected by GPS.
    est_.x = (1.0 - p.gps_blend) * (est_.x + est_.vx * dt) +
             p.gps_blend * frame.gps_x;
    est_.y = (1.0 - p.gps_blend) * (est_.y + est_.vy * dt) +
             p.gps_blend * frame.gps_y;

    est_.t += dt;
  }

private:
  NavParams params_;
  VehicleState est_;
  double prev_baro_ = 0;
  bool initialized_ = false;
};

struct TrackerParams {
  double kp = 0.8;            // position error gain, 1/s
  double kd = 0.5;            // velocity-estimate damping
  double kz = 1.0;            // altitude gain
  double cruise_speed = 8.0;  // commanded horizontal speed cap, m/s
  double min_speed = 6.0;     // floor while far from the waypoint, m/s
  double max_climb = 3.0;     // m/s
  double accept_radius = 4.0; // waypoint switch distance, m
};

// Body-frame velocity command.
struct TrackerCmd {
  double bx = 0, by = 0, bz = 0;
};

// Nominal mission controller: proportional waypoint pursuit with altitude
// hold. Commands are body frame, so they are actuated through the vehicle's
// real attitude while being computed from the estimated one.
class WaypointTracker {
public:
  explicit WaypointTracker(const TrackerParams& params = {}) : params_(params) {}

  std::size_t current_waypoint() const { return index_; }
  void set_index(std::size_t i) { index_ = i; }
  bool finished(const Environment& env) const {
    return index_ >= env.waypoints.size();
  }

  // Advance the waypoint index when inside the acceptance radius. Runs every
  // control step, whichever controller is active, so recovery-driven flight
  // still progresses through the mission plan.
  void advance(const VehicleState& est, const Environment& env) {
    while (index_ < env.waypoints.size()) {
      const auto& w = env.waypoints[index_];
      const double d = std::hypot(est.x - w.x, est.y - w.y);
      if (d > params_.accept_radius || index_ + 1 >= env.waypoints.size())
        break;
      ++index_;
    }
  }

  TrackerCmd command(const VehicleState& est, const Environment& env) {
    const TrackerParams& p = params_;
    TrackerCmd cmd;
    if (env.waypoints.empty()) return cmd;
    advance(est, env);
    const auto& w = env.waypoints[std::min(index_, env.waypoints.size() - 1)];

    const double ex = w.x - est.x;
    const double ey = w.y - est.y;
    const double dist = std::hypot(ex, ey);
    double speed = std::clamp(p.kp * dist, 0.0, p.cruise_speed);
    if (dist > p.accept_radius) speed = std::max(speed, p.min_speed);
    double vcx = 0, vcy = 0;
    if (dist > 1e-9) {
      vcx = speed * ex / dist;
      vcy = speed * ey / dist;
    }
    // Damping against the estimated velocity; a biased velocity estimate
    // shifts the command proportionally.
    vcx -= p.kd * (est.vx - vcx);
    vcy -= p.kd * (est.vy - vcy);

    const double vcz =
        std::clamp(p.kz * (w.z - est.z), -p.max_climb, p.max_climb);

    // Rotate the earth-frame command into the estimated body frame; the
    // autopilot rotates it back out through the true attitude.
    const double c = std::cos(est.yaw);
    const double s = std::sin(est.yaw);
    cmd.bx = c * vcx + s * vcy;
    cmd.by = -s * vcx + c * vcy;
    cmd.bz = vcz;
    return cmd;
  }

private:
  TrackerParams params_;
  std::size_t index_ = 0;
};

}  // namespace specrecov
