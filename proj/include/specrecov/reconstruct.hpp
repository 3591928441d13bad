#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "specrecov/error.hpp"
#include "specrecov/sensors.hpp"
#include "specrecov/vehicle.hpp"

namespace specrecov {

// State components, indexing the 12-element input vector.
enum StateComponent {
  kPosX = 0, kPosY, kPosZ,
  kVelX, kVelY, kVelZ,
  kAccX, kAccY, kAccZ,
  kRoll, kPitch, kYaw,
  kNumStateComponents
};

inline std::array<double, kNumStateComponents> state_to_array(
    const VehicleState& s) {
  return {s.x, s.y, s.z, s.vx, s.vy, s.vz, s.ax, s.ay, s.az,
          s.roll, s.pitch, s.yaw};
}

inline void array_to_state(const std::array<double, kNumStateComponents>& a,
                           VehicleState& s) {
  s.x = a[kPosX]; s.y = a[kPosY]; s.z = a[kPosZ];
  s.vx = a[kVelX]; s.vy = a[kVelY]; s.vz = a[kVelZ];
  s.ax = a[kAccX]; s.ay = a[kAccY]; s.az = a[kAccZ];
  s.roll = a[kRoll]; s.pitch = a[kPitch]; s.yaw = a[kYaw];
}

// State components poisoned when a given sensor is biased; these are the
// components that get reconstructed when that sensor is diagnosed. The sets
// follow the fusion data flow: rate-channel biases corrupt the integrated
// attitude, accelerometer biases corrupt the dead-reckoned velocity.
inline std::vector<int> components_of(SensorChannel c) {
  switch (c) {
    case SensorChannel::gps: return {kPosX, kPosY};
    case SensorChannel::barometer: return {kPosZ, kVelZ};
    case SensorChannel::optical_flow: return {kVelX, kVelY};
    case SensorChannel::accelerometer:
      return {kAccX, kAccY, kAccZ, kVelX, kVelY};
    case SensorChannel::gyroscope: return {kRoll, kPitch, kYaw};
    case SensorChannel::magnetometer: return {kYaw};
  }
  return {};
}

struct CheckpointEntry {
  double t = 0;
  VehicleState state;       // trusted estimated state
  SensorFrame frame;
  ActuatorSetpoint command; // command issued at this step
};

// Sliding window of trusted history. Entries recorded while the detector is
// alarming are discarded, as are out-of-order timestamps.
class Checkpoint {
public:
  explicit Checkpoint(std::size_t window = 100) : window_(window) {}

  bool push(const CheckpointEntry& entry, bool alarm_active = false) {
    if (alarm_active) return false;
    if (!entries_.empty() && entry.t <= entries_.back().t) return false;
    entries_.push_back(entry);
    while (entries_.size() > window_) entries_.pop_front();
    return true;
  }

  // Remove and return the entries newer than the cutoff, oldest first. Used
  // to purge the tail recorded between attack onset and the alarm.
  std::vector<CheckpointEntry> drop_after(double cutoff) {
    std::vector<CheckpointEntry> dropped;
    while (!entries_.empty() && entries_.back().t > cutoff) {
      dropped.push_back(entries_.back());
      entries_.pop_back();
    }
    std::reverse(dropped.begin(), dropped.end());
    return dropped;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t window() const { return window_; }
  bool empty() const { return entries_.empty(); }
  const CheckpointEntry& back() const { return entries_.back(); }
  const CheckpointEntry& operator[](std::size_t i) const { return entries_[i]; }

private:
  std::size_t window_;
  std::deque<CheckpointEntry> entries_;
};

inline constexpr int kNumFeatures = 1 + kNumStateComponents + 3;  // bias, state, cmd

// Per-channel linear next-state predictor fitted from checkpointed history.
struct EstimatorModel {
  double dt = 0.1;
  std::array<std::array<double, kNumFeatures>, kNumStateComponents> weights{};
  bool fitted = false;
  bool fallback = false;     // rank-deficient window; analytic kinematic model
  double residual_rms = 0;
};

namespace detail {

inline std::array<double, kNumFeatures> features(const VehicleState& s,
                                                 const ActuatorSetpoint& cmd) {
  std::array<double, kNumFeatures> f{};
  f[0] = 1.0;
  const auto sv = state_to_array(s);
  for (int i = 0; i < kNumStateComponents; ++i) f[1 + i] = sv[i];
  f[1 + kNumStateComponents + 0] = cmd.vx;
  f[1 + kNumStateComponents + 1] = cmd.vy;
  f[1 + kNumStateComponents + 2] = cmd.vz;
  return f;
}

// Solve A x = b in place via Gaussian elimination with partial pivoting.
// Returns false when a pivot falls below the rank threshold.
inline bool solve_linear(std::vector<double>& a, std::vector<double>& b, int n,
                         double pivot_tol) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (std::abs(a[pivot * n + col]) < pivot_tol) return false;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double factor = a[r * n + col] * inv;
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
      b[r] -= factor * b[col];
    }
  }
  for (int i = 0; i < n; ++i) b[i] /= a[i * n + i];
  return true;
}

}  // namespace detail

// Analytic kinematic fallback when the window is rank deficient (e.g. a
// stationary or constant-velocity vehicle).
inline VehicleState predict_fallback(const VehicleState& s,
                                     const ActuatorSetpoint& cmd, double dt) {
  VehicleState n = s;
  n.x = s.x + s.vx * dt;
  n.y = s.y + s.vy * dt;
  n.z = s.z + s.vz * dt;
  n.vx = cmd.vx;
  n.vy = cmd.vy;
  n.vz = cmd.vz;
  n.ax = (n.vx - s.vx) / dt;
  n.ay = (n.vy - s.vy) / dt;
  n.az = (n.vz - s.vz) / dt;
  n.roll = cmd.roll;
  n.pitch = cmd.pitch;
  n.yaw = cmd.yaw;
  n.t = s.t + dt;
  return n;
}

// Least-squares system identification over the checkpoint window.
inline EstimatorModel fit_estimator(const Checkpoint& cp,
                                    std::size_t min_entries = 20,
                                    double ridge = 1e-9) {
  if (cp.size() < min_entries || cp.size() < 2)
    throw Error(ErrorCode::insufficient_data,
                "checkpoint window too small to fit estimator");

  EstimatorModel model;
  model.dt = cp[1].t - cp[0].t;

  const std::size_t m = cp.size() - 1;
  std::vector<std::array<double, kNumFeatures>> X(m);
  std::vector<std::array<double, kNumStateComponents>> Y(m);
  for (std::size_t i = 0; i < m; ++i) {
    X[i] = detail::features(cp[i].state, cp[i].command);
    Y[i] = state_to_array(cp[i + 1].state);
  }

  // Normal equations, shared Gram matrix across output channels.
  const int n = kNumFeatures;
  std::vector<double> gram(static_cast<size_t>(n) * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) gram[r * n + c] += X[i][r] * X[i][c];
  for (int d = 0; d < n; ++d) gram[d * n + d] += ridge;

  double trace = 0;
  for (int d = 0; d < n; ++d) trace += gram[d * n + d];
  const double pivot_tol = 1e-10 * std::max(1.0, trace / n);

  bool ok = true;
  for (int ch = 0; ch < kNumStateComponents && ok; ++ch) {
    std::vector<double> a = gram;
    std::vector<double> b(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (int r = 0; r < n; ++r) b[r] += X[i][r] * Y[i][ch];
    ok = detail::solve_linear(a, b, n, pivot_tol);
    if (ok)
      for (int r = 0; r < n; ++r) model.weights[ch][r] = b[r];
  }

  model.fitted = true;
  model.fallback = !ok;
  if (!ok) return model;

  double sq = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (int ch = 0; ch < kNumStateComponents; ++ch) {
      double pred = 0;
      for (int r = 0; r < n; ++r) pred += model.weights[ch][r] * X[i][r];
      const double e = pred - Y[i][ch];
      sq += e * e;
    }
  }
  model.residual_rms = std::sqrt(sq / (m * kNumStateComponents));
  return model;
}

inline VehicleState predict(const EstimatorModel& model, const VehicleState& s,
                            const ActuatorSetpoint& cmd) {
  if (!model.fitted)
    throw Error(ErrorCode::insufficient_data, "estimator not fitted");
  if (model.fallback) return predict_fallback(s, cmd, model.dt);
  const auto f = detail::features(s, cmd);
  std::array<double, kNumStateComponents> out{};
  for (int ch = 0; ch < kNumStateComponents; ++ch) {
    double v = 0;
    for (int r = 0; r < kNumFeatures; ++r) v += model.weights[ch][r] * f[r];
    out[ch] = v;
  }
  VehicleState n = s;
  array_to_state(out, n);
  n.t = s.t + model.dt;
  return n;
}

// Sensor isolation: while a channel is diagnosed as compromised, re-derive
// its poisoned state components from the remaining trusted channels.
// Integrating substitutes (gyro-only heading, accelerometer-only velocity)
// start from the last trusted checkpoint. Horizontal position under GPS
// attacks has no redundant absolute source and stays with the model rollout.
class RedundantReconstructor {
public:
  void arm(const VehicleState& trusted) {
    yaw_ = trusted.yaw;
    vx_ = trusted.vx;
    vy_ = trusted.vy;
    vz_ = trusted.vz;
    z_ = trusted.z;
    armed_ = true;
  }
  bool armed() const { return armed_; }
  void disarm() { armed_ = false; }

  VehicleState apply(SensorChannel compromised, const SensorFrame& f,
                     VehicleState est, double dt) {
    switch (compromised) {
      case SensorChannel::gyroscope:
        est.yaw = f.mag_heading;
        break;
      case SensorChannel::magnetometer:
        yaw_ = wrap_angle(yaw_ + f.gyro_yaw * dt);
        est.yaw = yaw_;
        break;
      case SensorChannel::accelerometer: {
        const double nvx = f.flow_x / kFlowPxPerMps;
        const double nvy = f.flow_y / kFlowPxPerMps;
        // Accelerations from smoothed flow differentiation.
        est.ax = 0.7 * est.ax + 0.3 * (nvx - vx_) / dt;
        est.ay = 0.7 * est.ay + 0.3 * (nvy - vy_) / dt;
        est.az = 0.0;
        vx_ = nvx;
        vy_ = nvy;
        est.vx = nvx;
        est.vy = nvy;
        break;
      }
      case SensorChannel::optical_flow:
        vx_ += f.accel_x * dt;
        vy_ += f.accel_y * dt;
        est.vx = vx_;
        est.vy = vy_;
        break;
      case SensorChannel::barometer:
        // GPS-derived altitude blended over accelerometer dead reckoning.
        vz_ += f.accel_z * dt;
        z_ = 0.75 * (z_ + vz_ * dt) + 0.25 * f.gps_z;
        est.z = z_;
        est.vz = vz_;
        break;
      case SensorChannel::gps:
        break;
    }
    return est;
  }

private:
  double yaw_ = 0, vx_ = 0, vy_ = 0, vz_ = 0, z_ = 0;
  bool armed_ = false;
};

inline constexpr std::size_t kDefaultReconstructionHorizon = 300;

// Selective reconstruction: roll the model forward from the last trusted
// checkpoint for the compromised sensor's state components, taking all other
// components from the current frame-derived estimate at every step.
inline VehicleState reconstruct_state(
    const EstimatorModel& model, const Checkpoint& cp,
    SensorChannel compromised,
    std::span<const ActuatorSetpoint> commands_since_alarm,
    const VehicleState& frame_derived,
    std::span<const VehicleState> frame_derived_history = {},
    std::size_t max_horizon = kDefaultReconstructionHorizon) {
  if (cp.empty())
    throw Error(ErrorCode::insufficient_data, "no trusted checkpoint");
  if (commands_since_alarm.size() > max_horizon)
    throw Error(ErrorCode::reconstruction_expired,
                "reconstruction horizon exceeded");

  const auto comps = components_of(compromised);
  VehicleState rec = cp.back().state;
  for (std::size_t k = 0; k < commands_since_alarm.size(); ++k) {
    // Hybrid state: compromised components from the rollout, the rest from
    // the frame-derived estimate at that step (current one if no history).
    VehicleState hybrid =
        k < frame_derived_history.size() ? frame_derived_history[k]
                                         : frame_derived;
    auto hv = state_to_array(hybrid);
    const auto rv = state_to_array(rec);
    for (int c : comps) hv[c] = rv[c];
    array_to_state(hv, hybrid);
    rec = predict(model, hybrid, commands_since_alarm[k]);
  }

  VehicleState out = frame_derived;
  auto ov = state_to_array(out);
  const auto rv = state_to_array(rec);
  for (int c : comps) ov[c] = rv[c];
  array_to_state(ov, out);
  return out;
}

}  // namespace specrecov
