#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "specrecov/error.hpp"
#include "specrecov/sensors.hpp"
#include "specrecov/vehicle.hpp"

namespace specrecov {

enum class DetectorMode { residual, oracle };

struct DetectorEvent {
  bool alarm = false;
  double onset_t = -1;
  std::optional<SensorChannel> diagnosed;  // present only when alarm is true
  DetectorMode mode = DetectorMode::residual;
};

// Ground-truth detector: alarms `delay` seconds after attack onset with the
// correct diagnosis and clears when the scripted window ends.
inline DetectorEvent oracle_detect(const AttackScript& script, double t,
                                   double delay) {
  if (delay < 0)
    throw Error(ErrorCode::config, "negative oracle detector delay");
  DetectorEvent ev;
  ev.mode = DetectorMode::oracle;
  const double onset = script.start_s + delay;
  const double end = script.start_s + script.duration_s;
  if (t >= onset && t <= end) {
    ev.alarm = true;
    ev.onset_t = onset;
    ev.diagnosed = script.target;
  }
  return ev;
}

// Residual detector: alarms when a channel's measurement-vs-prediction
// residual exceeds threshold_multiplier x sensor sigma for `window`
// consecutive steps; diagnosis is the channel with the largest normalized
// residual. Clears after `window` consecutive in-threshold steps.
class ResidualDetector {
public:
  ResidualDetector(const SensorProfile& noise, double threshold_multiplier = 5.0,
                   int window = 3)
      : noise_(noise), multiplier_(threshold_multiplier), window_(window) {}

  DetectorEvent step(const SensorFrame& frame, const VehicleState& predicted,
                     double expected_yaw_rate, double t) {
    std::array<double, kNumSensors> normalized{};
    normalized[static_cast<int>(SensorChannel::gps)] = normalize(
        std::hypot(frame.gps_x - predicted.x, frame.gps_y - predicted.y),
        noise_.gps_sigma);
    normalized[static_cast<int>(SensorChannel::barometer)] =
        normalize(std::abs(frame.baro_alt - predicted.z), noise_.baro_sigma);
    normalized[static_cast<int>(SensorChannel::optical_flow)] = normalize(
        std::hypot(frame.flow_x - predicted.vx * kFlowPxPerMps,
                   frame.flow_y - predicted.vy * kFlowPxPerMps),
        noise_.flow_sigma + noise_.flow_speed_sigma * predicted.speed_xy());
    normalized[static_cast<int>(SensorChannel::magnetometer)] = normalize(
        std::abs(wrap_angle(frame.mag_heading - predicted.yaw)),
        noise_.mag_sigma);
    normalized[static_cast<int>(SensorChannel::accelerometer)] =
        normalize(std::abs(frame.accel_x - predicted.ax), noise_.accel_sigma);
    normalized[static_cast<int>(SensorChannel::gyroscope)] = normalize(
        std::abs(frame.gyro_yaw - expected_yaw_rate), noise_.gyro_sigma);

    int worst = 0;
    for (int c = 0; c < kNumSensors; ++c) {
      if (normalized[c] > normalized[worst]) worst = c;
      if (normalized[c] >= 1.0) {
        streak_[c] = std::min(streak_[c] + 1, window_);
        clear_streak_[c] = 0;
      } else {
        streak_[c] = 0;
        clear_streak_[c] = std::min(clear_streak_[c] + 1, window_);
      }
    }

    if (!alarm_) {
      for (int c = 0; c < kNumSensors; ++c) {
        if (streak_[c] >= window_) {
          alarm_ = true;
          onset_t_ = t;
          diagnosed_ = static_cast<SensorChannel>(worst);
          break;
        }
      }
    } else if (clear_streak_[static_cast<int>(diagnosed_)] >= window_) {
      alarm_ = false;
    }

    DetectorEvent ev;
    ev.mode = DetectorMode::residual;
    ev.alarm = alarm_;
    if (alarm_) {
      ev.onset_t = onset_t_;
      ev.diagnosed = diagnosed_;
    }
    return ev;
  }

  bool alarm() const { return alarm_; }

private:
  double normalize(double residual, double sigma) const {
    const double threshold = multiplier_ * sigma;
    if (threshold <= 0) return 0.0;
    return residual / threshold;
  }

  SensorProfile noise_;
  double multiplier_;
  int window_;
  std::array<int, kNumSensors> streak_{};
  std::array<int, kNumSensors> clear_streak_{};
  bool alarm_ = false;
  double onset_t_ = -1;
  SensorChannel diagnosed_ = SensorChannel::gps;
};

}  // namespace specrecov
