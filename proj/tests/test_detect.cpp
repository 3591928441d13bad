#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "specrecov/detect.hpp"

using namespace specrecov;

namespace {

SensorProfile noise_profile() {
  SensorProfile p;
  p.gps_sigma = 0.4;
  p.gyro_sigma = 0.01;
  p.accel_sigma = 0.2;
  p.mag_sigma = 0.02;
  p.baro_sigma = 0.3;
  p.flow_sigma = 0.1;
  return p;
}

AttackScript gps_script(double start, double duration, double magnitude) {
  AttackScript s;
  s.target = SensorChannel::gps;
  s.pattern = BiasPattern::constant;
  s.magnitude = magnitude;
  s.start_s = start;
  s.duration_s = duration;
  return s;
}

}  // namespace

TEST_CASE("oracle with zero delay alarms at attack onset") {
  const auto s = gps_script(5.0, 10.0, 50.0);
  CHECK_FALSE(oracle_detect(s, 4.99, 0.0).alarm);
  const auto ev = oracle_detect(s, 5.0, 0.0);
  CHECK(ev.alarm);
  CHECK(ev.onset_t == doctest::Approx(5.0));
  REQUIRE(ev.diagnosed.has_value());
  CHECK(*ev.diagnosed == SensorChannel::gps);
}

TEST_CASE("oracle delay shifts the alarm onset") {
  const auto s = gps_script(5.0, 10.0, 50.0);
  CHECK_FALSE(oracle_detect(s, 5.3, 0.5).alarm);
  const auto ev = oracle_detect(s, 5.5, 0.5);
  CHECK(ev.alarm);
  CHECK(ev.onset_t == doctest::Approx(5.5));
}

TEST_CASE("oracle clears when the scripted window ends") {
  const auto s = gps_script(5.0, 10.0, 50.0);
  CHECK(oracle_detect(s, 15.0, 0.0).alarm);
  CHECK_FALSE(oracle_detect(s, 15.1, 0.0).alarm);
}

TEST_CASE("negative oracle delay is a config error") {
  const auto s = gps_script(0.0, 1.0, 50.0);
  CHECK_THROWS_AS(oracle_detect(s, 0.0, -0.1), Error);
}

TEST_CASE("zero residuals never alarm") {
  ResidualDetector det(noise_profile(), 5.0, 3);
  VehicleState predicted;
  predicted.z = 15.0;
  SensorFrame f;
  f.baro_alt = 15.0;
  for (int k = 0; k < 50; ++k) {
    const auto ev = det.step(f, predicted, 0.0, 0.1 * k);
    CHECK_FALSE(ev.alarm);
  }
}

TEST_CASE("large GPS step alarms within the window with the right diagnosis") {
  const auto noise = noise_profile();
  ResidualDetector det(noise, 5.0, 3);
  VehicleState predicted;
  SensorFrame f;
  f.gps_x = 50.0;  // 50 m residual vs threshold 2 m
  DetectorEvent ev;
  int steps = 0;
  while (!ev.alarm && steps < 10) {
    ev = det.step(f, predicted, 0.0, 0.1 * steps);
    ++steps;
  }
  CHECK(ev.alarm);
  CHECK(steps == 3);  // exactly `window` consecutive exceedances
  REQUIRE(ev.diagnosed.has_value());
  CHECK(*ev.diagnosed == SensorChannel::gps);
}

TEST_CASE("sub-threshold residuals never trip the detector") {
  const auto noise = noise_profile();
  ResidualDetector det(noise, 5.0, 3);
  VehicleState predicted;
  SensorFrame f;
  f.gps_x = 5.0 * noise.gps_sigma * 0.9;  // just under threshold
  for (int k = 0; k < 100; ++k)
    CHECK_FALSE(det.step(f, predicted, 0.0, 0.1 * k).alarm);
}

TEST_CASE("alarm clears after a window of in-threshold steps") {
  ResidualDetector det(noise_profile(), 5.0, 3);
  VehicleState predicted;
  SensorFrame bad;
  bad.gps_x = 50.0;
  for (int k = 0; k < 5; ++k) det.step(bad, predicted, 0.0, 0.1 * k);
  CHECK(det.alarm());
  SensorFrame good;
  for (int k = 5; k < 8; ++k) det.step(good, predicted, 0.0, 0.1 * k);
  CHECK_FALSE(det.alarm());
}

TEST_CASE("diagnosis picks the channel with the largest normalized residual") {
  const auto noise = noise_profile();
  ResidualDetector det(noise, 5.0, 1);
  VehicleState predicted;
  SensorFrame f;
  f.gps_x = 4.0;                      // 2x threshold
  f.baro_alt = 30.0 * noise.baro_sigma;  // 6x threshold, the worst
  const auto ev = det.step(f, predicted, 0.0, 0.0);
  REQUIRE(ev.alarm);
  REQUIRE(ev.diagnosed.has_value());
  CHECK(*ev.diagnosed == SensorChannel::barometer);
}
