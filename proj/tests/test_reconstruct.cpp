#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "specrecov/reconstruct.hpp"

using namespace specrecov;

namespace {

CheckpointEntry entry_at(double t, const VehicleState& s,
                         const ActuatorSetpoint& cmd) {
  CheckpointEntry e;
  e.t = t;
  e.state = s;
  e.command = cmd;
  return e;
}

// Constant-velocity trace: x advances v*dt per step, commands hold v.
Checkpoint constant_velocity_window(int n, double v, double dt) {
  Checkpoint cp(static_cast<std::size_t>(n) + 10);
  for (int k = 0; k < n; ++k) {
    VehicleState s;
    s.t = k * dt;
    s.x = v * k * dt;
    s.vx = v;
    ActuatorSetpoint cmd;
    cmd.vx = v;
    cp.push(entry_at(s.t, s, cmd));
  }
  return cp;
}

}  // namespace

TEST_CASE("checkpoint window keeps the last W entries") {
  Checkpoint cp(5);
  for (int k = 0; k < 8; ++k) {
    VehicleState s;
    s.t = k * 0.1;
    CHECK(cp.push(entry_at(s.t, s, {})));
  }
  CHECK(cp.size() == 5);
  CHECK(cp[0].t == doctest::Approx(0.3));
  CHECK(cp.back().t == doctest::Approx(0.7));
}

TEST_CASE("entries during an alarm are discarded") {
  Checkpoint cp(10);
  VehicleState s;
  s.t = 0.1;
  CHECK(cp.push(entry_at(s.t, s, {})));
  s.t = 0.2;
  CHECK_FALSE(cp.push(entry_at(s.t, s, {}), /*alarm_active=*/true));
  CHECK(cp.size() == 1);
}

TEST_CASE("out-of-order timestamps are rejected") {
  Checkpoint cp(10);
  VehicleState s;
  s.t = 1.0;
  CHECK(cp.push(entry_at(s.t, s, {})));
  s.t = 0.5;
  CHECK_FALSE(cp.push(entry_at(s.t, s, {})));
  s.t = 1.0;
  CHECK_FALSE(cp.push(entry_at(s.t, s, {})));
}

TEST_CASE("estimator refuses a window below the entry floor") {
  auto cp = constant_velocity_window(5, 1.0, 0.1);
  CHECK_THROWS_AS(fit_estimator(cp, 20), Error);
}

TEST_CASE("noise-free constant-velocity prediction is exact") {
  const double v = 2.0, dt = 0.1;
  auto cp = constant_velocity_window(60, v, dt);
  const auto model = fit_estimator(cp, 20);
  VehicleState s = cp.back().state;
  ActuatorSetpoint cmd;
  cmd.vx = v;
  const auto next = predict(model, s, cmd);
  CHECK(next.x == doctest::Approx(s.x + v * dt).epsilon(1e-6));
  CHECK(next.vx == doctest::Approx(v).epsilon(1e-6));
}

TEST_CASE("noisy-window prediction RMS stays within 3x the injected noise") {
  Rng rng(5);
  const double dt = 0.1, sigma = 0.05;
  Checkpoint cp(250);
  VehicleState s;
  for (int k = 0; k < 200; ++k) {
    ActuatorSetpoint cmd;
    cmd.vx = 2.0 + std::sin(0.1 * k);
    cmd.vy = std::cos(0.07 * k);
    VehicleState noisy = s;
    noisy.x += rng.gaussian(0, sigma);
    noisy.y += rng.gaussian(0, sigma);
    cp.push(entry_at(s.t, noisy, cmd));
    s.vx = cmd.vx;
    s.vy = cmd.vy;
    s.x += s.vx * dt;
    s.y += s.vy * dt;
    s.t += dt;
  }
  const auto model = fit_estimator(cp, 20);
  REQUIRE(model.fitted);
  CHECK(model.residual_rms <= 3.0 * sigma);
}

TEST_CASE("stationary GPS reconstruction returns the checkpointed position") {
  // A stationary window is rank deficient, so the kinematic fallback with
  // zero velocity holds the checkpointed position exactly.
  Checkpoint cp(60);
  VehicleState s;
  s.x = 7.0;
  s.y = -3.0;
  for (int k = 0; k < 40; ++k) {
    s.t = k * 0.1;
    cp.push(entry_at(s.t, s, {}));
  }
  const auto model = fit_estimator(cp, 20);
  VehicleState spoofed = s;
  spoofed.x = 500.0;  // attacked frame-derived estimate
  std::vector<ActuatorSetpoint> cmds(10);
  const auto rec = reconstruct_state(model, cp, SensorChannel::gps, cmds,
                                     spoofed);
  CHECK(rec.x == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(rec.y == doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("constant-velocity dead reckoning matches the closed form") {
  const double v = 3.0, dt = 0.1;
  auto cp = constant_velocity_window(60, v, dt);
  const auto model = fit_estimator(cp, 20);
  const double x0 = cp.back().state.x;
  const int k = 25;
  std::vector<ActuatorSetpoint> cmds(k);
  for (auto& c : cmds) c.vx = v;
  VehicleState spoofed = cp.back().state;
  spoofed.x = 1e4;
  const auto rec = reconstruct_state(model, cp, SensorChannel::gps, cmds,
                                     spoofed);
  CHECK(rec.x == doctest::Approx(x0 + k * v * dt).epsilon(1e-9));
}

TEST_CASE("only the compromised components are overridden") {
  const double v = 1.0, dt = 0.1;
  auto cp = constant_velocity_window(60, v, dt);
  const auto model = fit_estimator(cp, 20);
  VehicleState frame;
  frame.x = 999.0;       // compromised, must be replaced
  frame.z = 15.0;        // trusted, must pass through
  frame.vy = -2.0;       // trusted
  std::vector<ActuatorSetpoint> cmds(5);
  for (auto& c : cmds) c.vx = v;
  const auto rec = reconstruct_state(model, cp, SensorChannel::gps, cmds, frame);
  CHECK(rec.x != doctest::Approx(999.0));
  CHECK(rec.z == doctest::Approx(15.0));
  CHECK(rec.vy == doctest::Approx(-2.0));
}

TEST_CASE("horizon overrun raises reconstruction_expired") {
  auto cp = constant_velocity_window(60, 1.0, 0.1);
  const auto model = fit_estimator(cp, 20);
  std::vector<ActuatorSetpoint> cmds(301);
  VehicleState frame;
  bool expired = false;
  try {
    reconstruct_state(model, cp, SensorChannel::gps, cmds, frame, {}, 300);
  } catch (const Error& e) {
    expired = e.code() == ErrorCode::reconstruction_expired;
  }
  CHECK(expired);
}

TEST_CASE("empty checkpoint raises insufficient_data") {
  Checkpoint cp(10);
  EstimatorModel model;
  model.fitted = true;
  model.fallback = true;
  std::vector<ActuatorSetpoint> cmds(1);
  VehicleState frame;
  CHECK_THROWS_AS(
      reconstruct_state(model, cp, SensorChannel::gps, cmds, frame), Error);
}
