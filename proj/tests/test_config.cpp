#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "specrecov/config.hpp"
#include "specrecov/suite.hpp"

using namespace specrecov;

TEST_CASE("scenario roundtrips through json unchanged") {
  ScenarioConfig c;
  c.id = "roundtrip";
  c.seed = 77;
  c.vehicle.kind = VehicleKind::rover;
  c.vehicle.dt = 0.05;
  c.sensors.gps_sigma = 1.25;
  c.catalog.waypoint_weight = 4.0;
  c.recovery = RecoveryMode::reactive;
  c.detector = DetectorMode::residual;
  c.binary_reward = true;
  c.spawn_randomization = true;
  c.attack_source = AttackSource::script;
  AttackScript s;
  s.target = SensorChannel::magnetometer;
  s.pattern = BiasPattern::ramp_up;
  s.magnitude = 120.0;
  s.start_s = 3.0;
  s.duration_s = 12.0;
  s.attack_class = AttackClass::stealthy;
  c.script = s;

  const auto d = scenario_from_json(scenario_to_json(c));
  CHECK(d.id == c.id);
  CHECK(d.seed == c.seed);
  CHECK(d.vehicle.kind == VehicleKind::rover);
  CHECK(d.vehicle.dt == doctest::Approx(0.05));
  CHECK(d.sensors.gps_sigma == doctest::Approx(1.25));
  CHECK(d.catalog.waypoint_weight == doctest::Approx(4.0));
  CHECK(d.recovery == RecoveryMode::reactive);
  CHECK(d.detector == DetectorMode::residual);
  CHECK(d.binary_reward);
  CHECK(d.spawn_randomization);
  REQUIRE(d.script.has_value());
  CHECK(d.script->target == SensorChannel::magnetometer);
  CHECK(d.script->pattern == BiasPattern::ramp_up);
  CHECK(d.script->attack_class == AttackClass::stealthy);
  CHECK(scenario_to_json(c).dump() == scenario_to_json(d).dump());
}

TEST_CASE("bad enum values raise config errors") {
  CHECK_THROWS_AS(recovery_mode_from("proactive2"), Error);
  CHECK_THROWS_AS(sensor_from("sonar"), Error);
  CHECK_THROWS_AS(pattern_from("spike"), Error);
  nlohmann::json j;
  j["recovery"]["gamma"] = 1.5;
  CHECK_THROWS_AS(scenario_from_json(j), Error);
  nlohmann::json k;
  k["attack"]["source"] = "script";  // script source without a script
  CHECK_THROWS_AS(scenario_from_json(k), Error);
}

TEST_CASE("missing config file is a config error with exit code 2") {
  try {
    load_scenario("/nonexistent/specrecov.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.exit_code() == 2);
  }
}

TEST_CASE("corridor world has an L-shaped plan with a corner waypoint") {
  ScenarioConfig c;
  Rng rng(c.seed);
  Rng env_rng = rng.fork(1);
  const auto env = build_environment(c, env_rng);
  REQUIRE(env.waypoints.size() >= 2);
  const double leg = c.corridor_length_m / 2.0;
  // Some waypoint sits at the bend and the last at the end of leg two.
  bool corner = false;
  for (const auto& w : env.waypoints)
    if (w.x == doctest::Approx(leg) && w.y == doctest::Approx(0.0))
      corner = true;
  CHECK(corner);
  CHECK(env.waypoints.back().x == doctest::Approx(leg));
  CHECK(env.waypoints.back().y == doctest::Approx(leg));
  // Waypoint windows are ordered and open from the start.
  for (const auto& w : env.waypoints) {
    CHECK(w.t_open == 0.0);
    CHECK(w.t_close > 0.0);
  }
  CHECK(static_cast<int>(env.obstacles.size()) <= c.num_obstacles);
}

TEST_CASE("generated worlds keep obstacles clear of the planned path") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    ScenarioConfig c;
    c.seed = seed;
    Rng rng(seed);
    Rng env_rng = rng.fork(1);
    const auto env = build_environment(c, env_rng);
    CHECK_NOTHROW(validate_environment(env, c));
  }
}

TEST_CASE("unknown world preset is rejected") {
  ScenarioConfig c;
  c.preset = "archipelago";
  Rng rng(1);
  CHECK_THROWS_AS(build_environment(c, rng), Error);
}

TEST_CASE("suite hash is invariant to the advisory rejection log") {
  Suite s;
  s.base = ScenarioConfig{};
  SuiteEntry e;
  e.script.target = SensorChannel::gps;
  e.script.magnitude = 30.0;
  e.script.duration_s = 10.0;
  e.seed = 5;
  e.t_gt = 14.0;
  s.entries.push_back(e);
  const auto h1 = suite_hash(s);
  s.rejected.push_back({e.script, "example"});
  CHECK(suite_hash(s) == h1);
  s.entries[0].seed = 6;
  CHECK(suite_hash(s) != h1);
}

TEST_CASE("tampered suite files fail the hash check on load") {
  Suite s;
  s.base = ScenarioConfig{};
  SuiteEntry e;
  e.script.target = SensorChannel::gps;
  e.script.magnitude = 30.0;
  e.script.duration_s = 10.0;
  e.seed = 5;
  e.t_gt = 14.0;
  s.entries.push_back(e);
  s.t_min = 13.0;
  s.t_max = 15.0;
  s.hash = suite_hash(s);
  const std::string path = "/tmp/specrecov_test_suite.json";
  save_suite(path, s);
  CHECK_NOTHROW(load_suite(path));

  // Tamper with an entry but keep the stale hash.
  nlohmann::json j;
  {
    std::ifstream in(path);
    in >> j;
  }
  j["entries"][0]["t_gt_s"] = 99.0;
  {
    std::ofstream out(path);
    out << j.dump(2);
  }
  try {
    load_suite(path);
    FAIL("expected suite_validation");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::suite_validation);
    CHECK(err.exit_code() == 4);
  }
  std::remove(path.c_str());
}

TEST_CASE("error codes map to the documented process exit codes") {
  CHECK(Error(ErrorCode::config, "").exit_code() == 2);
  CHECK(Error(ErrorCode::training_divergence, "").exit_code() == 3);
  CHECK(Error(ErrorCode::suite_validation, "").exit_code() == 4);
  CHECK(Error(ErrorCode::rejected_input, "").exit_code() == 1);
}
