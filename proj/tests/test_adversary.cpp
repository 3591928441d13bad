#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "specrecov/adversary.hpp"

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

}  // namespace

TEST_CASE("untrained agent with a fixed seed draws a reproducible script") {
  const auto agent = make_attack_agent(7);
  const auto noise = noise_profile();
  std::vector<double> obs(kAttackObsWidth, 0.0);
  Rng r1(55), r2(55);
  const auto a = attack_agent_act(agent, obs, noise, 0.1, 60.0, r1);
  const auto b = attack_agent_act(agent, obs, noise, 0.1, 60.0, r2);
  CHECK(a.target == b.target);
  CHECK(a.pattern == b.pattern);
  CHECK(a.magnitude == b.magnitude);
  CHECK(a.start_s == b.start_s);
  CHECK(a.duration_s == b.duration_s);
}

TEST_CASE("every drawn script is valid across 10k samples") {
  const auto agent = make_attack_agent(3);
  const auto noise = noise_profile();
  Rng rng(99);
  std::vector<double> obs(kAttackObsWidth, 0.0);
  for (int k = 0; k < 10000; ++k) {
    for (double& v : obs) v = rng.uniform(-1.0, 1.0);
    const auto s = attack_agent_act(agent, obs, noise, 0.1, 60.0, rng);
    // attack_agent_act validates internally; re-check from the outside.
    CHECK_NOTHROW(validate_script(s, noise, 0.1));
    CHECK(s.duration_s >= 0.1);
    const auto range = allowed_magnitude(s.target);
    CHECK(s.magnitude >= range.lo);
    CHECK(s.magnitude <= range.hi);
  }
}

TEST_CASE("duration head below one step is floored to a one-step attack") {
  AttackScript s;
  s.target = SensorChannel::gps;
  s.pattern = BiasPattern::constant;
  s.magnitude = 30.0;
  s.duration_s = 0.001;
  const auto fixed = legalize_script(s, noise_profile(), 0.1, 5.0);
  CHECK(fixed.duration_s >= 0.1);
}

TEST_CASE("single-term adversary reward reduces to the disruption term") {
  AdversaryWeights w{.alpha = 1.0, .beta = 0.0, .gamma_c = 0.0};
  EpisodeRecord rec;
  AttackScript s;
  s.target = SensorChannel::gps;
  s.start_s = 0.0;
  s.duration_s = 10.0;
  rec.script = s;
  // Mean reward -0.4 over the window: disruption = (1 - (-0.4)) / 2 = 0.7.
  for (int k = 0; k < 10; ++k) {
    StepLog step;
    step.t = k * 0.1;
    step.reward = -0.4;
    rec.steps.push_back(step);
  }
  Environment env;
  env.waypoints.push_back({10, 0, 0, 0, 60});
  const auto specs = quadcopter_catalog(env.waypoints, {});
  CHECK(adversary_reward(rec, specs, w) == doctest::Approx(0.7));
}

TEST_CASE("immediate detection zeroes the stealthiness term") {
  AdversaryWeights w{.alpha = 0.0, .beta = 1.0, .gamma_c = 0.0};
  EpisodeRecord rec;
  AttackScript s;
  s.start_s = 2.0;
  s.duration_s = 10.0;
  rec.script = s;
  rec.alarm_occurred = true;
  rec.first_alarm_t = 2.0;  // alarmed at onset
  Environment env;
  env.waypoints.push_back({10, 0, 0, 0, 60});
  const auto specs = quadcopter_catalog(env.waypoints, {});
  CHECK(adversary_reward(rec, specs, w) == doctest::Approx(0.0));
  rec.first_alarm_t = 7.0;  // alarmed halfway
  CHECK(adversary_reward(rec, specs, w) == doctest::Approx(0.5));
}

TEST_CASE("adversary reward is recomputable from the trace within 1e-12") {
  Environment env;
  env.waypoints.push_back({10, 0, 0, 0, 60});
  const auto specs = quadcopter_catalog(env.waypoints, {});
  int s1 = -1;
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (specs[i].id == "S1") s1 = static_cast<int>(i);
  REQUIRE(s1 >= 0);

  Rng rng(17);
  AdversaryWeights w;
  for (int trial = 0; trial < 50; ++trial) {
    EpisodeRecord rec;
    AttackScript s;
    s.start_s = rng.uniform(0.0, 5.0);
    s.duration_s = rng.uniform(1.0, 10.0);
    rec.script = s;
    rec.alarm_occurred = rng.uniform01() < 0.5;
    rec.first_alarm_t = s.start_s + rng.uniform(0.0, s.duration_s);
    const int n = 100;
    for (int k = 0; k < n; ++k) {
      StepLog step;
      step.t = k * 0.1;
      step.reward = rng.uniform(-1.0, 1.0);
      step.margins.assign(specs.size(), 0.0);
      step.margins[static_cast<size_t>(s1)] = rng.uniform(-5.0, 20.0);
      rec.steps.push_back(step);
    }

    // Independent recomputation straight from the definition.
    double sum = 0;
    long cnt = 0;
    double min_clear = std::numeric_limits<double>::infinity();
    for (const auto& step : rec.steps) {
      if (!s.in_window(step.t)) continue;
      sum += step.reward;
      ++cnt;
      min_clear = std::min(min_clear,
                           step.margins[static_cast<size_t>(s1)] +
                               specs[static_cast<size_t>(s1)].param);
    }
    const double disruption =
        cnt > 0 ? std::clamp((1.0 - sum / cnt) / 2.0, 0.0, 1.0) : 0.0;
    double stealth = 1.0;
    if (rec.alarm_occurred && s.duration_s > 0)
      stealth = std::clamp((rec.first_alarm_t - s.start_s) / s.duration_s,
                           0.0, 1.0);
    double risk = 0.0;
    if (std::isfinite(min_clear)) {
      const double cp = specs[static_cast<size_t>(s1)].param;
      risk = std::clamp(1.0 - min_clear / (2.0 * cp), 0.0, 1.0);
    }
    const double expect = w.alpha * disruption + w.beta * stealth +
                          w.gamma_c * risk;
    CHECK(adversary_reward(rec, specs, w) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("convergence fires on constant streams and not on rising ones") {
  std::vector<double> constant(300, 0.42);
  CHECK(curve_converged(constant, 1e-3));
  std::vector<double> rising;
  for (int k = 0; k < 300; ++k) rising.push_back(0.01 * k);
  CHECK_FALSE(curve_converged(rising, 1e-3));
  std::vector<double> tiny(30, 0.42);  // too short to judge
  CHECK_FALSE(curve_converged(tiny, 1e-3));
}

TEST_CASE("alternating training is zero-sum episode by episode") {
  ScenarioConfig cfg;
  cfg.recovery = RecoveryMode::reactive;
  cfg.mission_timeout_s = 8.0;
  cfg.stall_timeout_s = 8.0;
  AdversarialRun run;
  run.episodes_per_block = 6;
  run.max_alternations = 2;
  run.batch_episodes = 3;
  run.epochs = 1;
  run.seed = 5;
  const auto sg = make_policy(cfg.policy_input_width, 5);
  const auto result = train_adversarial(sg, cfg, run);
  REQUIRE(result.r_sg.size() == result.r_aa.size());
  CHECK(result.r_sg.size() == 12);
  for (std::size_t i = 0; i < result.r_sg.size(); ++i)
    CHECK(result.r_sg[i] + result.r_aa[i] == 0.0);  // exact, by construction
}
