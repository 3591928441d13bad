#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "specrecov/mission.hpp"
#include "specrecov/policy.hpp"
#include "specrecov/ppo.hpp"

namespace specrecov {

// Attack policy observation: what the adversary saw last episode — recovery
// action frequencies, attack timing, bias level, and the final vehicle state.
inline constexpr int kAttackObsWidth = 20;
// Heads: 6 sensor logits, 3 pattern logits, magnitude, start, duration.
inline constexpr int kAttackOutWidth = kNumSensors + 3 + 3;

struct AttackAgentParams {
  Mlp net;
  RunningNormalizer norm;
  std::uint64_t seed = 0;
};

inline AttackAgentParams make_attack_agent(std::uint64_t seed, int hidden = 32) {
  AttackAgentParams p;
  p.seed = seed;
  p.net = Mlp({kAttackObsWidth, hidden, hidden, kAttackOutWidth});
  Rng rng(seed ^ 0xadadadadULL);
  p.net.init(rng);
  p.norm = RunningNormalizer(kAttackObsWidth);
  return p;
}

inline std::vector<double> attack_observation(const EpisodeRecord* prev,
                                              double timeout_s) {
  std::vector<double> obs(kAttackObsWidth, 0.0);
  if (prev == nullptr) return obs;
  long total = 0;
  std::array<long, kNumActions> counts{};
  for (const auto& s : prev->steps) {
    if (s.action >= 0 && s.action < kNumActions) {
      ++counts[static_cast<size_t>(s.action)];
      ++total;
    }
  }
  for (int i = 0; i < kNumActions; ++i)
    obs[static_cast<size_t>(i)] =
        total > 0 ? static_cast<double>(counts[static_cast<size_t>(i)]) / total : 0.0;
  if (prev->script) {
    obs[6] = timeout_s > 0 ? prev->script->duration_s / timeout_s : 0.0;
    const auto r = allowed_magnitude(prev->script->target);
    obs[7] = r.hi > r.lo ? (prev->script->magnitude - r.lo) / (r.hi - r.lo) : 0.0;
  }
  if (!prev->steps.empty()) {
    const auto sv = state_to_array(prev->steps.back().truth);
    for (int i = 0; i < kNumStateComponents; ++i) obs[8 + i] = sv[i];
  }
  return obs;
}

// Head sample bookkeeping for the REINFORCE update.
struct AttackSample {
  std::vector<double> obs;
  int sensor = 0;
  int pattern = 0;
  double z_mag = 0, z_start = 0, z_dur = 0;  // pre-squash head values + noise
  double noise_mag = 0, noise_start = 0, noise_dur = 0;
  AttackScript script;
};

inline constexpr double kAttackHeadNoise = 0.3;

// Make the drawn script satisfy its class invariants: classify by the
// realized first-step bias, force stealthy scripts onto ramps, and stretch
// the ramp until the per-step increment clears the detector threshold.
inline AttackScript legalize_script(AttackScript s, const SensorProfile& sensors,
                                    double dt, double multiplier) {
  const auto range = allowed_magnitude(s.target);
  s.magnitude = std::clamp(s.magnitude, std::max(range.lo, 1e-6), range.hi);
  s.duration_s = std::max(s.duration_s, dt);
  s.start_s = std::max(s.start_s, 0.0);
  const double threshold = multiplier * sensors.sigma(s.target);
  s.attack_class = (threshold <= 0 || first_step_bias(s, dt) >= threshold)
                       ? AttackClass::overt
                       : AttackClass::stealthy;
  if (s.attack_class == AttackClass::stealthy) {
    if (s.pattern == BiasPattern::constant) s.pattern = BiasPattern::ramp_up;
    if (threshold <= 0 || first_step_bias(s, dt) >= threshold) {
      s.attack_class = AttackClass::overt;
    } else if (max_step_increment(s, dt) >= threshold) {
      // Per-step increment scales with magnitude/duration; stretch duration.
      const double excess = max_step_increment(s, dt) / threshold;
      s.duration_s *= excess * 1.05;
    }
  }
  return s;
}

inline AttackScript attack_agent_act(const AttackAgentParams& p,
                                     const std::vector<double>& obs,
                                     const SensorProfile& sensors, double dt,
                                     double timeout_s, Rng& rng,
                                     double detector_multiplier = 5.0,
                                     AttackSample* sample = nullptr) {
  for (double v : obs)
    if (!std::isfinite(v))
      throw Error(ErrorCode::rejected_input, "non-finite attack observation");
  const auto out = p.net.forward(p.norm.apply(obs));

  std::vector<double> sensor_logits(out.begin(), out.begin() + kNumSensors);
  const auto sensor_probs = softmax(sensor_logits);
  double u = rng.uniform01();
  int sensor = kNumSensors - 1;
  for (int i = 0; i < kNumSensors; ++i) {
    u -= sensor_probs[static_cast<size_t>(i)];
    if (u <= 0) { sensor = i; break; }
  }
  std::vector<double> pattern_logits(out.begin() + kNumSensors,
                                     out.begin() + kNumSensors + 3);
  const auto pattern_probs = softmax(pattern_logits);
  u = rng.uniform01();
  int pattern = 2;
  for (int i = 0; i < 3; ++i) {
    u -= pattern_probs[static_cast<size_t>(i)];
    if (u <= 0) { pattern = i; break; }
  }

  const double n_mag = rng.gaussian(0, kAttackHeadNoise);
  const double n_start = rng.gaussian(0, kAttackHeadNoise);
  const double n_dur = rng.gaussian(0, kAttackHeadNoise);
  const double z_mag = out[kNumSensors + 3] + n_mag;
  const double z_start = out[kNumSensors + 4] + n_start;
  const double z_dur = out[kNumSensors + 5] + n_dur;

  const auto range = allowed_magnitude(static_cast<SensorChannel>(sensor));
  AttackScript s;
  s.target = static_cast<SensorChannel>(sensor);
  s.pattern = static_cast<BiasPattern>(pattern);
  s.magnitude = range.lo + (range.hi - range.lo) * sigmoid(z_mag);
  s.start_s = 0.5 * timeout_s * sigmoid(z_start);
  s.duration_s = std::max(dt, 0.6 * timeout_s * sigmoid(z_dur));
  s.direction = 1;
  s = legalize_script(s, sensors, dt, detector_multiplier);
  validate_script(s, sensors, dt, detector_multiplier);

  if (sample != nullptr) {
    sample->obs = obs;
    sample->sensor = sensor;
    sample->pattern = pattern;
    sample->z_mag = z_mag;
    sample->z_start = z_start;
    sample->z_dur = z_dur;
    sample->noise_mag = n_mag;
    sample->noise_start = n_start;
    sample->noise_dur = n_dur;
    sample->script = s;
  }
  return s;
}

// Uniformly random valid script: the naive curriculum baseline.
inline AttackScript random_attack_script(const SensorProfile& sensors, double dt,
                                         double timeout_s, Rng& rng,
                                         double detector_multiplier = 5.0) {
  AttackScript s;
  s.target = static_cast<SensorChannel>(rng.uniform_index(kNumSensors));
  s.pattern = static_cast<BiasPattern>(rng.uniform_index(3));
  const auto range = allowed_magnitude(s.target);
  s.magnitude = rng.uniform(std::max(range.lo, 1e-6), range.hi);
  s.start_s = rng.uniform(0.0, 0.5 * timeout_s);
  s.duration_s = rng.uniform(5.0, 0.6 * timeout_s);
  s = legalize_script(s, sensors, dt, detector_multiplier);
  validate_script(s, sensors, dt, detector_multiplier);
  return s;
}

struct AdversaryWeights {
  double alpha = 0.5;    // disruption
  double beta = 0.3;     // stealthiness
  double gamma_c = 0.2;  // complexity (obstacle-proximity risk)
};

// Adversary episode reward, recomputable from the episode trace.
inline double adversary_reward(const EpisodeRecord& rec,
                               const std::vector<StlSpec>& specs,
                               const AdversaryWeights& w = {}) {
  if (!rec.script) return 0.0;
  const AttackScript& s = *rec.script;

  // Disruption: compliance shortfall over the attack window, reward in
  // [-1, 1] mapped to [0, 1].
  double sum = 0;
  long n = 0;
  double min_clearance = std::numeric_limits<double>::infinity();
  int s1 = -1;
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (specs[i].id == "S1") s1 = static_cast<int>(i);
  for (const auto& step : rec.steps) {
    if (!s.in_window(step.t)) continue;
    sum += step.reward;
    ++n;
    if (s1 >= 0 && s1 < static_cast<int>(step.margins.size()))
      min_clearance = std::min(
          min_clearance, step.margins[static_cast<size_t>(s1)] + specs[static_cast<size_t>(s1)].param);
  }
  const double disruption = n > 0 ? std::clamp((1.0 - sum / n) / 2.0, 0.0, 1.0) : 0.0;

  // Stealthiness: fraction of the attack window before the alarm.
  double stealth = 1.0;
  if (rec.alarm_occurred && s.duration_s > 0)
    stealth = std::clamp((rec.first_alarm_t - s.start_s) / s.duration_s, 0.0, 1.0);

  // Complexity: how close to obstacles the vehicle was pushed while attacked.
  double risk = 0.0;
  if (s1 >= 0 && std::isfinite(min_clearance)) {
    const double cp = specs[static_cast<size_t>(s1)].param;
    risk = std::clamp(1.0 - min_clearance / (2.0 * cp), 0.0, 1.0);
  }
  return w.alpha * disruption + w.beta * stealth + w.gamma_c * risk;
}

struct AdversarialRun {
  int episodes_per_block = 200;
  int max_alternations = 10;
  double eps_conv = 1e-3;
  double sg_lr = 1e-3;
  double aa_lr = 1e-3;
  double clip = 0.2;
  double entropy_coef = 0.005;
  double gamma = 0.9;
  int batch_episodes = 8;
  int epochs = 4;
  std::uint64_t seed = 1;
  bool random_curriculum = false;  // naive baseline instead of the agent
  AdversaryWeights weights;
};

struct AdversarialResult {
  PolicyParams sg;
  AttackAgentParams aa;
  std::vector<double> r_sg;     // per-episode zero-sum returns
  std::vector<double> r_aa;
  bool converged = false;
  int alternations = 0;
};

namespace detail {

// REINFORCE gradient for one attack-agent sample; accumulates d(-adv * logp).
inline void attack_agent_grads(const AttackAgentParams& p,
                               const AttackSample& sample, double advantage,
                               Mlp::Grads& grads) {
  Mlp::Cache cache;
  const auto out = p.net.forward(p.norm.apply(sample.obs), &cache);
  std::vector<double> dout(out.size(), 0.0);

  std::vector<double> sensor_logits(out.begin(), out.begin() + kNumSensors);
  const auto sp = softmax(sensor_logits);
  for (int k = 0; k < kNumSensors; ++k)
    dout[static_cast<size_t>(k)] =
        -advantage * ((k == sample.sensor ? 1.0 : 0.0) - sp[static_cast<size_t>(k)]);

  std::vector<double> pattern_logits(out.begin() + kNumSensors,
                                     out.begin() + kNumSensors + 3);
  const auto pp = softmax(pattern_logits);
  for (int k = 0; k < 3; ++k)
    dout[static_cast<size_t>(kNumSensors + k)] =
        -advantage * ((k == sample.pattern ? 1.0 : 0.0) - pp[static_cast<size_t>(k)]);

  // Gaussian exploration on the scalar heads: dlogp/dmean = noise/sigma^2.
  const double inv_var = 1.0 / (kAttackHeadNoise * kAttackHeadNoise);
  dout[kNumSensors + 3] = -advantage * sample.noise_mag * inv_var;
  dout[kNumSensors + 4] = -advantage * sample.noise_start * inv_var;
  dout[kNumSensors + 5] = -advantage * sample.noise_dur * inv_var;

  p.net.backward(cache, dout, grads);
}

}  // namespace detail

// Alternating zero-sum training (SpecGuard vs the attack agent). Per episode
// the players' returns satisfy R_SG + R_AA = 0 exactly; SpecGuard's gradient
// signal inside its blocks remains the per-step compliance reward.
inline AdversarialResult train_adversarial(const PolicyParams& sg_init,
                                           const ScenarioConfig& base_cfg,
                                           const AdversarialRun& run) {
  AdversarialResult result;
  result.sg = sg_init;
  result.aa = make_attack_agent(run.seed);
  Adam sg_opt(run.sg_lr);
  Adam vf_opt(1e-2);
  Adam aa_opt(run.aa_lr);

  ScenarioConfig cfg = base_cfg;
  if (cfg.recovery == RecoveryMode::none) cfg.recovery = RecoveryMode::reactive;
  cfg.attack_source = AttackSource::agent;

  Rng root(run.seed ^ 0x5a5a5a5a5a5a5a5aULL);
  Rng env_probe = root.fork(99);
  Environment env_tmpl = build_environment(cfg, env_probe);
  const auto specs = cfg.vehicle.kind == VehicleKind::rover
                         ? rover_catalog(env_tmpl.waypoints, cfg.catalog)
                         : quadcopter_catalog(env_tmpl.waypoints, cfg.catalog);

  EpisodeRecord prev_record;
  bool have_prev = false;
  double aa_baseline = 0;
  long aa_count = 0;
  long episode = 0;

  for (int alt = 0; alt < run.max_alternations; ++alt) {
    result.alternations = alt + 1;
    const bool sg_block = alt % 2 == 0;

    std::vector<Transition> batch;
    std::vector<AttackSample> aa_samples;
    std::vector<double> aa_returns;

    for (int ep = 0; ep < run.episodes_per_block; ++ep, ++episode) {
      Rng ep_rng = root.fork(static_cast<std::uint64_t>(episode) + 1);
      const auto obs = attack_observation(have_prev ? &prev_record : nullptr,
                                          cfg.mission_timeout_s);
      AttackSample sample;
      AttackScript script =
          run.random_curriculum
              ? random_attack_script(cfg.sensors, cfg.vehicle.dt,
                                     cfg.mission_timeout_s, ep_rng,
                                     cfg.detector_multiplier)
              : attack_agent_act(result.aa, obs, cfg.sensors, cfg.vehicle.dt,
                                 cfg.mission_timeout_s, ep_rng,
                                 cfg.detector_multiplier, &sample);

      ScenarioConfig ep_cfg = cfg;
      ep_cfg.seed = ep_rng.next_u64();

      std::vector<Transition> ep_transitions;
      MissionCallbacks cb;
      Rng action_rng = ep_rng.fork(7);
      cb.choose_action = [&](const std::vector<double>& input, int /*guide*/,
                             int num_actions) {
        const auto logits = result.sg.pi.forward(result.sg.norm.apply(input));
        std::vector<double> head(logits.begin(), logits.begin() + num_actions);
        const auto probs = softmax(head);
        int a = num_actions - 1;
        if (sg_block) {
          double u = action_rng.uniform01();
          for (int i = 0; i < num_actions; ++i) {
            u -= probs[static_cast<size_t>(i)];
            if (u <= 0) { a = i; break; }
          }
        } else {
          a = 0;
          for (int i = 1; i < num_actions; ++i)
            if (probs[static_cast<size_t>(i)] > probs[static_cast<size_t>(a)]) a = i;
        }
        Transition tr;
        tr.input = input;
        tr.action = a;
        tr.num_actions = num_actions;
        tr.logp_old = std::log(std::max(probs[static_cast<size_t>(a)], 1e-300));
        ep_transitions.push_back(std::move(tr));
        return static_cast<RecoveryAction>(a);
      };
      cb.on_transition = [&](const std::vector<double>&, RecoveryAction,
                             double reward) {
        if (!ep_transitions.empty()) ep_transitions.back().reward = reward;
      };

      EpisodeRecord rec = run_mission(ep_cfg, &result.sg, &script, &cb, true);
      const double r_aa = adversary_reward(rec, specs, run.weights);
      const double r_sg = -r_aa;  // zero-sum by construction
      result.r_aa.push_back(r_aa);
      result.r_sg.push_back(r_sg);

      if (sg_block) {
        double g = 0;
        for (auto it = ep_transitions.rbegin(); it != ep_transitions.rend(); ++it) {
          g = it->reward + run.gamma * g;
          it->ret = g;
        }
        for (auto& tr : ep_transitions) batch.push_back(std::move(tr));
      } else if (!run.random_curriculum) {
        aa_samples.push_back(sample);
        aa_returns.push_back(r_aa);
      }
      prev_record = std::move(rec);
      have_prev = true;

      // SpecGuard minibatch updates inside its block.
      if (sg_block && (ep + 1) % run.batch_episodes == 0 && !batch.empty()) {
        for (const auto& tr : batch) result.sg.norm.observe(tr.input);
        for (auto& tr : batch) {
          const double v =
              result.sg.vf.forward(result.sg.norm.apply(tr.input))[0];
          tr.adv = tr.ret - v;
        }
        double mean = 0, var = 0;
        for (const auto& tr : batch) mean += tr.adv;
        mean /= static_cast<double>(batch.size());
        for (const auto& tr : batch) var += (tr.adv - mean) * (tr.adv - mean);
        var /= static_cast<double>(batch.size());
        const double sd = std::sqrt(var + 1e-8);
        for (auto& tr : batch) tr.adv = (tr.adv - mean) / sd;
        for (int epoch = 0; epoch < run.epochs; ++epoch) {
          sg_opt.step(result.sg.pi, surrogate_grads(result.sg, batch, run.clip,
                                                    run.entropy_coef));
          vf_opt.step(result.sg.vf, value_grads(result.sg, batch));
        }
        if (!result.sg.pi.finite())
          throw Error(ErrorCode::training_divergence,
                      "non-finite SpecGuard parameters");
        batch.clear();
      }
    }

    // Attack-agent update at the end of its block.
    if (!sg_block && !aa_samples.empty()) {
      Mlp::Grads grads;
      grads.zero_like(result.aa.net);
      for (std::size_t i = 0; i < aa_samples.size(); ++i) {
        result.aa.norm.observe(aa_samples[i].obs);
        aa_baseline += (aa_returns[i] - aa_baseline) / static_cast<double>(++aa_count);
        detail::attack_agent_grads(result.aa, aa_samples[i],
                                   aa_returns[i] - aa_baseline, grads);
      }
      grads.scale(1.0 / static_cast<double>(aa_samples.size()));
      aa_opt.step(result.aa.net, grads);
      if (!result.aa.net.finite())
        throw Error(ErrorCode::training_divergence,
                    "non-finite attack-agent parameters");
    }

    if (alt >= 1 && curve_converged(result.r_sg, run.eps_conv) &&
        curve_converged(result.r_aa, run.eps_conv)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace specrecov
