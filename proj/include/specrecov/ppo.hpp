#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

#include "specrecov/error.hpp"
#include "specrecov/mission.hpp"
#include "specrecov/policy.hpp"

namespace specrecov {

struct TrainingRun {
  long total_step_budget = 30000;   // policy-controlled transitions
  int batch_episodes = 8;
  int epochs = 4;
  double lr = 3e-3;
  double value_lr = 1e-2;
  double clip = 0.2;
  double gae_lambda = 0.9;          // 1.0 = plain reward-to-go advantages
  double guide_eps = 0.0;           // tracker-imitation mix, decays to zero
  double entropy_coef = 0.02;
  long entropy_decay_steps = 20000; // linear decay to zero
  double gamma = 0.9;
  std::uint64_t seed = 1;
  int jobs = 1;                     // rollout collection threads
};

struct Transition {
  std::vector<double> input;
  int action = 0;
  int num_actions = kNumActions;
  double logp_old = 0;
  double reward = 0;
  double ret = 0;   // discounted reward-to-go
  double adv = 0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<double> episode_rewards;  // mean policy-step reward per episode
  std::vector<long> episode_steps;      // cumulative policy steps at episode end
  long steps_used = 0;
};

// --- reward-curve helpers ---------------------------------------------------

inline std::vector<double> moving_average(const std::vector<double>& v,
                                          int window) {
  std::vector<double> out;
  if (window <= 0 || v.empty()) return out;
  double sum = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += v[i];
    if (i >= static_cast<std::size_t>(window)) sum -= v[i - window];
    const int n = std::min<int>(window, static_cast<int>(i) + 1);
    out.push_back(sum / n);
  }
  return out;
}

// Least-squares slope of y over unit-spaced x.
inline double lsq_slope(const std::vector<double>& y) {
  const std::size_t n = y.size();
  if (n < 2) return 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += i;
    sy += y[i];
    sxx += static_cast<double>(i) * i;
    sxy += i * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0) return 0;
  return (n * sxy - sx * sy) / denom;
}

// Convergence: |slope| of the smoothed curve's tail below eps.
inline bool curve_converged(const std::vector<double>& rewards, double eps,
                            int ma_window = 50, int slope_points = 20) {
  if (static_cast<int>(rewards.size()) < ma_window + slope_points) return false;
  const auto smooth = moving_average(rewards, ma_window);
  std::vector<double> tail(smooth.end() - slope_points, smooth.end());
  return std::abs(lsq_slope(tail)) < eps;
}

// First step count at which the smoothed curve reaches `frac` of its plateau
// (mean of the last 10%); -1 if never.
inline long steps_to_plateau(const std::vector<double>& rewards,
                             const std::vector<long>& steps, double frac,
                             int ma_window = 25) {
  if (rewards.empty() || rewards.size() != steps.size()) return -1;
  const auto smooth = moving_average(rewards, ma_window);
  const std::size_t tail = std::max<std::size_t>(1, smooth.size() / 10);
  double plateau = 0;
  for (std::size_t i = smooth.size() - tail; i < smooth.size(); ++i)
    plateau += smooth[i];
  plateau /= tail;
  const double floor = smooth.front();
  const double target = floor + frac * (plateau - floor);
  if (plateau <= floor) return steps.front();
  for (std::size_t i = 0; i < smooth.size(); ++i)
    if (smooth[i] >= target) return steps[i];
  return -1;
}

// --- surrogate objective ----------------------------------------------------

namespace detail {

inline double log_prob(const std::vector<double>& probs, int a) {
  return std::log(std::max(probs[static_cast<size_t>(a)], 1e-300));
}

inline double entropy(const std::vector<double>& probs, int n) {
  double h = 0;
  for (int i = 0; i < n; ++i)
    if (probs[static_cast<size_t>(i)] > 0)
      h -= probs[static_cast<size_t>(i)] * std::log(probs[static_cast<size_t>(i)]);
  return h;
}

}  // namespace detail

// Mean clipped-surrogate loss with entropy bonus over a frozen batch.
inline double surrogate_loss(const PolicyParams& p,
                             const std::vector<Transition>& batch, double clip,
                             double ent_coef) {
  if (batch.empty()) return 0;
  double loss = 0;
  for (const auto& tr : batch) {
    const auto logits = p.pi.forward(p.norm.apply(tr.input));
    std::vector<double> head(logits.begin(), logits.begin() + tr.num_actions);
    const auto probs = softmax(head);
    const double ratio =
        std::exp(detail::log_prob(probs, tr.action) - tr.logp_old);
    const double unclipped = ratio * tr.adv;
    const double clipped =
        std::clamp(ratio, 1.0 - clip, 1.0 + clip) * tr.adv;
    loss += -std::min(unclipped, clipped) -
            ent_coef * detail::entropy(probs, tr.num_actions);
  }
  return loss / static_cast<double>(batch.size());
}

// Analytic gradient of surrogate_loss w.r.t. the policy network parameters.
inline Mlp::Grads surrogate_grads(const PolicyParams& p,
                                  const std::vector<Transition>& batch,
                                  double clip, double ent_coef) {
  Mlp::Grads grads;
  grads.zero_like(p.pi);
  if (batch.empty()) return grads;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& tr : batch) {
    Mlp::Cache cache;
    const auto logits = p.pi.forward(p.norm.apply(tr.input), &cache);
    const int n = tr.num_actions;
    std::vector<double> head(logits.begin(), logits.begin() + n);
    const auto probs = softmax(head);
    const double logp = detail::log_prob(probs, tr.action);
    const double ratio = std::exp(logp - tr.logp_old);
    const double unclipped = ratio * tr.adv;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * tr.adv;

    // d(-min)/dlogp: active only when the unclipped branch is selected
    // (ties go to unclipped, matching std::min).
    double dlogp = 0;
    if (unclipped <= clipped) dlogp = -ratio * tr.adv;

    std::vector<double> dout(logits.size(), 0.0);
    const double h = detail::entropy(probs, n);
    for (int k = 0; k < n; ++k) {
      const double pk = probs[static_cast<size_t>(k)];
      const double dlogp_dz = (k == tr.action ? 1.0 : 0.0) - pk;
      const double dh_dz = -pk * (std::log(std::max(pk, 1e-300)) + h);
      dout[static_cast<size_t>(k)] =
          scale * (dlogp * dlogp_dz - ent_coef * dh_dz);
    }
    p.pi.backward(cache, dout, grads);
  }
  return grads;
}

inline double value_loss(const PolicyParams& p,
                         const std::vector<Transition>& batch) {
  if (batch.empty()) return 0;
  double loss = 0;
  for (const auto& tr : batch) {
    const double v = p.vf.forward(p.norm.apply(tr.input))[0];
    loss += (v - tr.ret) * (v - tr.ret);
  }
  return loss / static_cast<double>(batch.size());
}

inline Mlp::Grads value_grads(const PolicyParams& p,
                              const std::vector<Transition>& batch) {
  Mlp::Grads grads;
  grads.zero_like(p.vf);
  if (batch.empty()) return grads;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& tr : batch) {
    Mlp::Cache cache;
    const double v = p.vf.forward(p.norm.apply(tr.input), &cache)[0];
    p.vf.backward(cache, {scale * 2.0 * (v - tr.ret)}, grads);
  }
  return grads;
}

// --- rollout collection -----------------------------------------------------

struct EpisodeRollout {
  std::vector<Transition> transitions;
  double mean_reward = 0;
  EpisodeRecord record;
};

// One policy-driven episode; transitions cover exactly the policy-controlled
// steps (all steps in proactive mode, alarm windows in reactive mode).
inline EpisodeRollout collect_episode(const ScenarioConfig& cfg,
                                      const PolicyParams& policy,
                                      std::uint64_t episode_seed, double gamma,
                                      bool explore = true,
                                      double guide_eps = 0.0) {
  EpisodeRollout out;
  Rng action_rng(episode_seed);
  ScenarioConfig ep_cfg = cfg;
  ep_cfg.seed = episode_seed;

  MissionCallbacks cb;
  cb.choose_action = [&](const std::vector<double>& input, int guide,
                         int num_actions) {
    for (double v : input)
      if (!std::isfinite(v))
        throw Error(ErrorCode::rejected_input, "non-finite policy input");
    // Behavior distribution: the policy head (softmax over the first
    // num_actions logits, matching the surrogate) mixed with a point mass on
    // the tracker's preferred action. Log-probs are taken from the mixture,
    // so the surrogate ratio stays an importance weight and the update
    // distills the guided behavior into the policy.
    const auto logits = policy.pi.forward(policy.norm.apply(input));
    std::vector<double> head(logits.begin(), logits.begin() + num_actions);
    auto probs = softmax(head);
    if (guide_eps > 0 && guide >= 0 && guide < num_actions) {
      for (auto& p : probs) p *= 1.0 - guide_eps;
      probs[static_cast<size_t>(guide)] += guide_eps;
    }
    int a = num_actions - 1;
    if (explore) {
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
    out.transitions.push_back(std::move(tr));
    return static_cast<RecoveryAction>(a);
  };
  cb.on_transition = [&](const std::vector<double>&, RecoveryAction,
                         double reward) {
    if (!out.transitions.empty()) out.transitions.back().reward = reward;
  };

  out.record = run_mission(ep_cfg, &policy, nullptr, &cb, /*log_steps=*/false);

  // Discounted reward-to-go over the episode's policy-step sequence.
  double g = 0;
  for (auto it = out.transitions.rbegin(); it != out.transitions.rend(); ++it) {
    g = it->reward + gamma * g;
    it->ret = g;
  }
  double sum = 0;
  for (const auto& tr : out.transitions) sum += tr.reward;
  out.mean_reward = out.transitions.empty()
                        ? out.record.mean_reward
                        : sum / static_cast<double>(out.transitions.size());
  return out;
}

// Phase-1 policy-gradient training over a scenario set. Scenarios determine
// the variant: proactive configs train on whole missions, reactive configs
// (with scripted attacks and the oracle detector) train on alarm segments
// only. Deterministic given run.seed, including with jobs > 1: episode seeds
// depend only on the episode index and gradients reduce in index order.
inline TrainResult train_phase1(const std::vector<ScenarioConfig>& scenarios,
                                const TrainingRun& run) {
  if (scenarios.empty())
    throw Error(ErrorCode::config, "empty scenario set");
  const int width = scenarios.front().policy_input_width;
  for (const auto& s : scenarios)
    if (s.policy_input_width != width)
      throw Error(ErrorCode::config, "mixed policy input widths");

  TrainResult result;
  result.params = make_policy(width, run.seed);
  Adam pi_opt(run.lr);
  Adam vf_opt(run.value_lr);

  long episode_index = 0;
  while (result.steps_used < run.total_step_budget) {
    // Collect a batch of rollouts against a frozen parameter snapshot. The
    // imitation mix fades out linearly over the step budget so the final
    // policy is shaped by its own on-policy experience.
    const double guide_eps =
        run.guide_eps *
        std::max(0.0, 1.0 - static_cast<double>(result.steps_used) /
                                static_cast<double>(run.total_step_budget));
    const int n = run.batch_episodes;
    std::vector<EpisodeRollout> rollouts(static_cast<size_t>(n));
    auto collect = [&](int i) {
      const long idx = episode_index + i;
      const auto& cfg = scenarios[static_cast<size_t>(idx) % scenarios.size()];
      const std::uint64_t seed =
          run.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(idx) + 1;
      rollouts[static_cast<size_t>(i)] =
          collect_episode(cfg, result.params, seed, run.gamma,
                          /*explore=*/true, guide_eps);
    };
    if (run.jobs <= 1) {
      for (int i = 0; i < n; ++i) collect(i);
    } else {
      std::atomic<int> next{0};
      std::vector<std::thread> pool;
      const int workers = std::min(run.jobs, n);
      pool.reserve(static_cast<size_t>(workers));
      std::exception_ptr failure;
      std::mutex failure_mu;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          try {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
              collect(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
      if (failure) std::rethrow_exception(failure);
    }
    episode_index += n;

    std::vector<Transition> batch;
    for (auto& ro : rollouts) {
      result.steps_used += static_cast<long>(ro.transitions.size());
      result.episode_rewards.push_back(ro.mean_reward);
      result.episode_steps.push_back(result.steps_used);

      // Lambda-weighted TD advantages per episode. The value head bootstraps
      // mission progress outward from the states where the piecewise reward
      // is informative; lambda = 1 degrades to reward-to-go minus baseline.
      const std::size_t m = ro.transitions.size();
      std::vector<double> v(m);
      for (std::size_t i = 0; i < m; ++i)
        v[i] = result.params.vf
                   .forward(result.params.norm.apply(ro.transitions[i].input))[0];
      double gae = 0;
      for (std::size_t i = m; i-- > 0;) {
        const double v_next = i + 1 < m ? v[i + 1] : v[i];
        const double delta =
            ro.transitions[i].reward + run.gamma * v_next - v[i];
        gae = delta + run.gamma * run.gae_lambda * gae;
        ro.transitions[i].adv = gae;
        ro.transitions[i].ret = gae + v[i];  // lambda-return value target
      }
      for (auto& tr : ro.transitions) batch.push_back(std::move(tr));
    }
    if (batch.empty()) continue;

    for (const auto& tr : batch) result.params.norm.observe(tr.input);
    double mean = 0, var = 0;
    for (const auto& tr : batch) mean += tr.adv;
    mean /= static_cast<double>(batch.size());
    for (const auto& tr : batch) var += (tr.adv - mean) * (tr.adv - mean);
    var /= static_cast<double>(batch.size());
    const double sd = std::sqrt(var + 1e-8);
    for (auto& tr : batch) tr.adv = (tr.adv - mean) / sd;

    const double decay =
        std::max(0.0, 1.0 - static_cast<double>(result.steps_used) /
                                static_cast<double>(run.entropy_decay_steps));
    const double ent = run.entropy_coef * decay;

    for (int epoch = 0; epoch < run.epochs; ++epoch) {
      pi_opt.step(result.params.pi,
                  surrogate_grads(result.params, batch, run.clip, ent));
      vf_opt.step(result.params.vf, value_grads(result.params, batch));
    }
    if (!result.params.pi.finite() || !result.params.vf.finite())
      throw Error(ErrorCode::training_divergence,
                  "non-finite parameters during training");
  }
  return result;
}

}  // namespace specrecov
