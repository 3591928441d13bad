#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "specrecov/error.hpp"
#include "specrecov/net.hpp"
#include "specrecov/rng.hpp"
#include "specrecov/vehicle.hpp"

namespace specrecov {

// Recovery control policy: a feedforward approximator over the state-derived
// input vector with one logit per discrete action, plus a value head used for
// lookahead estimates, and the input normalizer state.
struct PolicyParams {
  Mlp pi;                     // input -> 64 -> 64 -> |U|
  Mlp vf;                     // input -> 64 -> 64 -> 1
  RunningNormalizer norm;
  std::uint64_t seed = 0;
  int version = 1;
  int input_width = 12;
};

inline PolicyParams make_policy(int input_width, std::uint64_t seed,
                                int hidden = 64, int num_actions = kNumActions) {
  PolicyParams p;
  p.input_width = input_width;
  p.seed = seed;
  p.pi = Mlp({input_width, hidden, hidden, num_actions});
  p.vf = Mlp({input_width, hidden, hidden, 1});
  Rng rng(seed);
  p.pi.init(rng);
  p.vf.init(rng);
  p.norm = RunningNormalizer(input_width);
  return p;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

inline std::vector<double> action_probabilities(const PolicyParams& params,
                                                const std::vector<double>& input) {
  for (double v : input)
    if (!std::isfinite(v))
      throw Error(ErrorCode::rejected_input, "non-finite policy input");
  return softmax(params.pi.forward(params.norm.apply(input)));
}

// Action selection: deterministic argmax (ties broken by fixed action order,
// +x first) or a sample from the softmax distribution when exploring.
inline RecoveryAction act(const PolicyParams& params,
                          const std::vector<double>& input, bool explore,
                          Rng& rng, int num_actions = kNumActions) {
  const auto probs = action_probabilities(params, input);
  const int n = std::min<int>(num_actions, static_cast<int>(probs.size()));
  if (!explore) {
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (probs[i] > probs[best]) best = i;
    return static_cast<RecoveryAction>(best);
  }
  double total = 0;
  for (int i = 0; i < n; ++i) total += probs[i];
  double u = rng.uniform01() * total;
  for (int i = 0; i < n; ++i) {
    u -= probs[i];
    if (u <= 0) return static_cast<RecoveryAction>(i);
  }
  return static_cast<RecoveryAction>(n - 1);
}

// Probability-times-reward selection used in recovery mode: the caller
// supplies a one-step lookahead reward per action.
inline RecoveryAction act_weighted(const PolicyParams& params,
                                   const std::vector<double>& input,
                                   const std::vector<double>& action_rewards) {
  const auto probs = action_probabilities(params, input);
  const std::size_t n = std::min(probs.size(), action_rewards.size());
  std::size_t best = 0;
  double best_score = -1e300;
  for (std::size_t i = 0; i < n; ++i) {
    const double score = probs[i] * action_rewards[i];
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return static_cast<RecoveryAction>(best);
}

inline double state_value(const PolicyParams& params,
                          const std::vector<double>& input) {
  return params.vf.forward(params.norm.apply(input))[0];
}

// One-step action value: immediate reward of the resulting state plus the
// discounted bootstrap estimate of that state.
inline double action_value(double reward_next, double gamma, double vhat_next) {
  return reward_next + gamma * vhat_next;
}

// --- checkpoint file format -------------------------------------------------

inline nlohmann::json mlp_to_json(const Mlp& net) {
  return {{"sizes", net.sizes()}, {"params", net.flatten()}};
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net(j.at("sizes").get<std::vector<int>>());
  net.unflatten(j.at("params").get<std::vector<double>>());
  return net;
}

inline nlohmann::json policy_to_json(const PolicyParams& p) {
  return {{"version", p.version},
          {"seed", p.seed},
          {"input_width", p.input_width},
          {"pi", mlp_to_json(p.pi)},
          {"vf", mlp_to_json(p.vf)},
          {"norm",
           {{"count", p.norm.count()},
            {"mean", p.norm.mean()},
            {"m2", p.norm.m2()}}}};
}

inline PolicyParams policy_from_json(const nlohmann::json& j) {
  PolicyParams p;
  p.version = j.at("version").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.input_width = j.at("input_width").get<int>();
  p.pi = mlp_from_json(j.at("pi"));
  p.vf = mlp_from_json(j.at("vf"));
  const auto& n = j.at("norm");
  p.norm.restore(n.at("count").get<long>(),
                 n.at("mean").get<std::vector<double>>(),
                 n.at("m2").get<std::vector<double>>());
  return p;
}

inline void save_policy(const std::string& path, const PolicyParams& p) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::config, "cannot write checkpoint: " + path);
  out << policy_to_json(p).dump(2) << "\n";
}

inline PolicyParams load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot read checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  return policy_from_json(j);
}

// Stable content hash for run manifests.
inline std::uint64_t fnv1a_hash(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t policy_hash(const PolicyParams& p) {
  return fnv1a_hash(policy_to_json(p).dump());
}

}  // namespace specrecov
