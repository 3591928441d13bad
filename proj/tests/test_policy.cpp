#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "specrecov/policy.hpp"
#include "specrecov/ppo.hpp"

using namespace specrecov;

namespace {

std::vector<Transition> random_batch(const PolicyParams& p, Rng& rng, int n,
                                     int num_actions) {
  std::vector<Transition> batch;
  for (int i = 0; i < n; ++i) {
    Transition tr;
    tr.input.resize(static_cast<size_t>(p.pi.input_size()));
    for (double& v : tr.input) v = rng.uniform(-2.0, 2.0);
    tr.num_actions = num_actions;
    tr.action = static_cast<int>(rng.uniform_index(num_actions));
    const auto logits = p.pi.forward(p.norm.apply(tr.input));
    std::vector<double> head(logits.begin(), logits.begin() + num_actions);
    const auto probs = softmax(head);
    // Slightly off-policy old log-prob so the clip branch gets exercised.
    tr.logp_old = std::log(probs[static_cast<size_t>(tr.action)]) +
                  rng.uniform(-0.05, 0.05);
    tr.adv = rng.uniform(-1.5, 1.5);
    tr.ret = rng.uniform(-1.0, 1.0);
    batch.push_back(std::move(tr));
  }
  return batch;
}

// Relative error with an absolute floor for near-zero gradients.
double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

}  // namespace

TEST_CASE("softmax is a proper distribution and shift invariant") {
  const std::vector<double> logits{1.0, 2.0, 3.0};
  const auto p = softmax(logits);
  double sum = 0;
  for (double v : p) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> shifted{101.0, 102.0, 103.0};
  const auto q = softmax(shifted);
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-12));
}

TEST_CASE("equal logits break ties toward the first action") {
  auto p = make_policy(4, 1, 8);
  // Zero out the last layer so every logit is the (zero) bias.
  for (auto& w : p.pi.weights_.back()) w = 0.0;
  std::vector<double> input{0.1, 0.2, 0.3, 0.4};
  Rng rng(1);
  CHECK(act(p, input, false, rng) == RecoveryAction::pos_x);
}

TEST_CASE("a dominant logit wins the deterministic argmax") {
  auto p = make_policy(4, 1, 8);
  for (auto& w : p.pi.weights_.back()) w = 0.0;
  auto& bias = p.pi.biases_.back();
  bias[3] = 50.0;
  std::vector<double> input{0.0, 0.0, 0.0, 0.0};
  Rng rng(1);
  CHECK(act(p, input, false, rng) == RecoveryAction::neg_y);
  const auto probs = action_probabilities(p, input);
  CHECK(probs[3] > 1.0 - 1e-12);
}

TEST_CASE("exploring action sequences replay exactly under a fixed seed") {
  auto p = make_policy(6, 2, 8);
  std::vector<int> first, second;
  for (int pass = 0; pass < 2; ++pass) {
    Rng rng(1234);
    auto& out = pass == 0 ? first : second;
    Rng input_rng(9);
    for (int k = 0; k < 200; ++k) {
      std::vector<double> input(6);
      for (double& v : input) v = input_rng.uniform(-1.0, 1.0);
      out.push_back(static_cast<int>(act(p, input, true, rng)));
    }
  }
  CHECK(first == second);
}

TEST_CASE("non-finite inputs are rejected") {
  auto p = make_policy(4, 1, 8);
  std::vector<double> input{0.0, std::nan(""), 0.0, 0.0};
  CHECK_THROWS_AS(action_probabilities(p, input), Error);
}

TEST_CASE("discount-free action values rank by immediate reward") {
  // action_value(r, 0, v) = r regardless of the bootstrap term.
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    const double r1 = rng.uniform(-1.0, 1.0), r2 = rng.uniform(-1.0, 1.0);
    const double v1 = rng.uniform(-5.0, 5.0), v2 = rng.uniform(-5.0, 5.0);
    CHECK((action_value(r1, 0.0, v1) > action_value(r2, 0.0, v2)) ==
          (r1 > r2));
  }
}

TEST_CASE("two-state chain fixpoint matches hand value iteration") {
  // States A, B. From A: stay (r=0) or move to B (r=0.2). From B: stay
  // (r=1.0). gamma = 0.9. Closed form: V(B) = 1 / (1 - 0.9) = 10,
  // V(A) = 0.2 + 0.9 * 10 = 9.2.
  const double gamma = 0.9;
  double va = 0, vb = 0;
  for (int it = 0; it < 400; ++it) {
    const double na = std::max(action_value(0.0, gamma, va),
                               action_value(0.2, gamma, vb));
    const double nb = action_value(1.0, gamma, vb);
    va = na;
    vb = nb;
  }
  CHECK(vb == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(va == doctest::Approx(9.2).epsilon(1e-6));
}

TEST_CASE("weighted selection maximizes probability times action value") {
  auto p = make_policy(4, 3, 8);
  std::vector<double> input{0.5, -0.5, 0.2, 0.1};
  const auto probs = action_probabilities(p, input);
  std::vector<double> values{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  // Flat values: falls back to the most probable action.
  int argmax = 0;
  for (int i = 1; i < 6; ++i)
    if (probs[static_cast<size_t>(i)] > probs[static_cast<size_t>(argmax)])
      argmax = i;
  CHECK(static_cast<int>(act_weighted(p, input, values)) == argmax);
  // A large value on one action dominates.
  values[5] = 1e6;
  CHECK(act_weighted(p, input, values) == RecoveryAction::neg_z);
}

TEST_CASE("surrogate gradient matches central finite differences") {
  auto p = make_policy(6, 11, 8);
  Rng rng(3);
  const auto batch = random_batch(p, rng, 12, kNumActions);
  const double clip = 0.2, ent = 0.01;

  const auto grads = surrogate_grads(p, batch, clip, ent);
  auto flat = p.pi.flatten();
  std::vector<double> analytic;
  for (std::size_t l = 0; l < p.pi.num_layers(); ++l) {
    analytic.insert(analytic.end(), grads.dw[l].begin(), grads.dw[l].end());
    analytic.insert(analytic.end(), grads.db[l].begin(), grads.db[l].end());
  }

  const double h = 1e-6;
  double worst = 0;
  // Every 7th parameter keeps runtime low while covering all layers.
  for (std::size_t i = 0; i < flat.size(); i += 7) {
    auto plus = flat, minus = flat;
    plus[i] += h;
    minus[i] -= h;
    PolicyParams q = p;
    q.pi.unflatten(plus);
    const double lp = surrogate_loss(q, batch, clip, ent);
    q.pi.unflatten(minus);
    const double lm = surrogate_loss(q, batch, clip, ent);
    const double fd = (lp - lm) / (2.0 * h);
    worst = std::max(worst, rel_err(fd, analytic[i]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("value gradient matches central finite differences") {
  auto p = make_policy(6, 13, 8);
  Rng rng(5);
  const auto batch = random_batch(p, rng, 12, kNumActions);

  const auto grads = value_grads(p, batch);
  auto flat = p.vf.flatten();
  std::vector<double> analytic;
  for (std::size_t l = 0; l < p.vf.num_layers(); ++l) {
    analytic.insert(analytic.end(), grads.dw[l].begin(), grads.dw[l].end());
    analytic.insert(analytic.end(), grads.db[l].begin(), grads.db[l].end());
  }

  const double h = 1e-6;
  double worst = 0;
  for (std::size_t i = 0; i < flat.size(); i += 7) {
    auto plus = flat, minus = flat;
    plus[i] += h;
    minus[i] -= h;
    PolicyParams q = p;
    q.vf.unflatten(plus);
    const double lp = value_loss(q, batch);
    q.vf.unflatten(minus);
    const double lm = value_loss(q, batch);
    const double fd = (lp - lm) / (2.0 * h);
    worst = std::max(worst, rel_err(fd, analytic[i]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("checkpoint roundtrip preserves the content hash") {
  auto p = make_policy(24, 21);
  p.norm.observe(std::vector<double>(24, 1.0));
  p.norm.observe(std::vector<double>(24, -1.0));
  const auto path = std::string("/tmp/specrecov_test_policy.json");
  save_policy(path, p);
  const auto q = load_policy(path);
  CHECK(policy_hash(p) == policy_hash(q));
  CHECK(q.input_width == 24);
  std::remove(path.c_str());
}

TEST_CASE("running normalizer standardizes observed inputs") {
  RunningNormalizer norm(2);
  Rng rng(11);
  for (int k = 0; k < 5000; ++k)
    norm.observe({rng.gaussian(5.0, 2.0), rng.gaussian(-1.0, 0.5)});
  const auto z = norm.apply({5.0, -1.0});
  CHECK(std::abs(z[0]) < 0.1);
  CHECK(std::abs(z[1]) < 0.1);
  const auto z2 = norm.apply({7.0, -1.0});
  CHECK(z2[0] == doctest::Approx(z[0] + 1.0).epsilon(0.05));
}
