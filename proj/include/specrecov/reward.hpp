#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "specrecov/error.hpp"
#include "specrecov/stl.hpp"

namespace specrecov {

// Per-spec sigmoid reward shapes. Families cover the catalog's piecewise
// forms: a bipolar high-saturating shape for collision clearance, unipolar
// low/high-pass shapes for one-sided limits, a band shape for two-sided
// limits, and a two-factor product for the drone geofence.
enum class ShapeFamily {
  bipolar_high,  // f > a: 1, else 2/(1+e^{-k(f-a)}) - 1; range [-1, 1]
  low_pass,      // f > a: 0, else 1/(1+e^{k(f-a)})
  high_pass,     // f < a: 0, else 1/(1+e^{-k(f-a)})
  unipolar_high, // f > a: 1, else 1/(1+e^{-k(f-a)})
  band,          // a < f < b: rising * falling product, else 0
  two_factor,    // h,v > a: product of rising sigmoids, else 0
};

struct RewardShape {
  std::string spec_id;
  ShapeFamily family = ShapeFamily::high_pass;
  double k = 1.0;   // steepness, > 0
  double a = 0.0;   // threshold
  double b = 0.0;   // upper threshold (band only)

  double lo() const { return family == ShapeFamily::bipolar_high ? -1.0 : 0.0; }
  double hi() const { return 1.0; }
  // Value at full satisfaction; inactive specs contribute this.
  static constexpr double saturated = 1.0;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Piecewise sigmoid reward over the raw condition value f(c).
inline double rho(const RewardShape& shape, double f) {
  const double k = shape.k, a = shape.a;
  switch (shape.family) {
    case ShapeFamily::bipolar_high:
      return f > a ? 1.0 : 2.0 * sigmoid(k * (f - a)) - 1.0;
    case ShapeFamily::low_pass:
      return f > a ? 0.0 : sigmoid(-k * (f - a));
    case ShapeFamily::high_pass:
      return f < a ? 0.0 : sigmoid(k * (f - a));
    case ShapeFamily::unipolar_high:
      return f > a ? 1.0 : sigmoid(k * (f - a));
    case ShapeFamily::band:
      return (f > a && f < shape.b)
                 ? sigmoid(k * (f - a)) * sigmoid(-k * (f - shape.b))
                 : 0.0;
    case ShapeFamily::two_factor:
      throw Error(ErrorCode::config,
                  "two-factor shape needs rho_two_factor(h, v)");
  }
  return 0.0;
}

inline double rho_two_factor(const RewardShape& shape, double h, double v) {
  if (shape.family != ShapeFamily::two_factor)
    throw Error(ErrorCode::config, "shape is not two-factor");
  if (!(h > shape.a && v > shape.a)) return 0.0;
  return sigmoid(shape.k * (h - shape.a)) * sigmoid(shape.k * (v - shape.a));
}

// Default shape for a catalog spec id.
inline RewardShape shape_for_spec(const StlSpec& spec, double k = 1.0) {
  RewardShape s;
  s.spec_id = spec.id;
  s.k = k;
  s.a = spec.param;
  const std::string base = spec.id.substr(0, spec.id.find('_'));
  if (base == "S1") {
    s.family = ShapeFamily::bipolar_high;
  } else if (base == "S2" || base == "S4" || base == "S5" || base == "S8" ||
             base == "S10") {
    // S10 rewards climb rate >= a; treat like the rising forms below.
    s.family = base == "S10" ? ShapeFamily::high_pass : ShapeFamily::low_pass;
  } else if (base == "S3" || base == "S7" || base == "S9" || base == "S11") {
    s.family = (base == "S9" || base == "S11") ? ShapeFamily::low_pass
                                               : ShapeFamily::high_pass;
  } else if (base == "S6") {
    s.family = ShapeFamily::unipolar_high;
  } else if (base == "S12") {
    s.family = spec.condition == "geofence_margin_h" ? ShapeFamily::high_pass
                                                     : ShapeFamily::two_factor;
  } else {
    s.family = ShapeFamily::high_pass;
  }
  return s;
}

// One spec's condition evaluation for the reward engine.
struct SpecEval {
  double f = 0;       // raw condition value f(c)
  double f2 = 0;      // second factor (vertical fence margin), two-factor only
  bool active = true; // phase gate; inactive specs count as fully satisfied
};

inline double spec_reward(const RewardShape& shape, const SpecEval& ev) {
  if (!ev.active) return RewardShape::saturated;
  if (shape.family == ShapeFamily::two_factor)
    return rho_two_factor(shape, ev.f, ev.f2);
  return rho(shape, ev.f);
}

// Cumulative compliance reward: weighted mean of the per-spec sigmoid
// rewards, in [-1, 1].
inline double cumulative_reward(const std::vector<StlSpec>& specs,
                                const std::vector<SpecEval>& evals,
                                const std::vector<RewardShape>& shapes) {
  if (specs.empty())
    throw Error(ErrorCode::config, "cumulative reward over empty spec set");
  if (evals.size() != specs.size() || shapes.size() != specs.size())
    throw Error(ErrorCode::config, "spec/eval/shape size mismatch");
  double num = 0, den = 0;
  for (size_t i = 0; i < specs.size(); ++i) {
    num += specs[i].weight * spec_reward(shapes[i], evals[i]);
    den += specs[i].weight;
  }
  return num / den;
}

// Binary baseline: 1 if the comparator holds, 0 otherwise, normalized the
// same way as cumulative_reward.
inline double binary_reward(const std::vector<StlSpec>& specs,
                            const std::vector<SpecEval>& evals) {
  if (specs.empty())
    throw Error(ErrorCode::config, "binary reward over empty spec set");
  if (evals.size() != specs.size())
    throw Error(ErrorCode::config, "spec/eval size mismatch");
  double num = 0, den = 0;
  for (size_t i = 0; i < specs.size(); ++i) {
    double v = 1.0;
    if (evals[i].active) {
      double f = evals[i].f;
      if (shape_for_spec(specs[i]).family == ShapeFamily::two_factor)
        f = std::min(evals[i].f, evals[i].f2);
      v = specs[i].holds(f) ? 1.0 : 0.0;
    }
    num += specs[i].weight * v;
    den += specs[i].weight;
  }
  return num / den;
}

// Evaluate all conditions for the reward engine against a (possibly
// estimated) state. When monitor statuses are supplied, an eventually-spec
// that has already been satisfied stays satisfied for reward purposes (the
// F latch is monotone), so reaching one waypoint is not penalized while
// flying to the next.
inline std::vector<SpecEval> evaluate_specs(
    const std::vector<StlSpec>& specs, const VehicleState& state,
    const Environment& env, const std::vector<SpecStatus>* statuses = nullptr) {
  std::vector<SpecEval> evals(specs.size());
  for (size_t i = 0; i < specs.size(); ++i) {
    SpecEval& ev = evals[i];
    ev.active = specs[i].active(env.phase);
    if (statuses && i < statuses->size() &&
        specs[i].op == TemporalOp::eventually &&
        (*statuses)[i].satisfied_once)
      ev.active = false;
    if (!ev.active) continue;
    if (specs[i].condition == "geofence_margin") {
      ev.f = env.horizontal_fence_margin(state);
      ev.f2 = env.vertical_fence_margin(state);
    } else {
      ev.f = evaluate_condition(specs[i], state, env);
      ev.f2 = ev.f;
    }
  }
  return evals;
}

inline std::vector<RewardShape> shapes_for_catalog(
    const std::vector<StlSpec>& specs, double k = 1.0) {
  std::vector<RewardShape> shapes;
  shapes.reserve(specs.size());
  for (const auto& s : specs) shapes.push_back(shape_for_spec(s, k));
  return shapes;
}

}  // namespace specrecov
