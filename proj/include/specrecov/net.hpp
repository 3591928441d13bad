#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "specrecov/error.hpp"
#include "specrecov/rng.hpp"

namespace specrecov {

// Small fully connected network, tanh hidden layers, linear output.
// Gradients are computed analytically; everything is double precision so the
// finite-difference checks hold tightly.
class Mlp {
public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    weights_.resize(num_layers());
    biases_.resize(num_layers());
    for (std::size_t l = 0; l < num_layers(); ++l) {
      weights_[l].assign(static_cast<size_t>(sizes_[l + 1]) * sizes_[l], 0.0);
      biases_[l].assign(static_cast<size_t>(sizes_[l + 1]), 0.0);
    }
  }

  void init(Rng& rng) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const double scale = std::sqrt(1.0 / sizes_[l]);
      for (double& w : weights_[l]) w = rng.gaussian(0, scale);
      for (double& b : biases_[l]) b = 0.0;
    }
  }

  std::size_t num_layers() const { return sizes_.size() - 1; }
  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

  struct Cache {
    std::vector<std::vector<double>> activations;  // per layer incl. input
  };

  std::vector<double> forward(const std::vector<double>& x,
                              Cache* cache = nullptr) const {
    if (static_cast<int>(x.size()) != sizes_.front())
      throw Error(ErrorCode::rejected_input, "network input size mismatch");
    std::vector<double> a = x;
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(a);
    }
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      std::vector<double> z(static_cast<size_t>(out));
      for (int o = 0; o < out; ++o) {
        double acc = biases_[l][o];
        const double* row = &weights_[l][static_cast<size_t>(o) * in];
        for (int i = 0; i < in; ++i) acc += row[i] * a[i];
        z[o] = acc;
      }
      if (l + 1 < num_layers())
        for (double& v : z) v = std::tanh(v);
      a = std::move(z);
      if (cache) cache->activations.push_back(a);
    }
    return a;
  }

  struct Grads {
    std::vector<std::vector<double>> dw, db;

    void zero_like(const Mlp& net) {
      dw.resize(net.num_layers());
      db.resize(net.num_layers());
      for (std::size_t l = 0; l < net.num_layers(); ++l) {
        dw[l].assign(net.weights_[l].size(), 0.0);
        db[l].assign(net.biases_[l].size(), 0.0);
      }
    }

    void scale(double s) {
      for (auto& v : dw) for (double& x : v) x *= s;
      for (auto& v : db) for (double& x : v) x *= s;
    }
  };

  // Accumulate parameter gradients for d(loss)/d(output) = dout.
  void backward(const Cache& cache, const std::vector<double>& dout,
                Grads& grads) const {
    std::vector<double> delta = dout;
    for (std::size_t li = num_layers(); li-- > 0;) {
      const int in = sizes_[li], out = sizes_[li + 1];
      const auto& a_in = cache.activations[li];
      for (int o = 0; o < out; ++o) {
        grads.db[li][o] += delta[o];
        double* drow = &grads.dw[li][static_cast<size_t>(o) * in];
        for (int i = 0; i < in; ++i) drow[i] += delta[o] * a_in[i];
      }
      if (li == 0) break;
      std::vector<double> prev(static_cast<size_t>(in), 0.0);
      for (int i = 0; i < in; ++i) {
        double acc = 0;
        for (int o = 0; o < out; ++o)
          acc += weights_[li][static_cast<size_t>(o) * in + i] * delta[o];
        const double a = cache.activations[li][i];  // tanh output
        prev[i] = acc * (1.0 - a * a);
      }
      delta = std::move(prev);
    }
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      out.insert(out.end(), weights_[l].begin(), weights_[l].end());
      out.insert(out.end(), biases_[l].begin(), biases_[l].end());
    }
    return out;
  }

  void unflatten(const std::vector<double>& params) {
    std::size_t pos = 0;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      for (double& w : weights_[l]) w = params[pos++];
      for (double& b : biases_[l]) b = params[pos++];
    }
    if (pos != params.size())
      throw Error(ErrorCode::rejected_input, "parameter vector size mismatch");
  }

  std::size_t num_params() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < num_layers(); ++l)
      n += weights_[l].size() + biases_[l].size();
    return n;
  }

  bool finite() const {
    for (const auto& layer : weights_)
      for (double w : layer)
        if (!std::isfinite(w)) return false;
    for (const auto& layer : biases_)
      for (double b : layer)
        if (!std::isfinite(b)) return false;
    return true;
  }

  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> biases_;

private:
  std::vector<int> sizes_;
};

class Adam {
public:
  Adam(double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Mlp& net, const Mlp::Grads& grads) {
    if (m_.dw.empty()) {
      m_.zero_like(net);
      v_.zero_like(net);
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      update(net.weights_[l], grads.dw[l], m_.dw[l], v_.dw[l], bc1, bc2);
      update(net.biases_[l], grads.db[l], m_.db[l], v_.db[l], bc1, bc2);
    }
  }

  void set_lr(double lr) { lr_ = lr; }

private:
  void update(std::vector<double>& p, const std::vector<double>& g,
              std::vector<double>& m, std::vector<double>& v, double bc1,
              double bc2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
    }
  }

  double lr_, beta1_, beta2_, eps_;
  Mlp::Grads m_, v_;
  long t_ = 0;
};

// Running input standardizer (Welford).
class RunningNormalizer {
public:
  explicit RunningNormalizer(int dim = 0)
      : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void observe(const std::vector<double>& x) {
    if (mean_.empty()) {
      mean_.assign(x.size(), 0.0);
      m2_.assign(x.size(), 0.0);
    }
    ++count_;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean_[i];
      mean_[i] += d / count_;
      m2_[i] += d * (x[i] - mean_[i]);
    }
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    if (count_ < 2) return x;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      out[i] = (x[i] - mean_[i]) / std::sqrt(m2_[i] / (count_ - 1) + 1e-8);
    return out;
  }

  long count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& m2() const { return m2_; }
  void restore(long count, std::vector<double> mean, std::vector<double> m2) {
    count_ = count;
    mean_ = std::move(mean);
    m2_ = std::move(m2);
  }

private:
  std::vector<double> mean_, m2_;
  long count_ = 0;
};

}  // namespace specrecov
