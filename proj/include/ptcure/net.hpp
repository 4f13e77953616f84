#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ptcure/activations.hpp"
#include "ptcure/errors.hpp"
#include "ptcure/rng.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

struct LayerSpec {
  int units = 1;
  Activation activation = Activation::relu;
  double dropout = 0.0;  // applied only while training
};

inline void validate(const LayerSpec& spec) {
  if (spec.units < 1) throw ValidationError("layer units must be >= 1");
  if (spec.dropout < 0.0 || spec.dropout >= 1.0)
    throw ValidationError("dropout rate must lie in [0, 1)");
}

// Feedforward predictor parameters. With no hidden layers the output unit
// alone reproduces the linear predictor w'x + b. The optional linear part
// (w_lin, b_lin) carries the identified linear component when the
// orthogonalized decomposition is in use.
struct NetworkParams {
  int input_dim = 0;
  std::vector<LayerSpec> specs;
  std::vector<Matrix> weights;  // layer l: n_{l-1} x n_l
  std::vector<Vector> biases;
  Vector output_weights;  // n_L (input_dim when no hidden layers)
  double output_bias = 0.0;
  bool has_linear_part = false;
  Vector linear_weights;
  double linear_bias = 0.0;

  int hidden_layers() const { return static_cast<int>(specs.size()); }
  int hidden_output_dim() const {
    return specs.empty() ? input_dim : specs.back().units;
  }
  long parameter_count() const {
    long n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    n += output_weights.size() + 1;
    if (has_linear_part) n += linear_weights.size() + 1;
    return n;
  }
};

// Glorot-uniform weights, zero biases; fully determined by the seed.
inline NetworkParams init_params(int input_dim, const std::vector<LayerSpec>& layers,
                                 std::uint64_t seed, bool linear_part = false) {
  if (input_dim < 1) throw ValidationError("init_params: input_dim must be >= 1");
  for (const auto& spec : layers) validate(spec);

  NetworkParams params;
  params.input_dim = input_dim;
  params.specs = layers;
  auto rng = make_rng(seed);
  auto glorot_fill = [&rng](Matrix& w) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index j = 0; j < w.cols(); ++j)
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
  };

  int fan_in = input_dim;
  for (const auto& spec : layers) {
    Matrix w(fan_in, spec.units);
    glorot_fill(w);
    params.weights.push_back(std::move(w));
    params.biases.push_back(Vector::Zero(spec.units));
    fan_in = spec.units;
  }
  Matrix w_out(fan_in, 1);
  glorot_fill(w_out);
  params.output_weights = w_out.col(0);
  params.output_bias = 0.0;
  if (linear_part) {
    params.has_linear_part = true;
    params.linear_weights = Vector::Zero(input_dim);
    params.linear_bias = 0.0;
  }
  return params;
}

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;    // z_l
  std::vector<Matrix> post;   // a_l after activation (and dropout when training)
  std::vector<Matrix> mask;   // inverted-dropout masks; empty in inference mode
  bool training = false;
};

// Hidden-stack forward pass; returns the last hidden representation
// (N x n_L). Dropout uses inverted scaling so inference needs no correction;
// masks are a pure function of the seed, which keeps training reproducible
// and finite-difference checks consistent.
inline Matrix forward(const NetworkParams& params, const Matrix& x, bool training,
                      std::uint64_t dropout_seed, ForwardCache* cache = nullptr) {
  if (x.cols() != params.input_dim)
    throw ValidationError("forward: input has " + std::to_string(x.cols()) +
                          " columns, expected " + std::to_string(params.input_dim));
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
    cache->mask.clear();
    cache->training = training;
  }
  auto rng = make_rng(dropout_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix a = x;
  for (int l = 0; l < params.hidden_layers(); ++l) {
    const auto& spec = params.specs[l];
    Matrix z = (a * params.weights[l]).rowwise() + params.biases[l].transpose();
    Matrix act = z.unaryExpr(
        [&spec](double v) { return activate(spec.activation, v); });
    if (training && spec.dropout > 0.0) {
      const double keep = 1.0 - spec.dropout;
      Matrix mask(z.rows(), z.cols());
      for (Index j = 0; j < mask.cols(); ++j)
        for (Index i = 0; i < mask.rows(); ++i)
          mask(i, j) = unit(rng) < keep ? 1.0 / keep : 0.0;
      act.array() *= mask.array();
      if (cache) cache->mask.push_back(std::move(mask));
    } else if (cache) {
      cache->mask.emplace_back();
    }
    if (cache) {
      cache->pre.push_back(std::move(z));
      cache->post.push_back(act);
    }
    a = std::move(act);
  }
  return a;
}

struct NetGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

// Reverse-mode pass through the hidden stack; upstream is dLoss/dU where U
// is the hidden output returned by forward().
inline NetGradients backward(const NetworkParams& params, const ForwardCache& cache,
                             const Matrix& upstream) {
  const int layers = params.hidden_layers();
  if (static_cast<int>(cache.pre.size()) != layers)
    throw ValidationError("backward: cache does not match network depth");
  if (layers > 0 && (upstream.rows() != cache.pre.back().rows() ||
                     upstream.cols() != cache.pre.back().cols()))
    throw ValidationError("backward: upstream gradient shape mismatch");

  NetGradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  Matrix delta = upstream;
  for (int l = layers - 1; l >= 0; --l) {
    const auto& spec = params.specs[l];
    if (cache.training && spec.dropout > 0.0) delta.array() *= cache.mask[l].array();
    Matrix dz(delta.rows(), delta.cols());
    const Matrix& z = cache.pre[l];
    // post holds activation after dropout; recover the raw activation value
    // from z where the derivative needs it.
    for (Index j = 0; j < dz.cols(); ++j)
      for (Index i = 0; i < dz.rows(); ++i) {
        const double zv = z(i, j);
        dz(i, j) = delta(i, j) * activate_grad(spec.activation, zv,
                                               activate(spec.activation, zv));
      }
    const Matrix& below = (l == 0) ? cache.input : cache.post[l - 1];
    grads.weights[l] = below.transpose() * dz;
    grads.biases[l] = dz.colwise().sum().transpose();
    if (l > 0) delta = dz * params.weights[l].transpose();
  }
  return grads;
}

}  // namespace ptcure
