#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptcure/baseline.hpp"
#include "ptcure/errors.hpp"
#include "ptcure/net.hpp"
#include "ptcure/ortho.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

// Predictor clamp applied before exponentiation; exp(30) ~ 1e13 keeps the
// likelihood finite without overflow.
inline constexpr double kEtaMin = -30.0;
inline constexpr double kEtaMax = 30.0;

inline double clamp_eta(double v) { return std::min(kEtaMax, std::max(kEtaMin, v)); }

struct PredictorEval {
  Vector eta;       // clamped
  Vector eta_raw;   // pre-clamp, for gradient masking
  Matrix hidden;    // U, N x n_L
  ForwardCache cache;
  std::optional<Projection> projection;
};

// Full predictor pass: hidden stack, optional orthogonalized combination,
// clamp. The projection is recomputed from the batch design when
// orthogonalizing (batch-relative decomposition).
inline PredictorEval eval_predictor(const NetworkParams& params, const Matrix& x,
                                    bool orthogonalize, bool training = false,
                                    std::uint64_t dropout_seed = 0) {
  PredictorEval ev;
  ev.hidden = forward(params, x, training, dropout_seed, &ev.cache);
  if (orthogonalize) ev.projection = qr_orthonormal(with_intercept(x));
  ev.eta_raw = combine_predictor(params, x, ev.hidden, orthogonalize,
                                 orthogonalize ? &*ev.projection : nullptr);
  ev.eta = ev.eta_raw.unaryExpr([](double v) { return clamp_eta(v); });
  return ev;
}

inline Vector eta_values(const NetworkParams& params, const BaselinePartition&,
                         bool orthogonalize, const Matrix& x) {
  return eval_predictor(params, x, orthogonalize).eta;
}

// Mean negative log-likelihood of the promotion-time cure model:
//   l_i = delta_i [eta_i + log f(t_i)] - exp(eta_i) F(t_i)
inline double neg_log_likelihood(const NetworkParams& params,
                                 const BaselinePartition& baseline, bool orthogonalize,
                                 const Matrix& x, const Vector& time,
                                 const IntVector& event) {
  validate_outcomes(time, event);
  const Index n = x.rows();
  if (n == 0) throw ValidationError("neg_log_likelihood: empty batch");
  const Vector eta = eval_predictor(params, x, orthogonalize).eta;
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double lam_cum = cumulative_hazard(baseline, time[i]);
    const double cdf_i = -std::expm1(-lam_cum);
    const int k = interval_index(baseline, time[i]);
    const double log_density = baseline.log_hazards[k] - lam_cum;
    acc += event[i] * (eta[i] + log_density) - std::exp(eta[i]) * cdf_i;
  }
  return -acc / static_cast<double>(n);
}

struct ModelGradients {
  NetGradients net;
  Vector output_weights;
  double output_bias = 0.0;
  Vector linear_weights;
  double linear_bias = 0.0;
  Vector rho;
};

// Mean NLL and exact gradients for every trainable parameter, chaining
// through F, f, the hidden stack, and (when enabled) the batch projector.
inline double nll_and_gradients(const NetworkParams& params,
                                const BaselinePartition& baseline, bool orthogonalize,
                                const Matrix& x, const Vector& time,
                                const IntVector& event, ModelGradients& out,
                                bool training = false, std::uint64_t dropout_seed = 0) {
  validate_outcomes(time, event);
  const Index n = x.rows();
  if (n == 0) throw ValidationError("nll_and_gradients: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  const int j_count = baseline.intervals();

  PredictorEval ev = eval_predictor(params, x, orthogonalize, training, dropout_seed);

  double acc = 0.0;
  Vector g_eta(n);                       // dNLL/deta_i (post-clamp)
  Vector g_rho = Vector::Zero(j_count);  // dNLL/drho_j
  const Vector hazards = baseline.hazards();
  for (Index i = 0; i < n; ++i) {
    const double t_i = time[i];
    const int k = interval_index(baseline, t_i);
    double lam_cum = 0.0;
    for (int j = 0; j < k; ++j)
      lam_cum += hazards[j] * (baseline.cuts[j + 1] - baseline.cuts[j]);
    lam_cum += hazards[k] * (t_i - baseline.cuts[k]);
    const double surv = std::exp(-lam_cum);
    const double cdf_i = -std::expm1(-lam_cum);
    const double theta_i = std::exp(ev.eta[i]);

    acc += event[i] * (ev.eta[i] + baseline.log_hazards[k] - lam_cum) - theta_i * cdf_i;
    g_eta[i] = -inv_n * (event[i] - theta_i * cdf_i);

    // d/drho_j: delta([j==k] - lam_j D_j) - theta * exp(-Lambda) * lam_j D_j
    for (int j = 0; j <= k; ++j) {
      const double exposure = hazards[j] * interval_exposure(baseline, t_i, j);
      double term = -static_cast<double>(event[i]) * exposure;
      if (j == k) term += event[i];
      term -= theta_i * surv * exposure;
      g_rho[j] -= inv_n * term;
    }
  }

  // Clamp: zero gradient where the raw predictor sits outside the clamp.
  for (Index i = 0; i < n; ++i)
    if (ev.eta_raw[i] < kEtaMin || ev.eta_raw[i] > kEtaMax) g_eta[i] = 0.0;

  out.rho = std::move(g_rho);
  if (orthogonalize) {
    const Vector g_proj = project_complement(*ev.projection, g_eta);
    out.linear_weights = x.transpose() * g_eta;
    out.linear_bias = g_eta.sum();
    out.output_weights = ev.hidden.transpose() * g_proj;
    out.output_bias = 0.0;  // no bias inside the projected term
    const Matrix upstream = g_proj * params.output_weights.transpose();
    out.net = backward(params, ev.cache, upstream);
  } else {
    out.output_weights = ev.hidden.transpose() * g_eta;
    out.output_bias = g_eta.sum();
    // a linear part is inert without the projector; keep shapes packable
    out.linear_weights =
        params.has_linear_part ? Vector::Zero(params.input_dim) : Vector();
    out.linear_bias = 0.0;
    const Matrix upstream = g_eta * params.output_weights.transpose();
    out.net = backward(params, ev.cache, upstream);
  }
  return -acc * inv_n;
}

// Flat parameter packing, fixed order: (W_l, b_l)*, w_out, b_out,
// [w_lin, b_lin], rho. Shared by the optimizer and finite-difference checks.
inline Index packed_size(const NetworkParams& params, const BaselinePartition& baseline) {
  return static_cast<Index>(params.parameter_count()) + baseline.intervals();
}

inline Vector pack_parameters(const NetworkParams& params, const BaselinePartition& baseline) {
  Vector flat(packed_size(params, baseline));
  Index pos = 0;
  auto put = [&flat, &pos](const double* data, Index count) {
    flat.segment(pos, count) = Eigen::Map<const Vector>(data, count);
    pos += count;
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    put(params.weights[l].data(), params.weights[l].size());
    put(params.biases[l].data(), params.biases[l].size());
  }
  put(params.output_weights.data(), params.output_weights.size());
  flat[pos++] = params.output_bias;
  if (params.has_linear_part) {
    put(params.linear_weights.data(), params.linear_weights.size());
    flat[pos++] = params.linear_bias;
  }
  put(baseline.log_hazards.data(), baseline.log_hazards.size());
  return flat;
}

inline void unpack_parameters(const Vector& flat, NetworkParams& params,
                              BaselinePartition& baseline) {
  if (flat.size() != packed_size(params, baseline))
    throw ValidationError("unpack_parameters: size mismatch");
  Index pos = 0;
  auto take = [&flat, &pos](double* data, Index count) {
    Eigen::Map<Vector>(data, count) = flat.segment(pos, count);
    pos += count;
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    take(params.weights[l].data(), params.weights[l].size());
    take(params.biases[l].data(), params.biases[l].size());
  }
  take(params.output_weights.data(), params.output_weights.size());
  params.output_bias = flat[pos++];
  if (params.has_linear_part) {
    take(params.linear_weights.data(), params.linear_weights.size());
    params.linear_bias = flat[pos++];
  }
  take(baseline.log_hazards.data(), baseline.log_hazards.size());
}

inline Vector pack_gradients(const ModelGradients& grads, const NetworkParams& params,
                             const BaselinePartition& baseline) {
  Vector flat(packed_size(params, baseline));
  Index pos = 0;
  auto put = [&flat, &pos](const double* data, Index count) {
    flat.segment(pos, count) = Eigen::Map<const Vector>(data, count);
    pos += count;
  };
  for (std::size_t l = 0; l < grads.net.weights.size(); ++l) {
    put(grads.net.weights[l].data(), grads.net.weights[l].size());
    put(grads.net.biases[l].data(), grads.net.biases[l].size());
  }
  put(grads.output_weights.data(), grads.output_weights.size());
  flat[pos++] = grads.output_bias;
  if (params.has_linear_part) {
    put(grads.linear_weights.data(), grads.linear_weights.size());
    flat[pos++] = grads.linear_bias;
  }
  put(grads.rho.data(), grads.rho.size());
  return flat;
}

}  // namespace ptcure
