#pragma once

#include <cmath>
#include <functional>

#include "ptcure/model.hpp"
#include "ptcure/types.hpp"

namespace testutil {

using ptcure::Index;
using ptcure::Vector;

// Central finite differences with per-coordinate relative step.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f,
                               const Vector& x, double h0 = 1e-6) {
  Vector g(x.size());
  Vector p = x;
  for (Index k = 0; k < x.size(); ++k) {
    const double h = h0 * std::max(1.0, std::abs(x[k]));
    const double orig = p[k];
    p[k] = orig + h;
    const double up = f(p);
    p[k] = orig - h;
    const double down = f(p);
    p[k] = orig;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double rel_error(const Vector& a, const Vector& b) {
  const double denom = std::max(1e-12, b.norm());
  return (a - b).norm() / denom;
}

// Flat-vector NLL closure over (net params, baseline rho) for gradient checks.
inline std::function<double(const Vector&)> nll_closure(
    ptcure::NetworkParams params, ptcure::BaselinePartition baseline, bool ortho,
    const ptcure::Matrix& x, const Vector& t, const ptcure::IntVector& d,
    bool training = false, std::uint64_t dropout_seed = 0) {
  return [params, baseline, ortho, x, t, d, training, dropout_seed](
             const Vector& flat) mutable -> double {
    ptcure::unpack_parameters(flat, params, baseline);
    if (!training)
      return ptcure::neg_log_likelihood(params, baseline, ortho, x, t, d);
    ptcure::ModelGradients unused;
    return ptcure::nll_and_gradients(params, baseline, ortho, x, t, d, unused,
                                     training, dropout_seed);
  };
}

}  // namespace testutil
