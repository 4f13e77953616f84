#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ptcure/baseline.hpp"
#include "ptcure/model.hpp"
#include "ptcure/pipeline.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

// Fitted promotion-time cure model; immutable after fit. All evaluation
// operations take covariates already mapped to the model's feature space;
// apply_pipeline(preprocessing, raw) performs that mapping for raw tables.
struct CureModel {
  NetworkParams net;
  BaselinePartition baseline;
  bool orthogonalize = false;
  FittedPipeline preprocessing;
  std::vector<std::string> feature_names;
  std::string config_digest;

  void check_features(const Matrix& x) const {
    if (x.cols() != net.input_dim)
      throw ValidationError("model expects " + std::to_string(net.input_dim) +
                            " features, got " + std::to_string(x.cols()));
  }

  // Clamped predictor.
  Vector eta(const Matrix& x) const {
    check_features(x);
    return eval_predictor(net, x, orthogonalize).eta;
  }

  Vector theta(const Matrix& x) const { return eta(x).array().exp(); }

  // S_p(t; x) = exp(-theta(x) F(t)); improper, with limit exp(-theta).
  Vector survival_population(const Matrix& x, double t) const {
    if (t < 0.0) throw ValidationError("survival_population: negative time");
    const double f_t = cdf(baseline, t);
    return (-theta(x).array() * f_t).exp();
  }

  // h_p(t; x) = theta(x) f(t).
  Vector hazard_population(const Matrix& x, double t) const {
    return theta(x) * density(baseline, t);
  }

  // pi(x) = exp(-theta(x)), the cure fraction.
  Vector cure_probability(const Matrix& x) const {
    return (-theta(x).array()).exp();
  }

  // S(t) = 1 - F(t): survival of a single latent risk factor. This is an
  // upper bound for susceptible-subject survival, not S_p.
  double risk_factor_survival(double t) const { return 1.0 - cdf(baseline, t); }

  double neg_log_likelihood(const Dataset& data) const {
    check_features(data.covariates);
    return ptcure::neg_log_likelihood(net, baseline, orthogonalize, data.covariates,
                                      data.time, data.event);
  }

  bool has_identified_linear_part() const {
    return (orthogonalize && net.has_linear_part) || net.hidden_layers() == 0;
  }

  // Identified linear coefficients (bias, weights) in encoded-column units,
  // i.e. with any training z-scoring undone. Only defined for orthogonalized
  // models and for zero-hidden-layer (plain linear) models.
  std::pair<double, Vector> linear_coefficients() const {
    Vector w;
    double b = 0.0;
    if (orthogonalize && net.has_linear_part) {
      w = net.linear_weights;
      b = net.linear_bias;
    } else if (net.hidden_layers() == 0) {
      w = net.output_weights;
      b = net.output_bias;
    } else {
      throw ValidationError("model has no identified linear part");
    }
    auto [w_raw, b_raw] = descale_linear(preprocessing, w, b);
    return {b_raw, w_raw};
  }
};

}  // namespace ptcure
