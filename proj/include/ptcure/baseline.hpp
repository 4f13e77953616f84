#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ptcure/errors.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

// Piecewise-exponential distribution of the latent risk-factor times.
// Hazard is constant on each right-closed interval (u_{j-1}, u_j]; beyond
// u_J the last hazard continues, so F is a proper CDF on [0, inf).
// Hazards are stored on the log scale; exp keeps them positive under
// unconstrained updates.
struct BaselinePartition {
  Vector cuts;         // u_0 = 0 < u_1 < ... < u_J
  Vector log_hazards;  // rho_j = log(lambda_j), j = 1..J

  int intervals() const { return static_cast<int>(log_hazards.size()); }
  Vector hazards() const { return log_hazards.array().exp(); }
};

// Type-7 (linear interpolation) sample quantile of a sorted vector.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  const auto n = static_cast<Index>(sorted.size());
  if (n == 1) return sorted[0];
  const double h = static_cast<double>(n - 1) * p;
  const auto lo = static_cast<Index>(std::floor(h));
  if (lo >= n - 1) return sorted[n - 1];
  return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

// Interior cuts at event-time quantiles j/J; the final cut sits just above
// the largest time seen so every observation falls inside the partition.
// t_max_hint extends the last cut past censored times exceeding all events.
inline BaselinePartition build_partition(const std::vector<double>& event_times,
                                         int j_intervals, double t_max_hint = 0.0) {
  if (event_times.empty()) throw ValidationError("build_partition: no event times");
  if (j_intervals < 1) throw ValidationError("build_partition: J must be >= 1");
  for (double t : event_times)
    if (!(t > 0.0) || !std::isfinite(t))
      throw ValidationError("build_partition: event times must be positive and finite");

  std::vector<double> sorted(event_times);
  std::sort(sorted.begin(), sorted.end());
  const double t_max = std::max(sorted.back(), t_max_hint);

  BaselinePartition part;
  part.cuts.resize(j_intervals + 1);
  part.cuts[0] = 0.0;
  for (int j = 1; j < j_intervals; ++j)
    part.cuts[j] = sorted_quantile(sorted, static_cast<double>(j) / j_intervals);
  part.cuts[j_intervals] = t_max * (1.0 + 1e-6);

  for (int j = 1; j <= j_intervals; ++j)
    if (!(part.cuts[j] > part.cuts[j - 1]))
      throw ValidationError(
          "build_partition: duplicate cut at quantile " + std::to_string(j) +
          "/" + std::to_string(j_intervals) + "; J exceeds distinct event times");

  part.log_hazards = Vector::Zero(j_intervals);
  return part;
}

// 0-based interval index for t > 0 with right-closed intervals; times past
// the last cut extrapolate into the final interval.
inline int interval_index(const BaselinePartition& p, double t) {
  const int j_count = p.intervals();
  const double* begin = p.cuts.data() + 1;
  const double* end = p.cuts.data() + p.cuts.size();
  const auto it = std::lower_bound(begin, end, t);  // first cut >= t
  const int idx = static_cast<int>(it - begin);
  return std::min(idx, j_count - 1);
}

inline double cumulative_hazard(const BaselinePartition& p, double t) {
  if (t < 0.0) throw ValidationError("cumulative_hazard: negative time");
  if (t == 0.0) return 0.0;
  const int k = interval_index(p, t);
  double acc = 0.0;
  for (int j = 0; j < k; ++j)
    acc += std::exp(p.log_hazards[j]) * (p.cuts[j + 1] - p.cuts[j]);
  acc += std::exp(p.log_hazards[k]) * (t - p.cuts[k]);
  return acc;
}

// F(t): CDF of the risk-factor time distribution.
inline double cdf(const BaselinePartition& p, double t) {
  if (t < 0.0) throw ValidationError("cdf: negative time");
  return -std::expm1(-cumulative_hazard(p, t));
}

// f(t) = lambda_j * (1 - F(t)), t > 0.
inline double density(const BaselinePartition& p, double t) {
  if (!(t > 0.0)) throw ValidationError("density: time must be positive");
  const int k = interval_index(p, t);
  return std::exp(p.log_hazards[k]) * std::exp(-cumulative_hazard(p, t));
}

// Time spent in interval j by a subject observed at t (d Lambda / d lambda_j).
inline double interval_exposure(const BaselinePartition& p, double t, int j) {
  if (t <= p.cuts[j]) return 0.0;
  const int j_count = p.intervals();
  const double upper = (j + 1 < j_count) ? std::min(t, p.cuts[j + 1]) : t;
  return upper - p.cuts[j];
}

inline Vector cumulative_hazard_grad_rho(const BaselinePartition& p, double t) {
  const int j_count = p.intervals();
  Vector g(j_count);
  for (int j = 0; j < j_count; ++j)
    g[j] = std::exp(p.log_hazards[j]) * interval_exposure(p, t, j);
  return g;
}

inline Vector cdf_grad_rho(const BaselinePartition& p, double t) {
  if (t < 0.0) throw ValidationError("cdf_grad_rho: negative time");
  const double surv = std::exp(-cumulative_hazard(p, t));
  return surv * cumulative_hazard_grad_rho(p, t);
}

inline Vector density_grad_rho(const BaselinePartition& p, double t) {
  if (!(t > 0.0)) throw ValidationError("density_grad_rho: time must be positive");
  const int k = interval_index(p, t);
  const double f = density(p, t);
  Vector g = -f * cumulative_hazard_grad_rho(p, t);
  g[k] += f;
  return g;
}

}  // namespace ptcure
