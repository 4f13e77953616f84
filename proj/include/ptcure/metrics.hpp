#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ptcure/baseline.hpp"
#include "ptcure/errors.hpp"
#include "ptcure/rng.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

// Right-continuous non-increasing step function on [0, inf), value 1 before
// the first jump.
struct StepFunction {
  std::vector<double> times;
  std::vector<double> values;

  double operator()(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }
};

// Product-limit estimator. Ties are grouped at unique times.
inline StepFunction kaplan_meier(const Vector& times, const IntVector& events) {
  if (times.size() == 0) throw ValidationError("kaplan_meier: empty input");
  validate_outcomes(times, events);
  std::map<double, std::pair<long, long>> groups;  // time -> (events, total)
  for (Index i = 0; i < times.size(); ++i) {
    auto& g = groups[times[i]];
    g.first += events[i];
    g.second += 1;
  }
  StepFunction fn;
  double surv = 1.0;
  long at_risk = times.size();
  for (const auto& [t, g] : groups) {
    if (g.first > 0) {
      surv *= 1.0 - static_cast<double>(g.first) / static_cast<double>(at_risk);
      fn.times.push_back(t);
      fn.values.push_back(surv);
    }
    at_risk -= g.second;
  }
  return fn;
}

// Reverse Kaplan-Meier: censoring survival G, obtained by flipping the
// event indicator.
inline StepFunction reverse_kaplan_meier(const Vector& times, const IntVector& events) {
  IntVector flipped = 1 - events.array();
  return kaplan_meier(times, flipped);
}

// AUC over model-implied cure probabilities. TPR/FPR weight the indicator
// 1(pi_i <= c) by susceptibility (1 - pi_i) and cure (pi_i) mass; the cut
// grid {0} + unique(pi) + {1} makes the trapezoidal sweep exact. The value
// depends only on the multiset of pi values.
inline double auc_cure(const Vector& pi_hat) {
  const Index n = pi_hat.size();
  if (n == 0) throw ValidationError("auc_cure: empty input");
  for (Index i = 0; i < n; ++i)
    if (!(pi_hat[i] >= 0.0 && pi_hat[i] <= 1.0))
      throw ValidationError("auc_cure: probabilities must lie in [0, 1]");

  std::vector<double> order(pi_hat.data(), pi_hat.data() + n);
  std::sort(order.begin(), order.end());
  const double sum_pi = pi_hat.sum();
  const double sum_comp = static_cast<double>(n) - sum_pi;
  if (sum_pi <= 0.0 || sum_comp <= 0.0) return 0.5;  // degenerate: all mass one side

  std::vector<double> cuts{0.0};
  for (double v : order)
    if (v != cuts.back()) cuts.push_back(v);
  if (cuts.back() != 1.0) cuts.push_back(1.0);

  double auc = 0.0;
  double prev_tpr = 0.0, prev_fpr = 0.0;
  double acc_t = 0.0, acc_f = 0.0;
  std::size_t pos = 0;
  for (double c : cuts) {
    while (pos < order.size() && order[pos] <= c) {
      acc_t += 1.0 - order[pos];
      acc_f += order[pos];
      ++pos;
    }
    const double tpr = acc_t / sum_comp;
    const double fpr = acc_f / sum_pi;
    auc += 0.5 * (tpr + prev_tpr) * (fpr - prev_fpr);
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  return auc;
}

struct BrierResult {
  double value = 0.0;
  int excluded = 0;  // zero-IPCW-weight subjects dropped from the sum
};

// Censoring-weighted Brier score at horizon t. G is evaluated literally at
// G(t_i) for past events and at G(t) for at-risk subjects.
inline BrierResult brier_score(const Vector& survival_at_t, const Vector& times,
                               const IntVector& events, const StepFunction& g_hat,
                               double t) {
  validate_outcomes(times, events);
  const Index n = times.size();
  if (survival_at_t.size() != n)
    throw ValidationError("brier_score: prediction/outcome size mismatch");
  BrierResult res;
  double acc = 0.0;
  const double g_t = g_hat(t);
  for (Index i = 0; i < n; ++i) {
    if (times[i] <= t && events[i] == 1) {
      const double g_i = g_hat(times[i]);
      if (g_i <= 0.0) {
        ++res.excluded;
        continue;
      }
      acc += survival_at_t[i] * survival_at_t[i] / g_i;
    } else if (times[i] > t) {
      if (g_t <= 0.0) {
        ++res.excluded;
        continue;
      }
      const double d = 1.0 - survival_at_t[i];
      acc += d * d / g_t;
    }
    // censored before t contributes nothing
  }
  res.value = acc / static_cast<double>(n);
  return res;
}

// Trapezoidal integral of the BS(t) curve over [0, tau], divided by tau.
inline double integrated_brier(const std::vector<std::pair<double, double>>& curve,
                               double tau) {
  if (curve.size() < 2)
    throw ValidationError("integrated_brier: need at least two grid points");
  if (!(tau > 0.0)) throw ValidationError("integrated_brier: tau must be positive");
  double acc = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double dt = curve[i].first - curve[i - 1].first;
    acc += 0.5 * (curve[i].second + curve[i - 1].second) * dt;
  }
  return acc / tau;
}

struct DeltaMetrics {
  double s = 0.0;
  double s_p = 0.0;
  double eta = 0.0;
};

// Mean squared differences between estimated and true (S, S_p, eta),
// pooled over subjects (and replications when vectors are concatenated).
inline DeltaMetrics delta_metrics(const Vector& s_est, const Vector& sp_est,
                                  const Vector& eta_est, const Vector& s_true,
                                  const Vector& sp_true, const Vector& eta_true) {
  const Index n = s_est.size();
  if (sp_est.size() != n || eta_est.size() != n || s_true.size() != n ||
      sp_true.size() != n || eta_true.size() != n)
    throw ValidationError("delta_metrics: vector length mismatch");
  if (n == 0) throw ValidationError("delta_metrics: empty input");
  DeltaMetrics d;
  d.s = (s_est - s_true).squaredNorm() / static_cast<double>(n);
  d.s_p = (sp_est - sp_true).squaredNorm() / static_cast<double>(n);
  d.eta = (eta_est - eta_true).squaredNorm() / static_cast<double>(n);
  return d;
}

// BS(t) on the grid {0} + unique observed times up to tau (tau defaults to
// the largest observed time).
inline std::vector<std::pair<double, double>> brier_curve(
    const Vector& theta_hat, const BaselinePartition& baseline, const Vector& times,
    const IntVector& events, int* excluded_total = nullptr) {
  const StepFunction g_hat = reverse_kaplan_meier(times, events);
  std::set<double> grid_set(times.data(), times.data() + times.size());
  std::vector<double> grid{0.0};
  grid.insert(grid.end(), grid_set.begin(), grid_set.end());
  std::vector<std::pair<double, double>> curve;
  int excluded = 0;
  for (double t : grid) {
    const double f_t = cdf(baseline, t);
    const Vector sp = (-theta_hat.array() * f_t).exp();
    const BrierResult b = brier_score(sp, times, events, g_hat, t);
    excluded += b.excluded;
    curve.emplace_back(t, b.value);
  }
  if (excluded_total) *excluded_total = excluded;
  return curve;
}

struct MetricsReport {
  double auc = 0.0;
  std::vector<std::pair<double, double>> bs_curve;
  double ibs = 0.0;
  int brier_excluded = 0;
  std::optional<DeltaMetrics> deltas;
  std::optional<double> sd_auc;
  std::optional<double> sd_ibs;
  int bootstrap_skipped = 0;
};

inline MetricsReport compute_metrics(const Vector& theta_hat,
                                     const BaselinePartition& baseline,
                                     const Vector& times, const IntVector& events) {
  MetricsReport rep;
  rep.auc = auc_cure((-theta_hat.array()).exp());
  rep.bs_curve = brier_curve(theta_hat, baseline, times, events, &rep.brier_excluded);
  rep.ibs = integrated_brier(rep.bs_curve, rep.bs_curve.back().first);
  return rep;
}

struct BootstrapResult {
  double sd_auc = 0.0;
  double sd_ibs = 0.0;
  int skipped = 0;  // degenerate replicates (non-finite metric)
};

// Row resampling with replacement; AUC and IBS recomputed per replicate
// (including the reverse-KM weights), sample SD across replicates.
inline BootstrapResult bootstrap_metrics(const Vector& theta_hat,
                                         const BaselinePartition& baseline,
                                         const Vector& times, const IntVector& events,
                                         int replicates, std::uint64_t seed) {
  if (replicates < 2) throw ValidationError("bootstrap_metrics: need B >= 2");
  const Index n = times.size();
  std::vector<double> aucs, ibss;
  BootstrapResult res;
  for (int b = 0; b < replicates; ++b) {
    auto rng = make_rng(derive_seed(seed, streams::kBootstrap, b));
    std::uniform_int_distribution<Index> pick(0, n - 1);
    Vector th(n), tt(n);
    IntVector dd(n);
    for (Index i = 0; i < n; ++i) {
      const Index j = pick(rng);
      th[i] = theta_hat[j];
      tt[i] = times[j];
      dd[i] = events[j];
    }
    double auc = std::numeric_limits<double>::quiet_NaN();
    double ibs = std::numeric_limits<double>::quiet_NaN();
    try {
      auc = auc_cure((-th.array()).exp());
      const auto curve = brier_curve(th, baseline, tt, dd);
      ibs = integrated_brier(curve, curve.back().first);
    } catch (const ValidationError&) {
      // fall through: counted as skipped
    }
    if (std::isfinite(auc) && std::isfinite(ibs)) {
      aucs.push_back(auc);
      ibss.push_back(ibs);
    } else {
      ++res.skipped;
    }
  }
  if (aucs.size() < 2)
    throw NumericalError("bootstrap_metrics: fewer than two usable replicates");
  auto sample_sd = [](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
  };
  res.sd_auc = sample_sd(aucs);
  res.sd_ibs = sample_sd(ibss);
  return res;
}

}  // namespace ptcure
