#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ptcure/cure_model.hpp"
#include "ptcure/model.hpp"
#include "ptcure/optimizer.hpp"
#include "ptcure/rng.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

struct TrainConfig {
  int batch_size = 1024;
  int max_epochs = 200;
  int patience = 10;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  bool orthogonalize = false;
  int intervals = 10;  // J baseline intervals
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (cfg.max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  if (cfg.patience < 1) throw ValidationError("patience must be >= 1");
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0))
    throw ValidationError("validation_fraction must lie in (0, 1)");
  if (cfg.intervals < 1) throw ValidationError("baseline intervals must be >= 1");
}

struct EpochRecord {
  int epoch = 0;
  double train_nll = 0.0;
  double val_nll = 0.0;
  double lr = 0.0;
};

struct FitResult {
  CureModel model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_nll = 0.0;
  int epochs_run = 0;
};

// Deterministic validation split: shuffled by the seed, first chunk held out.
inline std::pair<std::vector<Index>, std::vector<Index>> split_validation(
    Index n, double fraction, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto rng = make_rng(derive_seed(seed, streams::kValidationSplit));
  std::shuffle(idx.begin(), idx.end(), rng);
  Index n_val = static_cast<Index>(std::lround(fraction * static_cast<double>(n)));
  n_val = std::max<Index>(1, std::min(n_val, n - 1));
  std::vector<Index> val(idx.begin(), idx.begin() + n_val);
  std::vector<Index> train(idx.begin() + n_val, idx.end());
  return {train, val};
}

namespace detail {

inline Matrix gather_rows(const Matrix& x, const std::vector<Index>& rows, Index begin,
                          Index count) {
  Matrix out(count, x.cols());
  for (Index i = 0; i < count; ++i) out.row(i) = x.row(rows[begin + i]);
  return out;
}

inline Vector gather(const Vector& v, const std::vector<Index>& rows, Index begin,
                     Index count) {
  Vector out(count);
  for (Index i = 0; i < count; ++i) out[i] = v[rows[begin + i]];
  return out;
}

inline IntVector gather(const IntVector& v, const std::vector<Index>& rows, Index begin,
                        Index count) {
  IntVector out(count);
  for (Index i = 0; i < count; ++i) out[i] = v[rows[begin + i]];
  return out;
}

}  // namespace detail

// End-to-end maximum-likelihood training: mini-batch gradient descent over
// network weights, the optional linear part, and the baseline log-hazards
// jointly; early stopping restores the best-validation parameters.
inline FitResult fit(const Dataset& data, const std::vector<LayerSpec>& layers,
                     const OptimizerConfig& opt, const TrainConfig& cfg) {
  validate(data);
  validate(cfg);
  validate(opt);
  const Index q = data.cols();
  if (cfg.orthogonalize && cfg.batch_size <= q + 1)
    throw ValidationError("orthogonalization requires batch_size > q+1 = " +
                          std::to_string(q + 1));

  auto [train_idx, val_idx] = split_validation(data.rows(), cfg.validation_fraction,
                                               cfg.seed);
  if (cfg.orthogonalize && static_cast<Index>(val_idx.size()) <= q + 1)
    throw ValidationError("validation split too small to orthogonalize");
  if (cfg.orthogonalize && static_cast<Index>(train_idx.size()) <= q + 1)
    throw ValidationError("training split too small to orthogonalize");

  std::vector<double> event_times;
  double t_max = 0.0;
  for (Index i : train_idx) {
    if (data.event[i] == 1) event_times.push_back(data.time[i]);
    t_max = std::max(t_max, data.time[i]);
  }
  if (event_times.empty())
    throw ValidationError("fit: training split contains no events");
  BaselinePartition baseline = build_partition(event_times, cfg.intervals, t_max);

  NetworkParams params = init_params(static_cast<int>(q), layers,
                                     derive_seed(cfg.seed, streams::kInit),
                                     cfg.orthogonalize);

  const Matrix val_x = detail::gather_rows(data.covariates, val_idx, 0,
                                           static_cast<Index>(val_idx.size()));
  const Vector val_t = detail::gather(data.time, val_idx, 0,
                                      static_cast<Index>(val_idx.size()));
  const IntVector val_d = detail::gather(data.event, val_idx, 0,
                                         static_cast<Index>(val_idx.size()));

  Vector flat = pack_parameters(params, baseline);
  OptimizerState state;
  state.reset(flat.size());

  NetworkParams best_params = params;
  BaselinePartition best_baseline = baseline;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int stall = 0;
  long global_step = 0;

  FitResult result;
  const Index n_train = static_cast<Index>(train_idx.size());
  std::vector<Index> order = train_idx;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto rng = make_rng(derive_seed(cfg.seed, streams::kShuffle, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    // batch boundaries; a short tail merges backwards when orthogonalizing
    std::vector<std::pair<Index, Index>> batches;
    for (Index begin = 0; begin < n_train; begin += cfg.batch_size) {
      const Index count = std::min<Index>(cfg.batch_size, n_train - begin);
      batches.emplace_back(begin, count);
    }
    if (cfg.orthogonalize && batches.size() > 1 && batches.back().second <= q + 1) {
      const auto tail = batches.back();
      batches.pop_back();
      batches.back().second += tail.second;
    }

    double epoch_loss = 0.0;
    Index seen = 0;
    double lr = lr_at(opt, global_step);
    int batch_no = 0;
    for (const auto& [begin, count] : batches) {
      const Matrix bx = detail::gather_rows(data.covariates, order, begin, count);
      const Vector bt = detail::gather(data.time, order, begin, count);
      const IntVector bd = detail::gather(data.event, order, begin, count);
      ModelGradients grads;
      const std::uint64_t drop_seed =
          derive_seed(cfg.seed, streams::kDropout, (static_cast<std::uint64_t>(epoch) << 20) +
                                                      static_cast<std::uint64_t>(batch_no));
      const double loss = nll_and_gradients(params, baseline, cfg.orthogonalize, bx, bt,
                                            bd, grads, /*training=*/true, drop_seed);
      if (!std::isfinite(loss))
        throw NumericalError("training loss diverged at epoch " + std::to_string(epoch));
      epoch_loss += loss * static_cast<double>(count);
      seen += count;
      lr = lr_at(opt, global_step);
      Vector g = pack_gradients(grads, params, baseline);
      optimizer_step(opt, state, flat, g, lr);
      unpack_parameters(flat, params, baseline);
      ++global_step;
      ++batch_no;
    }

    const double val_nll = neg_log_likelihood(params, baseline, cfg.orthogonalize,
                                              val_x, val_t, val_d);
    if (!std::isfinite(val_nll))
      throw NumericalError("validation loss diverged at epoch " + std::to_string(epoch));
    result.history.push_back({epoch, epoch_loss / static_cast<double>(seen), val_nll, lr});
    result.epochs_run = epoch;

    if (val_nll < best_val) {
      best_val = val_nll;
      best_epoch = epoch;
      best_params = params;
      best_baseline = baseline;
      stall = 0;
    } else {
      ++stall;
      if (stall >= cfg.patience) break;
    }
  }

  result.best_epoch = best_epoch;
  result.best_val_nll = best_val;
  result.model.net = std::move(best_params);
  result.model.baseline = std::move(best_baseline);
  result.model.orthogonalize = cfg.orthogonalize;
  std::vector<std::string> names = data.feature_names;
  if (names.empty())
    for (Index c = 0; c < q; ++c) names.push_back("x" + std::to_string(c + 1));
  result.model.preprocessing = identity_pipeline(names);
  result.model.feature_names = std::move(names);
  return result;
}

}  // namespace ptcure
