#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ptcure/optimizer.hpp"
#include "ptcure/parallel.hpp"
#include "ptcure/rng.hpp"
#include "ptcure/train.hpp"

namespace ptcure {

// Axes of the hyperparameter random search. Depth and units are sampled
// independently; all hidden layers of a trial share units/activation/dropout.
struct SearchSpace {
  std::vector<int> layer_counts{1, 2, 3};
  std::vector<int> units{64, 128, 192, 256, 320, 384, 448, 512};
  std::vector<Activation> activations{Activation::tanh, Activation::elu,
                                      Activation::relu, Activation::sigmoid};
  std::vector<double> dropout_rates{0.20, 0.35, 0.50};
  std::vector<OptimizerKind> optimizers{OptimizerKind::adam, OptimizerKind::rmsprop,
                                        OptimizerKind::sgd};
  std::vector<long> decay_steps{10, 100, 1000};
  std::vector<double> decay_rates{0.50, 0.75, 0.90};
  std::vector<LrSchedule> schedules{LrSchedule::exponential, LrSchedule::inverse_time,
                                    LrSchedule::cosine};

  bool empty() const {
    return layer_counts.empty() || units.empty() || activations.empty() ||
           dropout_rates.empty() || optimizers.empty() || decay_steps.empty() ||
           decay_rates.empty() || schedules.empty();
  }
};

// Base learning rates; the search space does not sweep lr0.
inline double default_lr0(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return 0.01;
    case OptimizerKind::adam: return 0.001;
    case OptimizerKind::rmsprop: return 0.001;
  }
  return 0.01;
}

struct TrialConfig {
  std::vector<LayerSpec> layers;
  OptimizerConfig optimizer;
};

struct TrialResult {
  int trial = 0;
  TrialConfig config;
  std::vector<double> run_val_losses;
  double mean_val_loss = std::numeric_limits<double>::infinity();
  bool diverged = false;
};

struct SearchResult {
  TrialConfig best;
  int best_trial = -1;
  double best_mean_val_loss = std::numeric_limits<double>::infinity();
  std::vector<TrialResult> trials;
};

// Uniform random search; each trial is trained runs_per_trial times with
// distinct derived seeds and scored by the mean best-validation loss.
inline SearchResult random_search(const Dataset& data, const SearchSpace& space,
                                  int n_trials, int runs_per_trial,
                                  const TrainConfig& base_train, std::uint64_t seed,
                                  int threads = 1) {
  if (space.empty()) throw ValidationError("random_search: empty search space");
  if (n_trials < 1) throw ValidationError("random_search: n_trials must be >= 1");
  if (runs_per_trial < 1) throw ValidationError("random_search: runs_per_trial must be >= 1");

  // sample the whole trial sequence up front from one stream
  auto rng = make_rng(derive_seed(seed, streams::kSearch));
  auto pick = [&rng](const auto& options) {
    std::uniform_int_distribution<std::size_t> dist(0, options.size() - 1);
    return options[dist(rng)];
  };
  std::vector<TrialConfig> configs(n_trials);
  for (int k = 0; k < n_trials; ++k) {
    TrialConfig trial;
    const int depth = pick(space.layer_counts);
    LayerSpec spec;
    spec.units = pick(space.units);
    spec.activation = pick(space.activations);
    spec.dropout = pick(space.dropout_rates);
    trial.layers.assign(depth, spec);
    trial.optimizer.kind = pick(space.optimizers);
    trial.optimizer.lr0 = default_lr0(trial.optimizer.kind);
    trial.optimizer.schedule = pick(space.schedules);
    trial.optimizer.decay_steps = pick(space.decay_steps);
    trial.optimizer.decay_rate = pick(space.decay_rates);
    configs[k] = std::move(trial);
  }

  SearchResult result;
  result.trials.resize(n_trials);
  parallel_for(n_trials, threads, [&](int k) {
    TrialResult tr;
    tr.trial = k;
    tr.config = configs[k];
    double acc = 0.0;
    for (int r = 0; r < runs_per_trial; ++r) {
      TrainConfig train = base_train;
      train.seed = derive_seed(seed, static_cast<std::uint64_t>(k) + 1,
                               static_cast<std::uint64_t>(r) + 1);
      try {
        const FitResult fit_result = fit(data, tr.config.layers, tr.config.optimizer, train);
        tr.run_val_losses.push_back(fit_result.best_val_nll);
        acc += fit_result.best_val_nll;
      } catch (const NumericalError&) {
        tr.diverged = true;
        break;
      }
    }
    if (!tr.diverged && !tr.run_val_losses.empty())
      tr.mean_val_loss = acc / static_cast<double>(tr.run_val_losses.size());
    result.trials[k] = std::move(tr);
  });

  for (const auto& tr : result.trials) {
    if (tr.diverged) continue;
    if (tr.mean_val_loss < result.best_mean_val_loss) {
      result.best_mean_val_loss = tr.mean_val_loss;
      result.best_trial = tr.trial;
      result.best = tr.config;
    }
  }
  if (result.best_trial < 0)
    throw NumericalError("random_search: every trial diverged");
  return result;
}

}  // namespace ptcure
