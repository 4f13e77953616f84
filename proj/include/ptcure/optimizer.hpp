#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "ptcure/errors.hpp"
#include "ptcure/types.hpp"

namespace ptcure {

enum class OptimizerKind { sgd, adam, rmsprop };
enum class LrSchedule { constant, inverse_time, exponential, cosine };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double lr0 = 0.01;
  LrSchedule schedule = LrSchedule::constant;
  double decay_rate = 0.75;
  long decay_steps = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double rms_decay = 0.9;
  double rms_eps = 1e-8;
};

inline void validate(const OptimizerConfig& cfg) {
  if (!(cfg.lr0 > 0.0)) throw ValidationError("initial learning rate must be positive");
  if (cfg.decay_steps < 1) throw ValidationError("decay_steps must be >= 1");
}

inline double lr_at(const OptimizerConfig& cfg, long step) {
  const double s = static_cast<double>(step);
  const double d = static_cast<double>(cfg.decay_steps);
  switch (cfg.schedule) {
    case LrSchedule::constant: return cfg.lr0;
    case LrSchedule::inverse_time: return cfg.lr0 / (1.0 + cfg.decay_rate * s / d);
    case LrSchedule::exponential: return cfg.lr0 * std::pow(cfg.decay_rate, s / d);
    case LrSchedule::cosine: {
      const double frac = std::min(s, d) / d;
      return cfg.lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    }
  }
  return cfg.lr0;
}

struct OptimizerState {
  long step_count = 0;
  Vector m;  // Adam first moment
  Vector v;  // Adam/RMSprop accumulator

  void reset(Index n) {
    step_count = 0;
    m = Vector::Zero(n);
    v = Vector::Zero(n);
  }
};

// One update of the flat parameter vector. Throws on non-finite gradients
// so a diverged fit aborts with a diagnostic instead of poisoning weights.
inline void optimizer_step(const OptimizerConfig& cfg, OptimizerState& state,
                           Vector& params, const Vector& grads, double lr) {
  if (params.size() != grads.size())
    throw ValidationError("optimizer_step: parameter/gradient size mismatch");
  if (!grads.allFinite())
    throw NumericalError("optimizer_step: non-finite gradient at step " +
                         std::to_string(state.step_count + 1));
  if (state.m.size() != params.size()) state.reset(params.size());
  state.step_count += 1;
  switch (cfg.kind) {
    case OptimizerKind::sgd:
      params -= lr * grads;
      break;
    case OptimizerKind::adam: {
      state.m = cfg.adam_beta1 * state.m + (1.0 - cfg.adam_beta1) * grads;
      state.v = cfg.adam_beta2 * state.v.array().matrix() +
                (1.0 - cfg.adam_beta2) * grads.array().square().matrix();
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, state.step_count);
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, state.step_count);
      params.array() -= lr * (state.m.array() / bc1) /
                        ((state.v.array() / bc2).sqrt() + cfg.adam_eps);
      break;
    }
    case OptimizerKind::rmsprop: {
      state.v = cfg.rms_decay * state.v.array().matrix() +
                (1.0 - cfg.rms_decay) * grads.array().square().matrix();
      params.array() -= lr * grads.array() / (state.v.array().sqrt() + cfg.rms_eps);
      break;
    }
  }
}

inline std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::rmsprop: return "rmsprop";
  }
  return "sgd";
}

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  if (s == "rmsprop") return OptimizerKind::rmsprop;
  throw ValidationError("unknown optimizer '" + s + "'");
}

inline std::string to_string(LrSchedule s) {
  switch (s) {
    case LrSchedule::constant: return "constant";
    case LrSchedule::inverse_time: return "inverse_time";
    case LrSchedule::exponential: return "exponential";
    case LrSchedule::cosine: return "cosine";
  }
  return "constant";
}

inline LrSchedule parse_schedule(const std::string& s) {
  if (s == "constant") return LrSchedule::constant;
  if (s == "inverse_time") return LrSchedule::inverse_time;
  if (s == "exponential") return LrSchedule::exponential;
  if (s == "cosine") return LrSchedule::cosine;
  throw ValidationError("unknown learning-rate schedule '" + s + "'");
}

}  // namespace ptcure
