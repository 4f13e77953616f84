#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ptcure/optimizer.hpp"

using namespace ptcure;
using Catch::Approx;

TEST_CASE("lr_at implements the schedules") {
  OptimizerConfig cfg;
  cfg.lr0 = 0.01;
  cfg.decay_rate = 0.75;
  cfg.decay_steps = 100;

  SECTION("inverse time") {
    cfg.schedule = LrSchedule::inverse_time;
    REQUIRE(lr_at(cfg, 0) == Approx(0.01));
    REQUIRE(lr_at(cfg, 100) == Approx(0.01 / 1.75).epsilon(1e-12));
    REQUIRE(lr_at(cfg, 100) == Approx(0.0057143).epsilon(1e-4));
  }
  SECTION("exponential") {
    cfg.schedule = LrSchedule::exponential;
    REQUIRE(lr_at(cfg, 0) == Approx(0.01));
    REQUIRE(lr_at(cfg, 200) == Approx(0.01 * 0.75 * 0.75).epsilon(1e-12));
    REQUIRE(lr_at(cfg, 50) == Approx(0.01 * std::pow(0.75, 0.5)).epsilon(1e-12));
  }
  SECTION("cosine hits zero at the decay horizon") {
    cfg.schedule = LrSchedule::cosine;
    REQUIRE(lr_at(cfg, 0) == Approx(0.01));
    REQUIRE(lr_at(cfg, 100) == Approx(0.0).margin(1e-18));
    REQUIRE(lr_at(cfg, 500) == Approx(0.0).margin(1e-18));
    REQUIRE(lr_at(cfg, 50) == Approx(0.005).epsilon(1e-12));
  }
  SECTION("constant") {
    cfg.schedule = LrSchedule::constant;
    REQUIRE(lr_at(cfg, 12345) == 0.01);
  }
  SECTION("config validation") {
    cfg.lr0 = 0.0;
    REQUIRE_THROWS_AS(validate(cfg), ValidationError);
    cfg.lr0 = 0.01;
    cfg.decay_steps = 0;
    REQUIRE_THROWS_AS(validate(cfg), ValidationError);
  }
}

TEST_CASE("optimizer_step hand traces") {
  Vector w(1), g(1);

  SECTION("sgd") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::sgd;
    OptimizerState st;
    w << 1.0;
    g << 0.5;
    optimizer_step(cfg, st, w, g, 0.1);
    REQUIRE(w[0] == Approx(0.95).epsilon(1e-15));
  }
  SECTION("adam first step moves by ~lr in the gradient direction") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::adam;
    OptimizerState st;
    w << 1.0;
    g << 0.5;
    optimizer_step(cfg, st, w, g, 0.001);
    // bias-corrected m-hat = g, v-hat = g^2, so the step is lr * sign(g)
    REQUIRE(w[0] == Approx(1.0 - 0.001 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
    REQUIRE(w[0] == Approx(0.999).epsilon(1e-6));
  }
  SECTION("rmsprop first step") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::rmsprop;
    OptimizerState st;
    w << 1.0;
    g << 0.5;
    optimizer_step(cfg, st, w, g, 0.01);
    const double v = 0.1 * 0.25;
    REQUIRE(w[0] == Approx(1.0 - 0.01 * 0.5 / (std::sqrt(v) + 1e-8)).epsilon(1e-12));
  }
  SECTION("zero gradient leaves parameters unchanged for all optimizers") {
    for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam, OptimizerKind::rmsprop}) {
      OptimizerConfig cfg;
      cfg.kind = kind;
      OptimizerState st;
      Vector w3 = Vector::Constant(3, 1.5);
      optimizer_step(cfg, st, w3, Vector::Zero(3), 0.1);
      REQUIRE((w3.array() == 1.5).all());
    }
  }
  SECTION("non-finite gradients abort") {
    OptimizerConfig cfg;
    OptimizerState st;
    w << 1.0;
    g << std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(optimizer_step(cfg, st, w, g, 0.1), NumericalError);
  }
  SECTION("size mismatch is rejected") {
    OptimizerConfig cfg;
    OptimizerState st;
    Vector w2(2);
    w2 << 1.0, 2.0;
    g.resize(1);
    g << 0.5;
    REQUIRE_THROWS_AS(optimizer_step(cfg, st, w2, g, 0.1), ValidationError);
  }
}

TEST_CASE("adam accumulates bias-corrected moments over steps") {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::adam;
  OptimizerState st;
  Vector w(1), g(1);
  w << 0.0;
  double m = 0.0, v = 0.0, ref = 0.0;
  for (int step = 1; step <= 5; ++step) {
    const double grad = 0.1 * step;
    g << grad;
    optimizer_step(cfg, st, w, g, 0.01);
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
    const double mh = m / (1.0 - std::pow(0.9, step));
    const double vh = v / (1.0 - std::pow(0.999, step));
    ref -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    REQUIRE(w[0] == Approx(ref).epsilon(1e-14));
  }
}
