#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "ptcure/cure_model.hpp"
#include "ptcure/model.hpp"
#include "ptcure/train.hpp"

using namespace ptcure;
using Catch::Approx;

namespace {

CureModel linear_model(const Vector& w, double b, BaselinePartition baseline) {
  CureModel m;
  m.net = init_params(static_cast<int>(w.size()), {}, 0);
  m.net.output_weights = w;
  m.net.output_bias = b;
  m.baseline = std::move(baseline);
  m.preprocessing = identity_pipeline({});
  return m;
}

BaselinePartition unit_baseline() {
  BaselinePartition p;
  p.cuts = Vector{{0.0, 10.0}};
  p.log_hazards = Vector{{0.0}};
  return p;
}

}  // namespace

TEST_CASE("eta and theta") {
  SECTION("zero-weight net is constant at the output bias") {
    CureModel m = linear_model(Vector::Zero(2), 0.75, unit_baseline());
    const Vector eta = m.eta(Matrix::Random(5, 2));
    REQUIRE((eta.array() == 0.75).all());
  }
  SECTION("linear predictor hand value") {
    CureModel m = linear_model(Vector{{1.0, -1.0}}, 0.0, unit_baseline());
    Matrix x(1, 2);
    x << 2.0, 1.0;
    REQUIRE(m.eta(x)[0] == Approx(1.0));
    REQUIRE(m.theta(x)[0] == Approx(std::exp(1.0)));
  }
  SECTION("theta = exp(eta) identity on random inputs") {
    CureModel m = linear_model(Vector{{0.4, 0.9}}, -0.2, unit_baseline());
    const Matrix x = Matrix::Random(20, 2);
    REQUIRE((m.theta(x).array() - m.eta(x).array().exp()).abs().maxCoeff() < 1e-15);
  }
  SECTION("clamp saturates extreme predictors") {
    CureModel m = linear_model(Vector{{100.0}}, 0.0, unit_baseline());
    Matrix x(2, 1);
    x << 1.0, -1.0;
    REQUIRE(m.eta(x)[0] == 30.0);
    REQUIRE(m.eta(x)[1] == -30.0);
    REQUIRE(m.cure_probability(x)[0] == Approx(0.0).margin(1e-300));
  }
  SECTION("feature mismatch is rejected") {
    CureModel m = linear_model(Vector{{1.0, 2.0}}, 0.0, unit_baseline());
    REQUIRE_THROWS_AS(m.eta(Matrix::Random(3, 5)), ValidationError);
  }
}

TEST_CASE("survival_population") {
  CureModel m = linear_model(Vector::Zero(1), 0.0, unit_baseline());  // theta = 1
  const Matrix x = Matrix::Random(4, 1);

  SECTION("S_p(0) = 1") {
    REQUIRE((m.survival_population(x, 0.0).array() == 1.0).all());
  }
  SECTION("hand value at F = 0.5") {
    const double t_half = -std::log(0.5);  // F(t) = 1 - e^{-t} = 0.5
    const Vector sp = m.survival_population(x, t_half);
    REQUIRE(sp[0] == Approx(std::exp(-0.5)).epsilon(1e-12));
    REQUIRE(sp[0] == Approx(0.606531).epsilon(1e-6));
  }
  SECTION("limit equals the cure fraction exp(-theta)") {
    const double far = m.baseline.cuts[1] + 1e4;
    const Vector sp = m.survival_population(x, far);
    REQUIRE(std::abs(sp[0] - std::exp(-1.0)) < 1e-8);
    REQUIRE(sp[0] == Approx(0.367879).margin(1e-6));
  }
  SECTION("monotone non-increasing in t, bounded below by the cure fraction") {
    auto rng = make_rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    CureModel m2 = linear_model(Vector{{0.8}}, -0.1, unit_baseline());
    for (int rep = 0; rep < 100; ++rep) {
      Matrix xi(1, 1);
      xi << normal(rng);
      const double cure = m2.cure_probability(xi)[0];
      double prev = 1.0;
      for (int g = 0; g <= 200; ++g) {
        const double t = 12.0 * g / 200.0;
        const double sp = m2.survival_population(xi, t)[0];
        REQUIRE(sp <= prev + 1e-15);
        REQUIRE(sp >= cure - 1e-15);
        prev = sp;
      }
    }
  }
  SECTION("negative time is rejected") {
    REQUIRE_THROWS_AS(m.survival_population(x, -1.0), ValidationError);
  }
}

TEST_CASE("hazard_population") {
  CureModel m = linear_model(Vector::Zero(1), 0.0, unit_baseline());
  Matrix x(1, 1);
  x << 0.3;

  SECTION("hand value") {
    REQUIRE(m.hazard_population(x, 1.0)[0] == Approx(std::exp(-1.0)).epsilon(1e-12));
  }
  SECTION("proportional hazards: ratios are time-constant") {
    CureModel m2 = linear_model(Vector{{1.0}}, 0.2, unit_baseline());
    Matrix pair(2, 1);
    pair << 0.5, -1.3;
    double ratio0 = 0.0;
    for (double t : {0.2, 0.9, 1.7, 3.4, 7.9}) {
      const Vector h = m2.hazard_population(pair, t);
      const double ratio = h[0] / h[1];
      if (ratio0 == 0.0) ratio0 = ratio;
      REQUIRE(ratio == Approx(ratio0).epsilon(1e-12));
    }
  }
  SECTION("theta is positive by construction") {
    const Matrix wide = Matrix::Random(50, 1) * 40.0;
    REQUIRE((m.theta(wide).array() > 0.0).all());
  }
  SECTION("t = 0 is rejected") {
    REQUIRE_THROWS_AS(m.hazard_population(x, 0.0), ValidationError);
  }
}

TEST_CASE("cure_probability") {
  Matrix x(1, 1);
  x << 0.0;
  SECTION("eta = 0 gives exp(-1)") {
    CureModel m = linear_model(Vector::Zero(1), 0.0, unit_baseline());
    REQUIRE(m.cure_probability(x)[0] == Approx(std::exp(-1.0)).epsilon(1e-12));
  }
  SECTION("scenario-1 style value: theta 0.15 at the origin") {
    CureModel m = linear_model(Vector::Zero(1), std::log(0.15), unit_baseline());
    REQUIRE(m.cure_probability(x)[0] == Approx(std::exp(-0.15)).epsilon(1e-9));
    REQUIRE(m.cure_probability(x)[0] == Approx(0.860708).epsilon(1e-6));
  }
  SECTION("large eta saturates to zero") {
    CureModel m = linear_model(Vector::Zero(1), 30.0, unit_baseline());
    REQUIRE(m.cure_probability(x)[0] == Approx(0.0).margin(1e-300));
  }
}

TEST_CASE("neg_log_likelihood hand values") {
  BaselinePartition base = unit_baseline();
  NetworkParams net = init_params(1, {}, 0);
  net.output_weights.setZero();
  net.output_bias = 0.0;  // eta = 0
  Matrix x(1, 1);
  x << 0.0;
  Vector t(1);
  t << 1.0;

  IntVector event(1);
  event << 1;
  // -(eta + log f(1) - F(1)) = -(0 - 1 - (1 - e^{-1}))
  REQUIRE(neg_log_likelihood(net, base, false, x, t, event) ==
          Approx(1.0 + (1.0 - std::exp(-1.0))).epsilon(1e-12));
  REQUIRE(neg_log_likelihood(net, base, false, x, t, event) ==
          Approx(1.632121).epsilon(1e-6));

  event << 0;
  REQUIRE(neg_log_likelihood(net, base, false, x, t, event) ==
          Approx(0.632121).epsilon(1e-6));

  SECTION("duplicating every row leaves the mean unchanged") {
    auto rng = make_rng(5);
    std::uniform_real_distribution<double> unif(0.1, 3.0);
    const Index n = 17;
    Matrix xs = Matrix::Random(n, 1);
    Vector ts(n);
    IntVector ds(n);
    for (Index i = 0; i < n; ++i) {
      ts[i] = unif(rng);
      ds[i] = static_cast<int>(i % 3 == 0);
    }
    Matrix x2(2 * n, 1);
    x2 << xs, xs;
    Vector t2(2 * n);
    t2 << ts, ts;
    IntVector d2(2 * n);
    d2 << ds, ds;
    const double single = neg_log_likelihood(net, base, false, xs, ts, ds);
    const double doubled = neg_log_likelihood(net, base, false, x2, t2, d2);
    REQUIRE(single == Approx(doubled).epsilon(1e-14));
  }

  SECTION("invalid outcomes are rejected") {
    Vector bad_t(1);
    bad_t << 0.0;
    REQUIRE_THROWS_AS(neg_log_likelihood(net, base, false, x, bad_t, event),
                      ValidationError);
    IntVector bad_d(1);
    bad_d << 2;
    REQUIRE_THROWS_AS(neg_log_likelihood(net, base, false, x, t, bad_d),
                      ValidationError);
  }
}

TEST_CASE("loss gradients match finite differences on random instances") {
  auto rng = make_rng(1234);
  std::uniform_real_distribution<double> unif(0.05, 4.0);
  for (int rep = 0; rep < 6; ++rep) {
    const Index n = 16;
    const int q = 3;
    Matrix x = Matrix::Random(n, q);
    Vector t(n);
    IntVector d(n);
    std::vector<double> events;
    for (Index i = 0; i < n; ++i) {
      t[i] = unif(rng);
      d[i] = static_cast<int>(i % 2);
      if (d[i] == 1) events.push_back(t[i]);
    }
    const BaselinePartition base = build_partition(events, 3, t.maxCoeff());
    std::vector<LayerSpec> layers;
    if (rep % 3 == 1) layers.push_back({4, Activation::elu, 0.0});
    if (rep % 3 == 2)
      layers = {{5, Activation::tanh, 0.0}, {3, Activation::sigmoid, 0.0}};
    NetworkParams params = init_params(q, layers, 50 + rep);

    ModelGradients grads;
    nll_and_gradients(params, base, false, x, t, d, grads);
    const Vector analytic = pack_gradients(grads, params, base);
    auto f = testutil::nll_closure(params, base, false, x, t, d);
    const Vector fd = testutil::numeric_gradient(f, pack_parameters(params, base));
    REQUIRE(testutil::rel_error(analytic, fd) < 1e-6);
  }
}

TEST_CASE("gradients with dropout active match finite differences") {
  // masks are a pure function of the seed, so the loss stays differentiable
  const Index n = 12;
  Matrix x = Matrix::Random(n, 2);
  Vector t = Vector::Random(n).array().abs() + 0.2;
  IntVector d(n);
  for (Index i = 0; i < n; ++i) d[i] = static_cast<int>(i % 2);
  const BaselinePartition base = build_partition({0.3, 0.8, 1.1}, 2, t.maxCoeff());
  NetworkParams params = init_params(2, {{6, Activation::tanh, 0.4}}, 77);

  ModelGradients grads;
  nll_and_gradients(params, base, false, x, t, d, grads, true, 909);
  const Vector analytic = pack_gradients(grads, params, base);
  auto f = testutil::nll_closure(params, base, false, x, t, d, true, 909);
  const Vector fd = testutil::numeric_gradient(f, pack_parameters(params, base));
  REQUIRE(testutil::rel_error(analytic, fd) < 1e-6);
}

TEST_CASE("all-censored batches push hazards down") {
  const Index n = 10;
  Matrix x = Matrix::Random(n, 2);
  Vector t = Vector::LinSpaced(n, 0.5, 3.0);
  IntVector d = IntVector::Zero(n);
  const BaselinePartition base = build_partition({0.5, 1.0, 2.0, 3.0}, 3, 3.0);
  NetworkParams params = init_params(2, {}, 1);

  ModelGradients grads;
  nll_and_gradients(params, base, false, x, t, d, grads);
  // each rho gradient is a mean of exp(eta) exp(-Lambda) lam_j D_j >= 0,
  // so descent lowers every hazard
  REQUIRE((grads.rho.array() >= 0.0).all());
  REQUIRE(grads.rho.sum() > 0.0);
}

TEST_CASE("NLL decreases under small-step full-batch descent") {
  auto rng = make_rng(99);
  std::uniform_real_distribution<double> unif(0.1, 2.5);
  const Index n = 64;
  Matrix x = Matrix::Random(n, 3);
  Vector t(n);
  IntVector d(n);
  std::vector<double> events;
  for (Index i = 0; i < n; ++i) {
    t[i] = unif(rng);
    d[i] = static_cast<int>(i % 4 != 0);
    if (d[i]) events.push_back(t[i]);
  }
  BaselinePartition base = build_partition(events, 3, t.maxCoeff());
  NetworkParams params = init_params(3, {{8, Activation::tanh, 0.0}}, 17);

  Vector flat = pack_parameters(params, base);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 50; ++it) {
    ModelGradients grads;
    const double loss = nll_and_gradients(params, base, false, x, t, d, grads);
    REQUIRE(loss <= prev + 1e-12);
    prev = loss;
    flat -= 1e-3 * pack_gradients(grads, params, base);
    unpack_parameters(flat, params, base);
  }
}

TEST_CASE("stationary point of the one-covariate linear model") {
  // full-batch adaptive gradient descent down to ~zero gradient norm
  auto rng = make_rng(31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Index n = 200;
  Matrix x(n, 1);
  Vector t(n);
  IntVector d(n);
  std::vector<double> events;
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = unif(rng);
    const double theta = std::exp(0.8 * x(i, 0) - 0.2);
    std::poisson_distribution<long long> pois(theta);
    const long long k = pois(rng);
    if (k == 0) {
      t[i] = 5.0;
      d[i] = 0;
    } else {
      std::exponential_distribution<double> expo(static_cast<double>(k));
      const double ts = expo(rng);
      t[i] = std::min(ts, 5.0);
      d[i] = ts <= 5.0 ? 1 : 0;
    }
    if (d[i]) events.push_back(t[i]);
  }
  BaselinePartition base = build_partition(events, 2, t.maxCoeff());
  NetworkParams params = init_params(1, {}, 2);

  Vector flat = pack_parameters(params, base);
  auto grad_at = [&](const Vector& point) {
    NetworkParams p2 = params;
    BaselinePartition b2 = base;
    unpack_parameters(point, p2, b2);
    ModelGradients g2;
    nll_and_gradients(p2, b2, false, x, t, d, g2);
    return pack_gradients(g2, p2, b2);
  };
  auto loss_at = [&](const Vector& point) {
    NetworkParams p2 = params;
    BaselinePartition b2 = base;
    unpack_parameters(point, p2, b2);
    return neg_log_likelihood(p2, b2, false, x, t, d);
  };

  // coarse line-search descent, then Newton polish via a finite-difference
  // Hessian of the analytic gradient (4 parameters)
  double step = 0.5;
  double loss = loss_at(flat);
  Vector g = grad_at(flat);
  for (int it = 0; it < 5000 && g.norm() >= 1e-6; ++it) {
    const Vector trial = flat - step * g;
    const double l2 = loss_at(trial);
    if (l2 < loss) {
      flat = trial;
      loss = l2;
      g = grad_at(flat);
      step *= 1.2;
    } else {
      step *= 0.5;
      if (step < 1e-16) break;
    }
  }
  const Index dim = flat.size();
  for (int newton = 0; newton < 20 && g.norm() >= 1e-10; ++newton) {
    Matrix hess(dim, dim);
    for (Index j = 0; j < dim; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(flat[j]));
      Vector hi = flat, lo = flat;
      hi[j] += h;
      lo[j] -= h;
      hess.col(j) = (grad_at(hi) - grad_at(lo)) / (2.0 * h);
    }
    const Vector delta = hess.colPivHouseholderQr().solve(g);
    if (!delta.allFinite()) break;
    flat -= delta;
    g = grad_at(flat);
  }
  REQUIRE(g.norm() < 1e-8);
}
