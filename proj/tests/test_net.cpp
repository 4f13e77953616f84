#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "ptcure/net.hpp"

using namespace ptcure;
using Catch::Approx;

TEST_CASE("init_params is deterministic and Glorot-bounded") {
  const std::vector<LayerSpec> layers{{8, Activation::relu, 0.0},
                                      {4, Activation::tanh, 0.0}};
  const auto a = init_params(5, layers, 42);
  const auto b = init_params(5, layers, 42);
  const BaselinePartition stub{Vector{{0.0, 1.0}}, Vector{{0.0}}};
  REQUIRE(pack_parameters(a, stub) == pack_parameters(b, stub));

  const auto c = init_params(5, layers, 43);
  REQUIRE(a.weights[0] != c.weights[0]);

  const double bound0 = std::sqrt(6.0 / (5 + 8));
  REQUIRE(a.weights[0].cwiseAbs().maxCoeff() <= bound0);
  REQUIRE(a.biases[0].isZero());
  REQUIRE(a.biases[1].isZero());
  REQUIRE(a.output_bias == 0.0);
}

TEST_CASE("init_params handles the degenerate zero-hidden-layer net") {
  const auto p = init_params(3, {}, 7);
  REQUIRE(p.hidden_layers() == 0);
  REQUIRE(p.output_weights.size() == 3);
  REQUIRE(p.hidden_output_dim() == 3);
  REQUIRE_THROWS_AS(init_params(0, {}, 7), ValidationError);
}

TEST_CASE("parameter_count does the shape arithmetic") {
  // two hidden layers of 512 on 921 inputs:
  // 921*512 + 512 + 512*512 + 512 + 512 + 1
  const std::vector<LayerSpec> layers{{512, Activation::relu, 0.2},
                                      {512, Activation::relu, 0.2}};
  const auto p = init_params(921, layers, 1);
  REQUIRE(p.parameter_count() == 921L * 512 + 512 + 512L * 512 + 512 + 512 + 1);
  REQUIRE(p.parameter_count() == 735233L);
}

TEST_CASE("forward computes layer compositions") {
  SECTION("single relu unit") {
    NetworkParams p = init_params(1, {{1, Activation::relu, 0.0}}, 0);
    p.weights[0](0, 0) = 1.0;
    p.biases[0][0] = 0.0;
    Matrix x(2, 1);
    x << 2.0, -3.0;
    const Matrix u = forward(p, x, false, 0);
    REQUIRE(u(0, 0) == 2.0);
    REQUIRE(u(1, 0) == 0.0);
  }

  SECTION("all-linear layers compose to a matrix product") {
    NetworkParams p = init_params(3, {{4, Activation::linear, 0.0},
                                      {2, Activation::linear, 0.0}}, 5);
    Matrix x = Matrix::Random(6, 3);
    const Matrix u = forward(p, x, false, 0);
    const Matrix expected = x * p.weights[0] * p.weights[1];
    REQUIRE((u - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("dimension mismatch is rejected") {
    NetworkParams p = init_params(3, {{2, Activation::relu, 0.0}}, 5);
    REQUIRE_THROWS_AS(forward(p, Matrix::Random(4, 2), false, 0), ValidationError);
  }
}

TEST_CASE("dropout is inference-transparent and seed-deterministic") {
  NetworkParams p = init_params(4, {{16, Activation::tanh, 0.6}}, 3);
  const Matrix x = Matrix::Random(8, 4);

  const Matrix inference1 = forward(p, x, false, 1);
  const Matrix inference2 = forward(p, x, false, 999);
  REQUIRE(inference1 == inference2);  // rate ignored outside training

  const Matrix train1 = forward(p, x, true, 17);
  const Matrix train2 = forward(p, x, true, 17);
  REQUIRE(train1 == train2);
  const Matrix train3 = forward(p, x, true, 18);
  REQUIRE(train1 != train3);

  // inverted dropout: surviving entries are scaled by 1/keep
  ForwardCache cache;
  forward(p, x, true, 17, &cache);
  const Matrix raw = cache.pre[0].unaryExpr(
      [](double z) { return activate(Activation::tanh, z); });
  for (Index i = 0; i < cache.post[0].rows(); ++i)
    for (Index j = 0; j < cache.post[0].cols(); ++j) {
      const double v = cache.post[0](i, j);
      if (cache.mask[0](i, j) == 0.0)
        REQUIRE(v == 0.0);
      else
        REQUIRE(v == Approx(raw(i, j) / 0.4).margin(1e-12));
    }
}

TEST_CASE("backward matches finite differences on small random nets") {
  auto rng = make_rng(11);
  std::uniform_int_distribution<int> units(1, 8);
  std::uniform_int_distribution<int> depth(1, 2);
  const Activation acts[] = {Activation::relu, Activation::tanh, Activation::sigmoid,
                             Activation::elu, Activation::linear};
  for (int rep = 0; rep < 10; ++rep) {
    const int q = units(rng) % 5 + 1;
    std::vector<LayerSpec> layers;
    const int d = depth(rng);
    for (int l = 0; l < d; ++l) layers.push_back({units(rng), acts[rep % 5], 0.0});
    NetworkParams p = init_params(q, layers, 100 + rep);
    const Matrix x = Matrix::Random(6, q);
    const Matrix dir = Matrix::Random(6, layers.back().units);  // fixed upstream

    ForwardCache cache;
    forward(p, x, false, 0, &cache);
    const NetGradients grads = backward(p, cache, dir);

    const BaselinePartition stub{Vector{{0.0, 1.0}}, Vector{{0.0}}};
    auto objective = [&](const Vector& flat) {
      NetworkParams q_params = p;
      BaselinePartition q_base = stub;
      unpack_parameters(flat, q_params, q_base);
      const Matrix u = forward(q_params, x, false, 0);
      return (u.array() * dir.array()).sum();
    };
    const Vector flat = pack_parameters(p, stub);
    const Vector fd = testutil::numeric_gradient(objective, flat);

    ModelGradients packed;
    packed.net = grads;
    packed.output_weights = Vector::Zero(p.output_weights.size());
    packed.output_bias = 0.0;
    packed.rho = Vector::Zero(1);
    const Vector analytic = pack_gradients(packed, p, stub);
    // zero out coordinates the objective does not touch (w_out, b_out, rho)
    Vector fd_masked = fd;
    fd_masked.tail(p.output_weights.size() + 2).setZero();
    REQUIRE(testutil::rel_error(analytic, fd_masked) < 1e-6);
  }
}

TEST_CASE("backward edge cases") {
  NetworkParams p = init_params(3, {{4, Activation::elu, 0.0}}, 9);
  const Matrix x = Matrix::Random(5, 3);
  ForwardCache cache;
  forward(p, x, false, 0, &cache);

  SECTION("zero upstream gives zero gradients") {
    const NetGradients g = backward(p, cache, Matrix::Zero(5, 4));
    REQUIRE(g.weights[0].isZero());
    REQUIRE(g.biases[0].isZero());
  }
  SECTION("stale cache is rejected") {
    REQUIRE_THROWS_AS(backward(p, cache, Matrix::Zero(7, 4)), ValidationError);
  }
}
