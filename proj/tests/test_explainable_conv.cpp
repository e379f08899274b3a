#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "interir/errors.hpp"
#include "interir/explainable_conv.hpp"
#include "interir/verify/oracles.hpp"

using namespace interir;

namespace {

ExplainableConvParams random_params(Xoshiro256& rng, std::size_t cout, std::size_t cin_per_group,
                                    std::size_t k, ConvGeometry geom, double tau = 0.0) {
  ExplainableConvParams p;
  p.weight = oracle::random_tensor({cout, cin_per_group, k, k}, rng);
  p.bias = oracle::random_tensor({cout}, rng);
  p.tau = tau;
  p.geom = geom;
  return p;
}

// Random input whose entries stay at least `gap` away from tau.
Tensor away_from(double tau, Shape shape, Xoshiro256& rng, double gap) {
  Tensor x = oracle::random_tensor(std::move(shape), rng);
  for (auto& v : x.data()) {
    if (std::abs(v - tau) < gap) v = tau + (v >= tau ? gap : -gap);
  }
  return x;
}

}  // namespace

TEST_CASE("step-by-step oracle") {
  Xoshiro256 rng(41);
  const ConvGeometry geoms[] = {{1, 1, 1}, {2, 1, 1}, {1, 1, 2}, {1, 2, 1}};
  for (const auto& g : geoms) {
    const std::size_t k = g.padding == 2 ? 5 : 3;
    const Tensor x = oracle::random_tensor({2, 2, 6, 6}, rng);
    const auto p = random_params(rng, 4, 2 / g.groups, k, g, rng.uniform(-0.3, 0.3));
    const auto out = explainable_conv_forward(x, p);
    const Tensor ref = oracle::explainable_conv_steps(x, p);
    REQUIRE(out.y.shape() == ref.shape());
    CHECK(max_abs_diff(out.y, ref) <= 1e-12);
  }
}

TEST_CASE("constant input gives uniform attention") {
  Xoshiro256 rng(42);
  const auto p = random_params(rng, 3, 2, 3, {1, 1, 1}, 0.5);
  for (double level : {0.9, 0.1}) {
    const Tensor x({1, 2, 5, 5}, level);
    const auto out = explainable_conv_forward(x, p);
    for (double a : out.cache.attention.data()) CHECK(std::abs(a - 1.0 / 9.0) <= 1e-15);
    const Tensor ref = conv2d(x, p.weight * (1.0 / 9.0), p.bias, p.geom);
    CHECK(max_abs_diff(out.y, ref) <= 1e-12);
  }
}

TEST_CASE("mask uses a closed comparison") {
  Xoshiro256 rng(43);
  const auto p = random_params(rng, 1, 1, 3, {1, 1, 1}, 0.25);
  const auto at_tau = explainable_conv_forward(Tensor({1, 1, 4, 4}, 0.25), p);
  for (double m : at_tau.cache.pooled_mask.data()) CHECK(m == 1.0);
  const auto below = explainable_conv_forward(Tensor({1, 1, 4, 4}, std::nextafter(0.25, 0.0)), p);
  for (double m : below.cache.pooled_mask.data()) CHECK(m == 0.0);
}

TEST_CASE("samples do not influence each other") {
  Xoshiro256 rng(44);
  const auto p = random_params(rng, 3, 2, 3, {1, 1, 1});
  const Tensor a = oracle::random_tensor({1, 2, 6, 6}, rng);
  const Tensor b = oracle::random_tensor({1, 2, 6, 6}, rng);
  const Tensor twin = explainable_conv_forward(concat(a, a, 0), p).y;
  const auto [t0, t1] = split_half(twin, 0);
  CHECK(bitwise_equal(t0, t1));
  const Tensor mixed = explainable_conv_forward(concat(a, b, 0), p).y;
  const auto [m0, m1] = split_half(mixed, 0);
  CHECK(max_abs_diff(m0, explainable_conv_forward(a, p).y) <= 1e-12);
  CHECK(max_abs_diff(m1, explainable_conv_forward(b, p).y) <= 1e-12);
}

TEST_CASE("grouped kernels read the attention of their own input channel") {
  Xoshiro256 rng(45);
  const Tensor w = oracle::random_tensor({4, 1, 3, 3}, rng);
  const Tensor att = oracle::random_tensor({4, 3, 3}, rng, 0.0, 1.0);
  const Tensor m = modulate_kernel(w, att, 4);
  for (std::size_t co = 0; co < 4; ++co)
    for (std::size_t k = 0; k < 9; ++k) CHECK(m[co * 9 + k] == w[co * 9 + k] * att[co * 9 + k]);

  const Tensor w2 = oracle::random_tensor({4, 2, 3, 3}, rng);
  const Tensor m2 = modulate_kernel(w2, att, 2);
  for (std::size_t co = 0; co < 4; ++co)
    for (std::size_t ci = 0; ci < 2; ++ci) {
      const std::size_t src = (co / 2) * 2 + ci;
      for (std::size_t k = 0; k < 9; ++k)
        CHECK(m2[(co * 2 + ci) * 9 + k] == w2[(co * 2 + ci) * 9 + k] * att[src * 9 + k]);
    }
}

TEST_CASE("backward") {
  Xoshiro256 rng(46);
  SUBCASE("zero upstream gradient") {
    const auto p = random_params(rng, 3, 2, 3, {1, 1, 1});
    const auto out = explainable_conv_forward(oracle::random_tensor({1, 2, 5, 5}, rng), p);
    const auto g = explainable_conv_backward(Tensor(out.y.shape()), out.cache, p);
    CHECK(max_abs(g.x) == 0.0);
    CHECK(max_abs(g.weight) == 0.0);
    CHECK(max_abs(g.bias) == 0.0);
    CHECK(g.tau == 0.0);
  }
  SUBCASE("uniform attention reduces to a scaled conv gradient") {
    const auto p = random_params(rng, 3, 2, 3, {1, 1, 1}, -10.0);
    const Tensor x = oracle::random_tensor({1, 2, 5, 5}, rng);
    const auto out = explainable_conv_forward(x, p);
    const Tensor gy = oracle::random_tensor(out.y.shape(), rng);
    const auto g = explainable_conv_backward(gy, out.cache, p);
    const Tensor ref = conv2d_weight_grad(gy, x, p.weight.shape(), p.geom) * (1.0 / 9.0);
    CHECK(max_abs_diff(g.weight, ref) <= 1e-12);
  }
  SUBCASE("central differences on random instances") {
    for (int trial = 0; trial < 20; ++trial) {
      const ConvGeometry geom{1 + trial % 2, 1, trial % 3 == 0 ? 2 : 1};
      const double tau = rng.uniform(-0.2, 0.2);
      auto p = random_params(rng, 2, 2 / geom.groups, 3, geom, tau);
      Tensor x = away_from(tau, {1, 2, 5, 5}, rng, 1e-3);
      const auto out = explainable_conv_forward(x, p);
      const Tensor gy = oracle::random_tensor(out.y.shape(), rng);
      const auto g = explainable_conv_backward(gy, out.cache, p);
      auto loss = [&] { return dot(explainable_conv_forward(x, p).y, gy); };
      const Tensor nx = oracle::central_difference(x, 1e-5, loss);
      const Tensor nw = oracle::central_difference(p.weight, 1e-5, loss);
      const Tensor nb = oracle::central_difference(p.bias, 1e-5, loss);
      CHECK(oracle::relative_error(g.x, nx) <= 1e-4);
      CHECK(oracle::relative_error(g.weight, nw) <= 1e-4);
      CHECK(oracle::relative_error(g.bias, nb) <= 1e-4);
    }
  }
  SUBCASE("stale cache and bad shapes are rejected") {
    auto p = random_params(rng, 3, 2, 3, {1, 1, 1});
    const auto out = explainable_conv_forward(oracle::random_tensor({1, 2, 5, 5}, rng), p);
    CHECK_THROWS_AS(explainable_conv_backward(Tensor({1, 3, 4, 4}), out.cache, p), ContractError);
    p.weight[0] += 1.0;
    CHECK_THROWS_AS(explainable_conv_backward(Tensor(out.y.shape()), out.cache, p), ContractError);
    p.weight[0] -= 1.0;
    p.tau = 0.5;
    CHECK_THROWS_AS(explainable_conv_backward(Tensor(out.y.shape()), out.cache, p), ContractError);
  }
}

TEST_CASE("attention statistics accumulate") {
  reset_attention_stats();
  Xoshiro256 rng(47);
  const auto p = random_params(rng, 3, 2, 3, {1, 1, 1});
  explainable_conv_forward(oracle::random_tensor({2, 2, 5, 5}, rng), p);
  const AttentionStats s = attention_stats();
  CHECK(s.slabs == 4);
  CHECK(s.max_deviation <= kAttentionTolerance);
}
