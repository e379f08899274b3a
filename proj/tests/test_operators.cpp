#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "interir/errors.hpp"
#include "interir/operators.hpp"
#include "interir/verify/oracles.hpp"

using namespace interir;

TEST_CASE("config validation") {
  CHECK_NOTHROW(RegularizerConfig{}.validate());
  CHECK(RegularizerConfig{}.sigma == RegularizerConfig{}.epsilon);
  RegularizerConfig bad;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = {};
  bad.sigma = -1.0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
}

TEST_CASE("gradient operator") {
  const Tensor flat({2, 4, 5}, 0.3);
  CHECK(max_abs(v_grad(flat)) == 0.0);
  CHECK(max_abs(v_adjoint(v_grad(flat))) == 0.0);
  CHECK(max_abs(v_adjoint(Tensor({4, 3, 3}))) == 0.0);

  Tensor ramp({1, 3, 4});
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t w = 0; w < 4; ++w) ramp.at(0, h, w) = static_cast<double>(w);
  const Tensor g = v_grad(ramp);
  REQUIRE(g.shape() == Shape{2, 3, 4});
  for (std::size_t h = 0; h < 3; ++h) {
    for (std::size_t w = 0; w < 3; ++w) CHECK(g.at(0, h, w) == 1.0);
    CHECK(g.at(0, h, 3) == 0.0);
    for (std::size_t w = 0; w < 4; ++w) CHECK(g.at(1, h, w) == 0.0);
  }
  CHECK_THROWS_AS(v_adjoint(Tensor({3, 2, 2})), DimensionError);
}

TEST_CASE("gradient adjoint identity on random instances") {
  Xoshiro256 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 1 + trial % 3, h = 2 + trial % 5, w = 2 + (trial / 5) % 5;
    const Tensor x = oracle::random_tensor({c, h, w}, rng);
    const Tensor y = oracle::random_tensor({2 * c, h, w}, rng);
    const double lhs = dot(v_grad(x), y);
    const double rhs = dot(x, v_adjoint(y));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(0.0, 1.0) == 0.0);
  CHECK(soft_threshold(1.5, 1.0) == 0.5);
  CHECK(soft_threshold(-1.5, 1.0) == -0.5);
  CHECK(soft_threshold(0.7, 1.0) == 0.0);
  const Tensor x({1, 1, 5}, std::vector<double>{-2.0, -1.0, 0.0, 1.0, 2.0});
  CHECK(soft_threshold_sub(x, 1.0).values() == std::vector<double>{1, 0, 0, 0, 1});
  CHECK_THROWS_AS(soft_threshold(x, 0.0), SpecError);
  CHECK_THROWS_AS(soft_threshold_sub(x, -1.0), SpecError);

  Xoshiro256 rng(22);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);
    const double t = rng.uniform(0.05, 2.0);
    CHECK(std::abs(soft_threshold(a, t) - soft_threshold(b, t)) <= std::abs(a - b) + 1e-15);
  }
  for (double v = -2.5; v <= 2.5; v += 0.37) {
    for (double t : {0.1, 0.8, 1.3}) {
      CHECK(std::abs(soft_threshold(v, t) - oracle::prox_grid_search(v, t, 1e-4)) <= 1e-4);
    }
  }
}

TEST_CASE("A update") {
  Xoshiro256 rng(23);
  const Tensor img = oracle::random_tensor({1, 4, 4}, rng);
  const Tensor a = oracle::random_tensor({1, 4, 4}, rng);
  const Tensor b = oracle::random_tensor({1, 4, 4}, rng);
  RegularizerConfig cfg;

  SUBCASE("already optimal factor is a fixed point without shrinkage") {
    cfg.beta = 1e-300;
    const Tensor d = channel_matmul(channel_matmul(a, img), b);
    const MatrixUpdate up = update_A_classical(img, a, b, d, cfg);
    CHECK(max_abs_diff(up.value, a) <= 1e-12);
  }
  SUBCASE("strong shrinkage moves toward zero") {
    cfg.beta = 1e6;
    const Tensor d = channel_matmul(channel_matmul(a, img), b);
    const MatrixUpdate up = update_A_classical(img, a, b, d, cfg);
    CHECK(up.step > 0.0);
    CHECK(l2_norm(up.value) < l2_norm(a));
  }
  SUBCASE("objective never increases") {
    for (int trial = 0; trial < 20; ++trial) {
      const Tensor d = oracle::random_tensor({1, 4, 4}, rng);
      const double before = classical_objective(img, a, b, d, cfg);
      const MatrixUpdate ua = update_A_classical(img, a, b, d, cfg);
      const double mid = classical_objective(img, ua.value, b, d, cfg);
      const MatrixUpdate ub = update_B_classical(img, ua.value, b, d, cfg);
      const double after = classical_objective(img, ua.value, ub.value, d, cfg);
      CHECK(mid <= before);
      CHECK(after <= mid);
    }
  }
  SUBCASE("non-finite input reports the iteration") {
    Tensor poisoned = img;
    poisoned[3] = std::nan("");
    try {
      update_A_classical(poisoned, a, b, img, cfg, 7);
      FAIL("expected NumericalFailure");
    } catch (const NumericalFailure& e) {
      CHECK(e.iteration() == 7);
    }
  }
}

TEST_CASE("objective terms") {
  Xoshiro256 rng(24);
  const Tensor img = oracle::random_tensor({2, 3, 3}, rng);
  RegularizerConfig cfg;
  const Tensor ia = Tensor::identity(2, 3);
  const double value = classical_objective(img, ia, ia, img, cfg);
  double tv = 0.0;
  const Tensor g = v_grad(img);
  for (double v : g.data()) tv += std::abs(v);
  const double expected = cfg.alpha * tv + 0.5 * cfg.beta * 6.0 + 0.5 * cfg.gamma * 6.0;
  CHECK(std::abs(value - expected) <= 1e-12);
}
