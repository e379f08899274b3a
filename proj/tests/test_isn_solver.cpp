#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "interir/isn_solver.hpp"
#include "interir/metrics.hpp"
#include "interir/verify/oracles.hpp"

using namespace interir;

namespace {

bool symmetric_psd(const Tensor& m, std::size_t c) {
  const std::size_t n = m.dim(1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(m.at(c, i, j) - m.at(c, j, i)) > 1e-14) return false;
  // Leading principal minors of a Gram matrix can be 0; check x^T M x >= 0
  // on random directions instead.
  Xoshiro256 rng(99);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) q += x[i] * m.at(c, i, j) * x[j];
    if (q < -1e-14) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("init on a random input") {
  Xoshiro256 rng(31);
  const Tensor d = oracle::random_tensor({2, 4, 5}, rng, 0.0, 1.0);
  const SolverState s = init_classical(d, RegularizerConfig{});
  CHECK(bitwise_equal(s.image, d));
  CHECK(s.a.shape() == Shape{2, 4, 4});
  CHECK(s.b.shape() == Shape{2, 5, 5});
  CHECK(s.lambda.shape() == Shape{4, 4, 5});
  CHECK(s.c_aux.shape() == s.lambda.shape());
  CHECK(s.eta == 0.01);
  CHECK(SolverOptions{}.outer_iters == 16);
  CHECK(SolverOptions{}.inner_iters == 4);
  CHECK_FALSE(s.identity_guard);
  for (double n : channel_frobenius(s.a)) CHECK(std::abs(n - 1.0) <= 1e-12);
  for (double n : channel_frobenius(s.b)) CHECK(std::abs(n - 1.0) <= 1e-12);
  CHECK(symmetric_psd(s.a, 0));
  CHECK(symmetric_psd(s.a, 1));
  CHECK(symmetric_psd(s.b, 0));
  CHECK(bitwise_equal(s.lambda, v_grad(d)));
}

TEST_CASE("init on a zero input uses the identity guard") {
  const SolverState s = init_classical(Tensor({1, 3, 3}), RegularizerConfig{});
  CHECK(s.identity_guard);
  CHECK(bitwise_equal(s.a, Tensor::identity(1, 3)));
  CHECK(bitwise_equal(s.b, Tensor::identity(1, 3)));
  CHECK(max_abs(s.lambda) == 0.0);
}

TEST_CASE("F and H") {
  Xoshiro256 rng(32);
  SolverState s = init_classical(oracle::random_tensor({1, 4, 4}, rng), RegularizerConfig{});

  SUBCASE("transcription oracle on random instances") {
    for (int trial = 0; trial < 100; ++trial) {
      s.image = oracle::random_tensor({1, 4, 4}, rng);
      s.degraded = oracle::random_tensor({1, 4, 4}, rng);
      s.a = oracle::random_tensor({1, 4, 4}, rng);
      s.b = oracle::random_tensor({1, 4, 4}, rng);
      s.lambda = oracle::random_tensor({2, 4, 4}, rng);
      s.config.sigma = rng.uniform(0.5, 2.0);
      s.config.epsilon = rng.uniform(0.5, 2.0);
      const Tensor f = compute_F(s);
      const auto ref =
          oracle::dense_f_h(s.image, s.degraded, s.a, s.b, s.lambda, s.config);
      CHECK(max_abs_diff(f, ref.f) <= 1e-12);
      CHECK(max_abs_diff(compute_H(s, f), ref.h) <= 1e-12);
    }
  }
  SUBCASE("zero penalty isolates the data term") {
    s.config.epsilon = 0.0;
    s.lambda = Tensor(s.lambda.shape());
    const Tensor resid = channel_matmul(channel_matmul(s.a, s.image), s.b) - s.degraded;
    const Tensor data = channel_matmul(channel_matmul(channel_transpose(s.a), resid),
                                       channel_transpose(s.b));
    CHECK(max_abs_diff(compute_F(s), data) <= 1e-14);
  }
  SUBCASE("stationary construction gives F = 0") {
    s.image = Tensor({1, 4, 4}, 0.4);
    s.a = Tensor::identity(1, 4);
    s.b = Tensor::identity(1, 4);
    s.degraded = s.image;
    s.lambda = Tensor({2, 4, 4});
    CHECK(max_abs(compute_F(s)) == 0.0);
  }
  SUBCASE("H vanishes for F = 0") {
    CHECK(max_abs(compute_H(s, Tensor({1, 4, 4}))) == 0.0);
  }
  SUBCASE("saturated mask removes the second H term") {
    s.lambda = Tensor({2, 4, 4}, 50.0);
    const Tensor f = compute_F(s);
    const Tensor first = channel_matmul(
        channel_matmul(channel_matmul(channel_matmul(channel_transpose(s.a), s.a), f), s.b),
        channel_transpose(s.b));
    CHECK(max_abs_diff(compute_H(s, f), first) <= 1e-14);
  }
}

TEST_CASE("image step") {
  Xoshiro256 rng(33);
  SUBCASE("fixed point") {
    SolverState s = init_classical(Tensor({1, 4, 4}, 0.5), RegularizerConfig{});
    const StepOutcome out = step_I(s);
    CHECK(bitwise_equal(out.state.image, s.image));
    CHECK(out.record.f_norm_sq_before == 0.0);
    CHECK_FALSE(out.record.stalled);
  }
  SUBCASE("pure denoising decreases |F|") {
    RegularizerConfig cfg;
    cfg.epsilon = 1e-300;
    SolverState s = init_classical(oracle::random_tensor({1, 6, 6}, rng, 0.0, 1.0), cfg);
    s.a = Tensor::identity(1, 6);
    s.b = Tensor::identity(1, 6);
    s.image = oracle::random_tensor({1, 6, 6}, rng, 0.0, 1.0);
    s.eta = 0.5;
    for (int i = 0; i < 10; ++i) {
      const StepOutcome out = step_I(s);
      CHECK(out.record.f_norm_sq_after < out.record.f_norm_sq_before);
      s = out.state;
    }
  }
  SUBCASE("stall leaves the state untouched") {
    // With a huge penalty and a threshold nothing crosses, the smallest
    // allowed step still overshoots along high-frequency directions.
    RegularizerConfig cfg;
    cfg.alpha = 1e6;
    cfg.epsilon = 1e12;
    SolverState s = init_classical(oracle::random_tensor({1, 4, 4}, rng), cfg);
    s.lambda = Tensor({2, 4, 4});
    s.image = oracle::random_tensor({1, 4, 4}, rng);
    const StepOutcome out = step_I(s);
    CHECK(out.record.stalled);
    CHECK(out.record.eta == 0.0);
    CHECK(bitwise_equal(out.state.image, s.image));
  }
}

TEST_CASE("multiplier step") {
  Xoshiro256 rng(34);
  SolverState s = init_classical(oracle::random_tensor({2, 4, 4}, rng), RegularizerConfig{});
  s.lambda = oracle::random_tensor({4, 4, 4}, rng);

  SUBCASE("direct formula") {
    const Tensor vi = v_grad(s.image);
    const Tensor c = soft_threshold(s.lambda * (1.0 / s.config.sigma) + vi, s.config.threshold());
    const Tensor expected = s.lambda + s.config.epsilon * (vi - c);
    const SolverState next = step_multiplier(s);
    CHECK(max_abs_diff(next.lambda, expected) <= 1e-15);
    CHECK(max_abs_diff(next.c_aux, c) <= 1e-15);
  }
  SUBCASE("zero penalty keeps the multiplier") {
    s.config.epsilon = 0.0;
    CHECK(bitwise_equal(step_multiplier(s).lambda, s.lambda));
  }
  SUBCASE("flat image and zero multiplier stay at zero") {
    s.image = Tensor({2, 4, 4}, 0.2);
    s.lambda = Tensor({4, 4, 4});
    CHECK(max_abs(step_multiplier(s).lambda) == 0.0);
  }
}

TEST_CASE("solve") {
  SUBCASE("stationary input is returned as is") {
    SolverOptions opt;
    opt.outer_iters = 1;
    opt.freeze_factors = true;
    const Tensor flat({1, 4, 4}, 0.25);
    const SolveResult r = solve(flat, RegularizerConfig{}, opt);
    CHECK(bitwise_equal(r.image, flat));
    CHECK(r.trace.records.size() == 1);
  }
  SUBCASE("frozen factors denoise") {
    Tensor clean({1, 16, 16});
    for (std::size_t h = 0; h < 16; ++h)
      for (std::size_t w = 0; w < 16; ++w) clean.at(0, h, w) = (w / 4) % 2 ? 0.8 : 0.2;
    Xoshiro256 rng(35);
    Tensor noisy = clean;
    for (auto& v : noisy.data()) v += rng.normal() * 25.0 / 255.0;
    SolverOptions opt;
    opt.outer_iters = 30;
    opt.freeze_factors = true;
    const SolveResult r = solve(noisy, RegularizerConfig{}, opt);
    CHECK(r.trace.records.size() == 30);
    CHECK(psnr(r.image, clean) > psnr(noisy, clean));
    for (const auto& step : r.trace.steps) {
      if (!step.stalled) CHECK(step.f_norm_sq_after <= step.f_norm_sq_before);
    }
  }
  SUBCASE("trace CSV") {
    SolverOptions opt;
    opt.outer_iters = 3;
    opt.inner_iters = 2;
    Xoshiro256 rng(36);
    const SolveResult r = solve(oracle::random_tensor({1, 5, 5}, rng, 0.0, 1.0),
                                RegularizerConfig{}, opt);
    CHECK(r.trace.steps.size() == 6);
    std::ostringstream out;
    write_trace_csv(r.trace, out);
    const std::string text = out.str();
    CHECK(text.rfind("iter,lagrangian,f_norm,primal_residual,eta\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  }
}
