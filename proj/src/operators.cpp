#include "interir/operators.hpp"

#include <algorithm>
#include <cmath>

#include "interir/errors.hpp"

namespace interir {

namespace {

constexpr double kMinMatrixStep = 1e-12;

void require_image(const Tensor& x, const char* what) {
  if (x.rank() != 3) {
    throw DimensionError("rank", std::string(what) + " expects [C,H,W], got " +
                                     shape_string(x.shape()));
  }
}

double squared_norm(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return s;
}

// Largest per-channel squared Frobenius norm; bounds the Lipschitz constant
// of the data-term gradient in A (or B).
double max_channel_energy(const Tensor& m) {
  double best = 0.0;
  for (double n : channel_frobenius(m)) best = std::max(best, n * n);
  return best;
}

template <typename Candidate>
MatrixUpdate backtrack(const Tensor& current, const Tensor& grad, double initial_step,
                       Candidate&& objective_at) {
  if (max_abs(grad) == 0.0) return {current, 0.0};
  if (!(initial_step > 0.0) || !std::isfinite(initial_step)) initial_step = 1.0;
  const double base = objective_at(current);
  for (double step = initial_step; step >= kMinMatrixStep; step *= 0.5) {
    Tensor trial = current - step * grad;
    if (objective_at(trial) <= base) return {std::move(trial), step};
  }
  return {current, 0.0};
}

}  // namespace

void RegularizerConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw SpecError(std::string(name) + " must be a positive finite number");
    }
  };
  positive(alpha, "alpha");
  positive(beta, "beta");
  positive(gamma, "gamma");
  positive(sigma, "sigma");
  positive(epsilon, "epsilon");
}

Tensor v_grad(const Tensor& x) {
  require_image(x, "v_grad");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  Tensor g({2 * C, H, W});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t w = 0; w < W; ++w) {
        const double v = x.at(c, h, w);
        g.at(c, h, w) = w + 1 < W ? x.at(c, h, w + 1) - v : 0.0;
        g.at(C + c, h, w) = h + 1 < H ? x.at(c, h + 1, w) - v : 0.0;
      }
    }
  }
  return g;
}

Tensor v_adjoint(const Tensor& y) {
  require_image(y, "v_adjoint");
  if (y.dim(0) % 2 != 0) {
    throw DimensionError("channel", "v_adjoint needs an even channel count, got " +
                                        std::to_string(y.dim(0)));
  }
  const std::size_t C = y.dim(0) / 2, H = y.dim(1), W = y.dim(2);
  Tensor x({C, H, W});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t w = 0; w < W; ++w) {
        double v = 0.0;
        if (w + 1 < W) v -= y.at(c, h, w);
        if (w > 0) v += y.at(c, h, w - 1);
        if (h + 1 < H) v -= y.at(C + c, h, w);
        if (h > 0) v += y.at(C + c, h - 1, w);
        x.at(c, h, w) = v;
      }
    }
  }
  return x;
}

double soft_threshold(double x, double t) noexcept {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

Tensor soft_threshold(const Tensor& x, double t) {
  if (!(t > 0.0)) throw SpecError("soft_threshold: threshold must be positive");
  Tensor out = x;
  for (auto& v : out.data()) v = soft_threshold(v, t);
  return out;
}

Tensor soft_threshold_sub(const Tensor& x, double t) {
  if (!(t > 0.0)) throw SpecError("soft_threshold_sub: threshold must be positive");
  Tensor out = x;
  for (auto& v : out.data()) v = std::abs(v) > t ? 1.0 : 0.0;
  return out;
}

double classical_objective(const Tensor& image, const Tensor& a, const Tensor& b,
                           const Tensor& degraded, const RegularizerConfig& config) {
  const Tensor residual = channel_matmul(channel_matmul(a, image), b) - degraded;
  double l1 = 0.0;
  const Tensor grad = v_grad(image);
  for (double v : grad.data()) l1 += std::abs(v);
  return 0.5 * squared_norm(residual) + config.alpha * l1 +
         0.5 * config.beta * squared_norm(a) + 0.5 * config.gamma * squared_norm(b);
}

MatrixUpdate update_A_classical(const Tensor& image, const Tensor& a, const Tensor& b,
                                const Tensor& degraded, const RegularizerConfig& config,
                                int iteration) {
  const Tensor ib = channel_matmul(image, b);
  const Tensor residual = channel_matmul(a, ib) - degraded;
  const Tensor grad = channel_matmul(residual, channel_transpose(ib)) + config.beta * a;
  if (!grad.all_finite()) throw NumericalFailure(iteration, "non-finite gradient in A update");
  const double lipschitz = max_channel_energy(ib) + config.beta;
  return backtrack(a, grad, 1.0 / lipschitz, [&](const Tensor& cand) {
    return classical_objective(image, cand, b, degraded, config);
  });
}

MatrixUpdate update_B_classical(const Tensor& image, const Tensor& a, const Tensor& b,
                                const Tensor& degraded, const RegularizerConfig& config,
                                int iteration) {
  const Tensor ai = channel_matmul(a, image);
  const Tensor residual = channel_matmul(ai, b) - degraded;
  const Tensor grad = channel_matmul(channel_transpose(ai), residual) + config.gamma * b;
  if (!grad.all_finite()) throw NumericalFailure(iteration, "non-finite gradient in B update");
  const double lipschitz = max_channel_energy(ai) + config.gamma;
  return backtrack(b, grad, 1.0 / lipschitz, [&](const Tensor& cand) {
    return classical_objective(image, a, cand, degraded, config);
  });
}

}  // namespace interir
