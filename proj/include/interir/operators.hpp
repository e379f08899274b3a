#pragma once

#include "interir/tensor.hpp"

namespace interir {

/// Weights of the classical objective
///   1/2 |A I B - D|^2 + alpha |V(I)|_1 + beta/2 |A|_F^2 + gamma/2 |B|_F^2
/// and of its augmented Lagrangian (penalty epsilon, shrinkage scale sigma).
struct RegularizerConfig {
  double alpha = 0.1;
  double beta = 0.01;
  double gamma = 0.01;
  double sigma = 1.0;
  double epsilon = 1.0;

  /// Shrinkage threshold of S(.), alpha / sigma.
  double threshold() const noexcept { return alpha / sigma; }
  /// Throws SpecError unless every weight is strictly positive.
  void validate() const;
};

/// Forward-difference image gradient: [C,H,W] -> [2C,H,W]. Channels [0,C)
/// hold horizontal differences, [C,2C) vertical ones; the difference across
/// the last column/row is 0.
Tensor v_grad(const Tensor& x);

/// Exact adjoint of v_grad (a negative divergence): [2C,H,W] -> [C,H,W].
Tensor v_adjoint(const Tensor& y);

/// sign(x) * max(|x| - t, 0).
double soft_threshold(double x, double t) noexcept;
Tensor soft_threshold(const Tensor& x, double t);
/// Derivative of soft_threshold: 1 where |x| > t, 0 elsewhere (including the
/// kink itself).
Tensor soft_threshold_sub(const Tensor& x, double t);

/// Value of the classical objective above.
double classical_objective(const Tensor& image, const Tensor& a, const Tensor& b,
                           const Tensor& degraded, const RegularizerConfig& config);

struct MatrixUpdate {
  Tensor value;
  /// Accepted step; 0 when no step decreased the objective.
  double step = 0.0;
};

/// One backtracked proximal-gradient step on A with B and I fixed:
///   A <- A - s [(A I B - D)(I B)^T + beta A].
/// Throws NumericalFailure tagged with `iteration` on non-finite gradients.
MatrixUpdate update_A_classical(const Tensor& image, const Tensor& a, const Tensor& b,
                                const Tensor& degraded, const RegularizerConfig& config,
                                int iteration = 0);

/// Same for B with A and I fixed:
///   B <- B - s [(A I)^T (A I B - D) + gamma B].
MatrixUpdate update_B_classical(const Tensor& image, const Tensor& a, const Tensor& b,
                                const Tensor& degraded, const RegularizerConfig& config,
                                int iteration = 0);

}  // namespace interir
