#pragma once

// Reference implementations used only for verification. Each is written
// directly from its defining formula, favouring obviousness over speed, and
// shares no code with the kernels it checks.

#include <cstdint>
#include <functional>
#include <vector>

#include "interir/explainable_conv.hpp"
#include "interir/operators.hpp"
#include "interir/rng.hpp"
#include "interir/tensor.hpp"

namespace interir::oracle {

/// Seven nested loops over the cross-correlation sum.
Tensor naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
                    int padding, int groups);

/// X[k,l] = sum_{n,m} x[n,m] exp(-2 pi i (k n / H + l m / W)) per leading slab.
void naive_dft(const Tensor& x, Tensor& real, Tensor& imag);

/// vec(A I B) = (B^T kron A) vec(I) with column-major vec, per channel, using
/// an explicitly materialized HW x HW matrix.
Tensor kronecker_apply(const Tensor& a, const Tensor& image, const Tensor& b);

/// argmin_c t|c| + (c - x)^2 / 2 over a uniform grid of spacing `step`.
double prox_grid_search(double x, double t, double step);

/// Dense-matrix F and H for a single-channel state; V is built as an explicit
/// 2HW x HW matrix with rows ordered like the library's [2C,H,W] layout.
struct DenseFH {
  Tensor f;
  Tensor h;
};
DenseFH dense_f_h(const Tensor& image, const Tensor& degraded, const Tensor& a, const Tensor& b,
                  const Tensor& lambda, const RegularizerConfig& config);

/// Explainable conv built step by step: M, M~, A (plain exp/sum softmax) and
/// W_b materialized, then naive_conv2d per sample.
Tensor explainable_conv_steps(const Tensor& x, const ExplainableConvParams& p);

/// Central difference of f with respect to every element of `param`.
Tensor central_difference(Tensor& param, double h, const std::function<double()>& f);

/// max |a - b| / max(max |b|, floor).
double relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-300);

/// Parameter counts from the layer inventory, independent of the visitors.
std::size_t ep_block_params(std::size_t c);
std::size_t convs_params(std::size_t c);
std::size_t unfolded_params(std::size_t n, std::size_t c);

Tensor random_tensor(Shape shape, Xoshiro256& rng, double lo = -1.0, double hi = 1.0);

}  // namespace interir::oracle
