#pragma once

#include <cstdint>
#include <vector>

#include "interir/tensor.hpp"

namespace interir {

/// Convolution whose kernel is re-weighted per sample by an attention map
/// derived from the input itself:
///
///   M   = [x >= tau]                       (per b, cin, h, w)
///   M~  = adaptive_avg_pool(M, Kh, Kw)
///   A   = softmax over each Kh x Kw slab of M~
///   W_b = W .* A_b   (A_b indexed by the kernel's input channel)
///   y_b = conv2d(x_b, W_b) + bias
///
/// For grouped kernels, kernel slot (cout, k) reads attention channel
/// group(cout) * Cin/groups + k, i.e. the input channel it actually sees.
struct ExplainableConvParams {
  Tensor weight;  // [Cout, Cin/groups, Kh, Kw]
  Tensor bias;    // [Cout]
  double tau = 0.0;
  ConvGeometry geom;
};

/// Everything backward needs, plus a fingerprint of the parameters that
/// produced it.
struct ExplainableConvCache {
  Tensor input;
  Tensor pooled_mask;           // [B, Cin, Kh, Kw]
  Tensor attention;             // [B, Cin, Kh, Kw]
  std::vector<Tensor> kernels;  // W_b, one per sample
  Shape output_shape;
  std::uint64_t params_digest = 0;
};

struct ExplainableConvOutput {
  Tensor y;
  ExplainableConvCache cache;
};

/// Throws ContractError if an attention slab fails to sum to 1 within 1e-12.
ExplainableConvOutput explainable_conv_forward(const Tensor& x,
                                               const ExplainableConvParams& p);

struct ExplainableConvGrads {
  Tensor x;
  Tensor weight;
  Tensor bias;
  /// The hard mask is detached, so this is always 0.
  double tau = 0.0;
};

/// Analytic adjoint of the forward with the attention treated as a constant.
/// Throws ContractError when `cache` was not produced with `p` or `grad_y`
/// does not match the cached output shape.
ExplainableConvGrads explainable_conv_backward(const Tensor& grad_y,
                                               const ExplainableConvCache& cache,
                                               const ExplainableConvParams& p);

/// W .* A_b for one sample; `attention` is [Cin, Kh, Kw].
Tensor modulate_kernel(const Tensor& weight, const Tensor& attention, int groups);

/// Process-wide record of attention-slab normalization across all forwards.
struct AttentionStats {
  std::uint64_t slabs = 0;
  double max_deviation = 0.0;
};
AttentionStats attention_stats();
void reset_attention_stats();

inline constexpr double kAttentionTolerance = 1e-12;

}  // namespace interir
