#pragma once

#include <string>

#include "interir/explainable_conv.hpp"
#include "interir/rng.hpp"
#include "interir/tensor.hpp"

namespace interir {

/// Weight [Cout, Cin/groups, Kh, Kw] plus bias [Cout].
struct ConvParams {
  Tensor weight;
  Tensor bias;
};

/// Per-channel scale and shift applied after channel-axis normalization.
struct NormParams {
  Tensor weight;  // [C]
  Tensor bias;    // [C]
};

/// NAF-style block with the depthwise conv replaced by an explainable conv.
///
///   y = x + beta  * proj1(sca(gate(xconv(expand1(norm1(x))))))
///   z = y + gamma * proj2(gate(expand2(norm2(y))))
struct EPBlockParams {
  NormParams norm1;
  ConvParams expand1;               // 1x1, C -> 2C
  ExplainableConvParams dwconv;     // 3x3, 2C -> 2C, groups 2C
  ConvParams sca;                   // 1x1, C -> C on the pooled vector
  ConvParams project1;              // 1x1, C -> C
  double beta = 0.0;
  NormParams norm2;
  ConvParams expand2;               // 1x1, C -> 2C
  ConvParams project2;              // 1x1, C -> C
  double gamma = 0.0;

  std::size_t channels() const { return norm1.weight.dim(0); }
};

inline constexpr double kLayerNormEps = 1e-6;

/// x is [B, C, H, W] with C == params.channels().
Tensor ep_block(const Tensor& x, const EPBlockParams& params);

Tensor layer_norm_channels(const Tensor& x, const NormParams& p);
/// Splits channels in half and multiplies the halves.
Tensor simple_gate(const Tensor& x);
/// x * (W * mean_hw(x) + b), channel-wise.
Tensor simplified_channel_attention(const Tensor& x, const ConvParams& p);

/// Every weight, bias, scale and threshold zero; norm weights zero too.
EPBlockParams zero_ep_block(std::size_t channels);

/// Kaiming-normal conv weights (std sqrt(2 / fan_in)), zero biases, unit
/// norm weights, tau 0 and both residual scales set to `residual_scale`.
EPBlockParams seed_ep_block(std::size_t channels, Xoshiro256& rng,
                            double residual_scale = 0.0);

void kaiming_fill(Tensor& weight, Xoshiro256& rng);

/// Calls visit(name, Tensor&) or visit(name, double&) for each parameter in
/// a fixed order. Works on const and non-const params.
template <class Params, class Visitor>
void visit_conv(Params& p, const std::string& prefix, Visitor&& visit) {
  visit(prefix + ".weight", p.weight);
  visit(prefix + ".bias", p.bias);
}

template <class Params, class Visitor>
void visit_ep_block(Params& p, const std::string& prefix, Visitor&& visit) {
  visit(prefix + ".norm1.weight", p.norm1.weight);
  visit(prefix + ".norm1.bias", p.norm1.bias);
  visit_conv(p.expand1, prefix + ".expand1", visit);
  visit_conv(p.dwconv, prefix + ".dwconv", visit);
  visit(prefix + ".dwconv.tau", p.dwconv.tau);
  visit_conv(p.sca, prefix + ".sca", visit);
  visit_conv(p.project1, prefix + ".project1", visit);
  visit(prefix + ".beta", p.beta);
  visit(prefix + ".norm2.weight", p.norm2.weight);
  visit(prefix + ".norm2.bias", p.norm2.bias);
  visit_conv(p.expand2, prefix + ".expand2", visit);
  visit_conv(p.project2, prefix + ".project2", visit);
  visit(prefix + ".gamma", p.gamma);
}

}  // namespace interir
