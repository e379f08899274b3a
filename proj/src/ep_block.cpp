#include "interir/ep_block.hpp"

#include <cmath>

#include "interir/errors.hpp"

namespace interir {

namespace {

ConvParams zero_conv(std::size_t cout, std::size_t cin, std::size_t k) {
  return {Tensor({cout, cin, k, k}), Tensor({cout})};
}

NormParams zero_norm(std::size_t c) { return {Tensor({c}), Tensor({c})}; }

Tensor pointwise(const Tensor& x, const ConvParams& p) {
  return conv2d(x, p.weight, p.bias);
}

}  // namespace

Tensor layer_norm_channels(const Tensor& x, const NormParams& p) {
  const std::size_t batch = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (p.weight.size() != c || p.bias.size() != c) {
    throw DimensionError("channel", "layer norm expects " + std::to_string(p.weight.size()) +
                                        " channels, got " + std::to_string(c));
  }
  Tensor out(x.shape());
  auto in = x.data();
  auto o = out.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t base = b * c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      double mean = 0.0;
      for (std::size_t k = 0; k < c; ++k) mean += in[base + k * plane + i];
      mean /= static_cast<double>(c);
      double var = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        const double d = in[base + k * plane + i] - mean;
        var += d * d;
      }
      var /= static_cast<double>(c);
      const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
      for (std::size_t k = 0; k < c; ++k) {
        o[base + k * plane + i] = (in[base + k * plane + i] - mean) * inv * p.weight[k] + p.bias[k];
      }
    }
  }
  return out;
}

Tensor simple_gate(const Tensor& x) {
  auto [lhs, rhs] = split_half(x, 1);
  return hadamard(lhs, rhs);
}

Tensor simplified_channel_attention(const Tensor& x, const ConvParams& p) {
  const std::size_t batch = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  const Tensor pooled = adaptive_avg_pool(x, 1, 1);
  const Tensor scale = conv2d(pooled, p.weight, p.bias);
  Tensor out = x;
  auto o = out.data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t k = 0; k < c; ++k) {
      const double s = scale[b * c + k];
      for (std::size_t i = 0; i < plane; ++i) o[(b * c + k) * plane + i] *= s;
    }
  return out;
}

Tensor ep_block(const Tensor& x, const EPBlockParams& params) {
  if (x.rank() != 4) {
    throw DimensionError("rank", "ep_block expects [B,C,H,W], got " + shape_string(x.shape()));
  }
  if (x.dim(1) != params.channels()) {
    throw DimensionError("channel", "ep_block built for " + std::to_string(params.channels()) +
                                        " channels, got " + std::to_string(x.dim(1)));
  }
  Tensor t = pointwise(layer_norm_channels(x, params.norm1), params.expand1);
  t = explainable_conv_forward(t, params.dwconv).y;
  t = simple_gate(t);
  t = simplified_channel_attention(t, params.sca);
  t = pointwise(t, params.project1);
  Tensor y = x + params.beta * t;

  Tensor u = pointwise(layer_norm_channels(y, params.norm2), params.expand2);
  u = pointwise(simple_gate(u), params.project2);
  return y += params.gamma * u;
}

EPBlockParams zero_ep_block(std::size_t channels) {
  const std::size_t c = channels, c2 = 2 * channels;
  EPBlockParams p;
  p.norm1 = zero_norm(c);
  p.expand1 = zero_conv(c2, c, 1);
  p.dwconv.weight = Tensor({c2, 1, 3, 3});
  p.dwconv.bias = Tensor({c2});
  p.dwconv.geom = {1, 1, static_cast<int>(c2)};
  p.sca = zero_conv(c, c, 1);
  p.project1 = zero_conv(c, c, 1);
  p.norm2 = zero_norm(c);
  p.expand2 = zero_conv(c2, c, 1);
  p.project2 = zero_conv(c, c, 1);
  return p;
}

void kaiming_fill(Tensor& weight, Xoshiro256& rng) {
  const double fan_in = static_cast<double>(weight.dim(1) * weight.dim(2) * weight.dim(3));
  const double std_dev = std::sqrt(2.0 / fan_in);
  for (auto& v : weight.data()) v = std_dev * rng.normal();
}

EPBlockParams seed_ep_block(std::size_t channels, Xoshiro256& rng, double residual_scale) {
  EPBlockParams p = zero_ep_block(channels);
  for (auto& v : p.norm1.weight.data()) v = 1.0;
  for (auto& v : p.norm2.weight.data()) v = 1.0;
  kaiming_fill(p.expand1.weight, rng);
  kaiming_fill(p.dwconv.weight, rng);
  kaiming_fill(p.sca.weight, rng);
  kaiming_fill(p.project1.weight, rng);
  kaiming_fill(p.expand2.weight, rng);
  kaiming_fill(p.project2.weight, rng);
  p.beta = residual_scale;
  p.gamma = residual_scale;
  return p;
}

}  // namespace interir
