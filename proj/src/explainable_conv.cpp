#include "interir/explainable_conv.hpp"

#include <bit>
#include <cmath>
#include <mutex>

#include "interir/errors.hpp"

namespace interir {

namespace {

std::mutex g_stats_mutex;
AttentionStats g_stats;

void record_attention(std::uint64_t slabs, double deviation) {
  std::lock_guard lock(g_stats_mutex);
  g_stats.slabs += slabs;
  g_stats.max_deviation = std::max(g_stats.max_deviation, deviation);
}

std::uint64_t digest(const ExplainableConvParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (auto d : p.weight.shape()) mix(d);
  for (double v : p.weight.data()) mix(std::bit_cast<std::uint64_t>(v));
  for (double v : p.bias.data()) mix(std::bit_cast<std::uint64_t>(v));
  mix(std::bit_cast<std::uint64_t>(p.tau));
  mix(static_cast<std::uint64_t>(p.geom.stride));
  mix(static_cast<std::uint64_t>(p.geom.padding));
  mix(static_cast<std::uint64_t>(p.geom.groups));
  return h;
}

Tensor sample_of(const Tensor& x, std::size_t b) {
  const std::size_t per = x.size() / x.dim(0);
  auto span = x.data().subspan(b * per, per);
  return Tensor({1, x.dim(1), x.dim(2), x.dim(3)},
                std::vector<double>(span.begin(), span.end()));
}

void write_sample(Tensor& dst, std::size_t b, const Tensor& src) {
  const std::size_t per = src.size();
  std::copy(src.data().begin(), src.data().end(), dst.data().begin() + static_cast<std::ptrdiff_t>(b * per));
}

Tensor attention_of(const Tensor& attention, std::size_t b) {
  const std::size_t per = attention.size() / attention.dim(0);
  auto span = attention.data().subspan(b * per, per);
  return Tensor({attention.dim(1), attention.dim(2), attention.dim(3)},
                std::vector<double>(span.begin(), span.end()));
}

}  // namespace

AttentionStats attention_stats() {
  std::lock_guard lock(g_stats_mutex);
  return g_stats;
}

void reset_attention_stats() {
  std::lock_guard lock(g_stats_mutex);
  g_stats = {};
}

Tensor modulate_kernel(const Tensor& weight, const Tensor& attention, int groups) {
  const std::size_t cout = weight.dim(0), cin_per_group = weight.dim(1);
  const std::size_t kh = weight.dim(2), kw = weight.dim(3);
  const auto g = static_cast<std::size_t>(groups);
  if (attention.rank() != 3 || attention.dim(0) != cin_per_group * g ||
      attention.dim(1) != kh || attention.dim(2) != kw) {
    throw DimensionError("channel", "attention " + shape_string(attention.shape()) +
                                        " does not fit kernel " +
                                        shape_string(weight.shape()));
  }
  const std::size_t cout_per_group = cout / g;
  Tensor out = weight;
  for (std::size_t oc = 0; oc < cout; ++oc) {
    for (std::size_t k = 0; k < cin_per_group; ++k) {
      const std::size_t cin = (oc / cout_per_group) * cin_per_group + k;
      for (std::size_t i = 0; i < kh; ++i)
        for (std::size_t j = 0; j < kw; ++j) out.at(oc, k, i, j) *= attention.at(cin, i, j);
    }
  }
  return out;
}

ExplainableConvOutput explainable_conv_forward(const Tensor& x,
                                               const ExplainableConvParams& p) {
  if (x.rank() != 4) {
    throw DimensionError("rank", "explainable conv input must be [B,C,H,W], got " +
                                     shape_string(x.shape()));
  }
  if (p.weight.rank() != 4) {
    throw DimensionError("rank", "explainable conv kernel must be 4-D, got " +
                                     shape_string(p.weight.shape()));
  }
  const std::size_t kh = p.weight.dim(2), kw = p.weight.dim(3);

  Tensor mask(x.shape());
  auto xd = x.data();
  auto md = mask.data();
  for (std::size_t i = 0; i < xd.size(); ++i) md[i] = xd[i] >= p.tau ? 1.0 : 0.0;

  ExplainableConvOutput out;
  auto& cache = out.cache;
  cache.pooled_mask = adaptive_avg_pool(mask, kh, kw);
  cache.attention = softmax_lastaxes(cache.pooled_mask);

  const std::size_t slab = kh * kw;
  double deviation = 0.0;
  auto ad = cache.attention.data();
  for (std::size_t base = 0; base < ad.size(); base += slab) {
    double s = 0.0;
    for (std::size_t i = 0; i < slab; ++i) s += ad[base + i];
    deviation = std::max(deviation, std::abs(s - 1.0));
  }
  record_attention(ad.size() / slab, deviation);
  if (!(deviation <= kAttentionTolerance)) {
    throw ContractError("attention slab sum deviates from 1 by " + std::to_string(deviation));
  }

  const std::size_t batch = x.dim(0);
  cache.kernels.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    cache.kernels.push_back(
        modulate_kernel(p.weight, attention_of(cache.attention, b), p.geom.groups));
    Tensor yb = conv2d(sample_of(x, b), cache.kernels.back(), p.bias, p.geom);
    if (b == 0) out.y = Tensor({batch, yb.dim(1), yb.dim(2), yb.dim(3)});
    write_sample(out.y, b, yb);
  }
  cache.input = x;
  cache.output_shape = out.y.shape();
  cache.params_digest = digest(p);
  return out;
}

ExplainableConvGrads explainable_conv_backward(const Tensor& grad_y,
                                               const ExplainableConvCache& cache,
                                               const ExplainableConvParams& p) {
  if (cache.kernels.empty() || cache.params_digest != digest(p)) {
    throw ContractError("explainable conv backward: cache does not belong to these parameters");
  }
  if (grad_y.shape() != cache.output_shape) {
    throw ContractError("explainable conv backward: grad_y " + shape_string(grad_y.shape()) +
                        " vs cached output " + shape_string(cache.output_shape));
  }
  ExplainableConvGrads grads;
  grads.x = Tensor(cache.input.shape());
  grads.weight = Tensor(p.weight.shape());
  grads.bias = Tensor({p.weight.dim(0)});

  const std::size_t cout = grad_y.dim(1), plane = grad_y.dim(2) * grad_y.dim(3);
  auto gy = grad_y.data();
  for (std::size_t b = 0; b < grad_y.dim(0); ++b) {
    for (std::size_t oc = 0; oc < cout; ++oc) {
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) s += gy[(b * cout + oc) * plane + i];
      grads.bias[oc] += s;
    }
  }

  for (std::size_t b = 0; b < grad_y.dim(0); ++b) {
    const Tensor gyb = sample_of(grad_y, b);
    const Tensor xb = sample_of(cache.input, b);
    const Tensor gw = conv2d_weight_grad(gyb, xb, p.weight.shape(), p.geom);
    grads.weight += modulate_kernel(gw, attention_of(cache.attention, b), p.geom.groups);
    write_sample(grads.x, b,
                 conv2d_input_grad(gyb, cache.kernels[b], xb.shape(), p.geom));
  }
  return grads;
}

}  // namespace interir
