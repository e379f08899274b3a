#include "interir/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>

#include "interir/errors.hpp"

namespace interir {

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void validate_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw DimensionError("rank", "tensor rank must be 1..4, got " +
                                     std::to_string(shape.size()));
  }
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == 0) {
      throw DimensionError("axis " + std::to_string(i),
                           "zero extent in shape " + shape_string(shape));
    }
  }
}

void require_rank(const Tensor& x, std::size_t rank, const char* what) {
  if (x.rank() != rank) {
    throw DimensionError("rank", std::string(what) + ": expected rank " +
                                     std::to_string(rank) + ", got shape " +
                                     shape_string(x.shape()));
  }
}

struct ConvDims {
  std::size_t batch, cin, h, w;
  std::size_t cout, cin_per_group, kh, kw;
  std::size_t groups, cout_per_group;
  std::size_t out_h, out_w;
  std::size_t stride;
  std::ptrdiff_t pad;
};

ConvDims conv_dims(const Shape& in, const Shape& k, ConvGeometry geom) {
  if (in.size() != 4) {
    throw DimensionError("rank", "conv2d input must be [B,C,H,W], got " +
                                     shape_string(in));
  }
  if (k.size() != 4) {
    throw DimensionError("rank", "conv2d kernel must be [Cout,Cin/g,Kh,Kw], got " +
                                     shape_string(k));
  }
  if (geom.groups < 1 || geom.stride < 1 || geom.padding < 0) {
    throw DimensionError("geometry", "conv2d requires groups>=1, stride>=1, padding>=0");
  }
  ConvDims d{};
  d.batch = in[0];
  d.cin = in[1];
  d.h = in[2];
  d.w = in[3];
  d.cout = k[0];
  d.cin_per_group = k[1];
  d.kh = k[2];
  d.kw = k[3];
  d.groups = static_cast<std::size_t>(geom.groups);
  d.stride = static_cast<std::size_t>(geom.stride);
  d.pad = geom.padding;
  if (d.cin % d.groups != 0) {
    throw DimensionError("channel", "input channels " + std::to_string(d.cin) +
                                        " not divisible by groups " +
                                        std::to_string(d.groups));
  }
  if (d.cout % d.groups != 0) {
    throw DimensionError("channel", "output channels " + std::to_string(d.cout) +
                                        " not divisible by groups " +
                                        std::to_string(d.groups));
  }
  if (d.cin / d.groups != d.cin_per_group) {
    throw DimensionError("channel", "kernel expects " +
                                        std::to_string(d.cin_per_group) +
                                        " input channels per group, input has " +
                                        std::to_string(d.cin / d.groups));
  }
  if (d.kh % 2 == 0 || d.kw % 2 == 0) {
    throw DimensionError("kernel", "kernel extents must be odd, got " +
                                       shape_string(k));
  }
  const auto padded_h = static_cast<std::ptrdiff_t>(d.h) + 2 * d.pad;
  const auto padded_w = static_cast<std::ptrdiff_t>(d.w) + 2 * d.pad;
  if (padded_h < static_cast<std::ptrdiff_t>(d.kh)) {
    throw DimensionError("height", "kernel taller than padded input");
  }
  if (padded_w < static_cast<std::ptrdiff_t>(d.kw)) {
    throw DimensionError("width", "kernel wider than padded input");
  }
  d.out_h = static_cast<std::size_t>(padded_h - static_cast<std::ptrdiff_t>(d.kh)) / d.stride + 1;
  d.out_w = static_cast<std::size_t>(padded_w - static_cast<std::ptrdiff_t>(d.kw)) / d.stride + 1;
  d.cout_per_group = d.cout / d.groups;
  return d;
}

// Calls fn(out_index, in_index) for every valid tap of one kernel offset
// (ki, kj) across the output plane.
template <typename Fn>
void for_each_tap(const ConvDims& d, std::size_t ki, std::size_t kj, Fn&& fn) {
  for (std::size_t oh = 0; oh < d.out_h; ++oh) {
    const auto ih = static_cast<std::ptrdiff_t>(oh * d.stride + ki) - d.pad;
    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
    for (std::size_t ow = 0; ow < d.out_w; ++ow) {
      const auto iw = static_cast<std::ptrdiff_t>(ow * d.stride + kj) - d.pad;
      if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w)) continue;
      fn(oh * d.out_w + ow, static_cast<std::size_t>(ih) * d.w + static_cast<std::size_t>(iw));
    }
  }
}

std::vector<std::complex<double>> twiddles(std::size_t n) {
  std::vector<std::complex<double>> t(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    t[k] = {std::cos(angle), std::sin(angle)};
  }
  return t;
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("size", "shape " + shape_string(shape_) + " needs " +
                                     std::to_string(element_count(shape_)) +
                                     " elements, got " +
                                     std::to_string(data_.size()));
  }
}

Tensor Tensor::identity(std::size_t channels, std::size_t n) {
  Tensor t({channels, n, n});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) t.at(c, i, i) = 1.0;
  }
  return t;
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "tensor +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require_same_shape(*this, other, "tensor -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) noexcept {
  for (auto& v : data_) v *= s;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Tensor a, double s) { return a *= s; }
Tensor operator*(double s, Tensor a) { return a *= s; }

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bd[i];
  return out;
}

Tensor scalar_minus(double s, const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.data()) v = s - v;
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept {
  if (a.shape() != b.shape()) return false;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(ad[i]) != std::bit_cast<std::uint64_t>(bd[i])) {
      return false;
    }
  }
  return true;
}

double sum(const Tensor& x) noexcept {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return s;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) s += ad[i] * bd[i];
  return s;
}

double l2_norm(const Tensor& x) noexcept {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Tensor& x) noexcept {
  double m = 0.0;
  for (double v : x.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) m = std::max(m, std::abs(ad[i] - bd[i]));
  return m;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() == b.shape()) return;
  std::string axis = "rank";
  if (a.rank() == b.rank()) {
    for (std::size_t i = 0; i < a.rank(); ++i) {
      if (a.dim(i) != b.dim(i)) {
        axis = "axis " + std::to_string(i);
        break;
      }
    }
  }
  throw DimensionError(axis, std::string(what) + ": shape mismatch " +
                                 shape_string(a.shape()) + " vs " +
                                 shape_string(b.shape()));
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              ConvGeometry geom) {
  const ConvDims d = conv_dims(input.shape(), kernel.shape(), geom);
  if (!bias.empty() && (bias.rank() != 1 || bias.dim(0) != d.cout)) {
    throw DimensionError("channel", "bias must be [" + std::to_string(d.cout) +
                                        "], got " + shape_string(bias.shape()));
  }
  Tensor out({d.batch, d.cout, d.out_h, d.out_w});
  const std::size_t in_plane = d.h * d.w;
  const std::size_t out_plane = d.out_h * d.out_w;
  auto in = input.data();
  auto k = kernel.data();
  auto o = out.data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t oc = 0; oc < d.cout; ++oc) {
      double* dst = o.data() + (b * d.cout + oc) * out_plane;
      if (!bias.empty()) std::fill(dst, dst + out_plane, bias[oc]);
      const std::size_t g = oc / d.cout_per_group;
      for (std::size_t icg = 0; icg < d.cin_per_group; ++icg) {
        const std::size_t ic = g * d.cin_per_group + icg;
        const double* src = in.data() + (b * d.cin + ic) * in_plane;
        for (std::size_t ki = 0; ki < d.kh; ++ki) {
          for (std::size_t kj = 0; kj < d.kw; ++kj) {
            const double wv = k[((oc * d.cin_per_group + icg) * d.kh + ki) * d.kw + kj];
            if (wv == 0.0) continue;
            for_each_tap(d, ki, kj, [&](std::size_t oi, std::size_t ii) {
              dst[oi] += wv * src[ii];
            });
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d_input_grad(const Tensor& grad_out, const Tensor& kernel,
                         const Shape& input_shape, ConvGeometry geom) {
  const ConvDims d = conv_dims(input_shape, kernel.shape(), geom);
  const Shape expected{d.batch, d.cout, d.out_h, d.out_w};
  if (grad_out.shape() != expected) {
    throw DimensionError("grad", "conv2d_input_grad: grad_out " +
                                     shape_string(grad_out.shape()) +
                                     " does not match output " +
                                     shape_string(expected));
  }
  Tensor grad_in(input_shape);
  const std::size_t in_plane = d.h * d.w;
  const std::size_t out_plane = d.out_h * d.out_w;
  auto go = grad_out.data();
  auto k = kernel.data();
  auto gi = grad_in.data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t oc = 0; oc < d.cout; ++oc) {
      const double* src = go.data() + (b * d.cout + oc) * out_plane;
      const std::size_t g = oc / d.cout_per_group;
      for (std::size_t icg = 0; icg < d.cin_per_group; ++icg) {
        const std::size_t ic = g * d.cin_per_group + icg;
        double* dst = gi.data() + (b * d.cin + ic) * in_plane;
        for (std::size_t ki = 0; ki < d.kh; ++ki) {
          for (std::size_t kj = 0; kj < d.kw; ++kj) {
            const double wv = k[((oc * d.cin_per_group + icg) * d.kh + ki) * d.kw + kj];
            for_each_tap(d, ki, kj, [&](std::size_t oi, std::size_t ii) {
              dst[ii] += wv * src[oi];
            });
          }
        }
      }
    }
  }
  return grad_in;
}

Tensor conv2d_weight_grad(const Tensor& grad_out, const Tensor& input,
                          const Shape& kernel_shape, ConvGeometry geom) {
  const ConvDims d = conv_dims(input.shape(), kernel_shape, geom);
  const Shape expected{d.batch, d.cout, d.out_h, d.out_w};
  if (grad_out.shape() != expected) {
    throw DimensionError("grad", "conv2d_weight_grad: grad_out " +
                                     shape_string(grad_out.shape()) +
                                     " does not match output " +
                                     shape_string(expected));
  }
  Tensor grad_k(kernel_shape);
  const std::size_t in_plane = d.h * d.w;
  const std::size_t out_plane = d.out_h * d.out_w;
  auto go = grad_out.data();
  auto in = input.data();
  auto gk = grad_k.data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t oc = 0; oc < d.cout; ++oc) {
      const double* gsrc = go.data() + (b * d.cout + oc) * out_plane;
      const std::size_t g = oc / d.cout_per_group;
      for (std::size_t icg = 0; icg < d.cin_per_group; ++icg) {
        const std::size_t ic = g * d.cin_per_group + icg;
        const double* isrc = in.data() + (b * d.cin + ic) * in_plane;
        for (std::size_t ki = 0; ki < d.kh; ++ki) {
          for (std::size_t kj = 0; kj < d.kw; ++kj) {
            double acc = 0.0;
            for_each_tap(d, ki, kj, [&](std::size_t oi, std::size_t ii) {
              acc += gsrc[oi] * isrc[ii];
            });
            gk[((oc * d.cin_per_group + icg) * d.kh + ki) * d.kw + kj] += acc;
          }
        }
      }
    }
  }
  return grad_k;
}

Tensor channel_matmul(const Tensor& lhs, const Tensor& rhs) {
  require_rank(lhs, 3, "channel_matmul lhs");
  require_rank(rhs, 3, "channel_matmul rhs");
  if (lhs.dim(0) != rhs.dim(0)) {
    throw DimensionError("channel", "channel_matmul: " + shape_string(lhs.shape()) +
                                        " x " + shape_string(rhs.shape()));
  }
  if (lhs.dim(2) != rhs.dim(1)) {
    throw DimensionError("inner", "channel_matmul: " + shape_string(lhs.shape()) +
                                      " x " + shape_string(rhs.shape()));
  }
  const std::size_t C = lhs.dim(0), M = lhs.dim(1), K = lhs.dim(2), N = rhs.dim(2);
  Tensor out({C, M, N});
  auto a = lhs.data();
  auto b = rhs.data();
  auto o = out.data();
  for (std::size_t c = 0; c < C; ++c) {
    const double* ac = a.data() + c * M * K;
    const double* bc = b.data() + c * K * N;
    double* oc = o.data() + c * M * N;
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t k = 0; k < K; ++k) {
        const double av = ac[i * K + k];
        for (std::size_t j = 0; j < N; ++j) oc[i * N + j] += av * bc[k * N + j];
      }
    }
  }
  return out;
}

Tensor channel_transpose(const Tensor& x) {
  require_rank(x, 3, "channel_transpose");
  const std::size_t C = x.dim(0), M = x.dim(1), N = x.dim(2);
  Tensor out({C, N, M});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j < N; ++j) out.at(c, j, i) = x.at(c, i, j);
    }
  }
  return out;
}

std::vector<double> channel_frobenius(const Tensor& x) {
  require_rank(x, 3, "channel_frobenius");
  const std::size_t C = x.dim(0), plane = x.dim(1) * x.dim(2);
  std::vector<double> norms(C, 0.0);
  auto d = x.data();
  for (std::size_t c = 0; c < C; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += d[c * plane + i] * d[c * plane + i];
    norms[c] = std::sqrt(s);
  }
  return norms;
}

Tensor softmax_lastaxes(const Tensor& x) {
  if (x.rank() < 2) {
    throw DimensionError("rank", "softmax_lastaxes needs at least 2 axes");
  }
  const std::size_t slab = x.dim(x.rank() - 1) * x.dim(x.rank() - 2);
  Tensor out = x;
  auto o = out.data();
  for (std::size_t base = 0; base < o.size(); base += slab) {
    const auto first = o.begin() + static_cast<std::ptrdiff_t>(base);
    const auto last = first + static_cast<std::ptrdiff_t>(slab);
    const double peak = *std::max_element(first, last);
    double total = 0.0;
    for (auto it = first; it != last; ++it) {
      *it = std::exp(*it - peak);
      total += *it;
    }
    for (auto it = first; it != last; ++it) *it /= total;
  }
  return out;
}

Tensor adaptive_avg_pool(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  require_rank(x, 4, "adaptive_avg_pool");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (out_h < 1 || out_h > H) {
    throw DimensionError("height", "adaptive_avg_pool: output height " +
                                       std::to_string(out_h) + " vs input " +
                                       std::to_string(H));
  }
  if (out_w < 1 || out_w > W) {
    throw DimensionError("width", "adaptive_avg_pool: output width " +
                                      std::to_string(out_w) + " vs input " +
                                      std::to_string(W));
  }
  Tensor out({B, C, out_h, out_w});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t i = 0; i < out_h; ++i) {
        const std::size_t h0 = i * H / out_h;
        const std::size_t h1 = ((i + 1) * H + out_h - 1) / out_h;
        for (std::size_t j = 0; j < out_w; ++j) {
          const std::size_t w0 = j * W / out_w;
          const std::size_t w1 = ((j + 1) * W + out_w - 1) / out_w;
          double s = 0.0;
          for (std::size_t h = h0; h < h1; ++h) {
            for (std::size_t w = w0; w < w1; ++w) s += x.at(b, c, h, w);
          }
          out.at(b, c, i, j) = s / static_cast<double>((h1 - h0) * (w1 - w0));
        }
      }
    }
  }
  return out;
}

Spectrum dft2d(const Tensor& x) {
  if (x.rank() < 2) {
    throw DimensionError("rank", "dft2d needs at least 2 axes");
  }
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  const auto tw_h = twiddles(H);
  const auto tw_w = twiddles(W);
  Spectrum spec{Tensor(x.shape()), Tensor(x.shape())};
  std::vector<std::complex<double>> rows(H * W);
  auto xd = x.data();
  auto re = spec.real.data();
  auto im = spec.imag.data();
  for (std::size_t base = 0; base < xd.size(); base += H * W) {
    // Row transforms, then column transforms.
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t v = 0; v < W; ++v) {
        std::complex<double> acc = 0.0;
        for (std::size_t w = 0; w < W; ++w) {
          acc += xd[base + h * W + w] * tw_w[(v * w) % W];
        }
        rows[h * W + v] = acc;
      }
    }
    for (std::size_t u = 0; u < H; ++u) {
      for (std::size_t v = 0; v < W; ++v) {
        std::complex<double> acc = 0.0;
        for (std::size_t h = 0; h < H; ++h) acc += rows[h * W + v] * tw_h[(u * h) % H];
        re[base + u * W + v] = acc.real();
        im[base + u * W + v] = acc.imag();
      }
    }
  }
  return spec;
}

Tensor pixel_unshuffle(const Tensor& x, std::size_t r) {
  require_rank(x, 4, "pixel_unshuffle");
  if (r == 0) throw DimensionError("factor", "pixel_unshuffle factor must be >= 1");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % r != 0) {
    throw DimensionError("height", "pixel_unshuffle: height " + std::to_string(H) +
                                       " not divisible by " + std::to_string(r));
  }
  if (W % r != 0) {
    throw DimensionError("width", "pixel_unshuffle: width " + std::to_string(W) +
                                      " not divisible by " + std::to_string(r));
  }
  const std::size_t Ho = H / r, Wo = W / r;
  Tensor out({B, C * r * r, Ho, Wo});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j)
          for (std::size_t h = 0; h < Ho; ++h)
            for (std::size_t w = 0; w < Wo; ++w)
              out.at(b, c * r * r + i * r + j, h, w) = x.at(b, c, h * r + i, w * r + j);
  return out;
}

Tensor pixel_shuffle(const Tensor& x, std::size_t r) {
  require_rank(x, 4, "pixel_shuffle");
  if (r == 0) throw DimensionError("factor", "pixel_shuffle factor must be >= 1");
  const std::size_t B = x.dim(0), Cr = x.dim(1), Ho = x.dim(2), Wo = x.dim(3);
  if (Cr % (r * r) != 0) {
    throw DimensionError("channel", "pixel_shuffle: channels " + std::to_string(Cr) +
                                        " not divisible by " + std::to_string(r * r));
  }
  const std::size_t C = Cr / (r * r);
  Tensor out({B, C, Ho * r, Wo * r});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j)
          for (std::size_t h = 0; h < Ho; ++h)
            for (std::size_t w = 0; w < Wo; ++w)
              out.at(b, c, h * r + i, w * r + j) = x.at(b, c * r * r + i * r + j, h, w);
  return out;
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
  if (a.rank() != b.rank() || axis >= a.rank()) {
    throw DimensionError("rank", "concat: " + shape_string(a.shape()) + " and " +
                                     shape_string(b.shape()) + " on axis " +
                                     std::to_string(axis));
  }
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (i != axis && a.dim(i) != b.dim(i)) {
      throw DimensionError("axis " + std::to_string(i),
                           "concat: " + shape_string(a.shape()) + " and " +
                               shape_string(b.shape()));
    }
  }
  Shape shape = a.shape();
  shape[axis] += b.dim(axis);
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= a.dim(i);
  for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.dim(i);
  const std::size_t na = a.dim(axis) * inner, nb = b.dim(axis) * inner;
  std::vector<double> data;
  data.reserve(a.size() + b.size());
  for (std::size_t o = 0; o < outer; ++o) {
    auto ad = a.data().subspan(o * na, na);
    auto bd = b.data().subspan(o * nb, nb);
    data.insert(data.end(), ad.begin(), ad.end());
    data.insert(data.end(), bd.begin(), bd.end());
  }
  return Tensor(std::move(shape), std::move(data));
}

std::pair<Tensor, Tensor> split_half(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("rank", "split_half: axis out of range");
  }
  if (x.dim(axis) % 2 != 0) {
    const bool channel_axis = (x.rank() == 4 && axis == 1) || (x.rank() == 3 && axis == 0);
    throw DimensionError(channel_axis ? "channel" : "axis " + std::to_string(axis),
                         "split_half: odd extent " + std::to_string(x.dim(axis)));
  }
  Shape shape = x.shape();
  shape[axis] /= 2;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t half = shape[axis] * inner;
  std::vector<double> first, second;
  first.reserve(x.size() / 2);
  second.reserve(x.size() / 2);
  for (std::size_t o = 0; o < outer; ++o) {
    auto lo = x.data().subspan(o * 2 * half, half);
    auto hi = x.data().subspan(o * 2 * half + half, half);
    first.insert(first.end(), lo.begin(), lo.end());
    second.insert(second.end(), hi.begin(), hi.end());
  }
  return {Tensor(shape, std::move(first)), Tensor(shape, std::move(second))};
}

}  // namespace interir
