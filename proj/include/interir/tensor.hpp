#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace interir {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with up to four axes.
///
/// Image-like data uses [batch, channel, height, width]; per-channel matrices
/// use [channel, rows, cols]. A default-constructed tensor is empty (rank 0,
/// no elements) and only serves as a placeholder, e.g. "no bias".
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  /// `channels` stacked n-by-n identity matrices, shape [channels, n, n].
  static Tensor identity(std::size_t channels, std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  /// Same elements under a new shape of equal element count.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s) noexcept;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);
Tensor operator*(double s, Tensor a);
Tensor hadamard(const Tensor& a, const Tensor& b);
/// s - x elementwise.
Tensor scalar_minus(double s, const Tensor& x);
Tensor relu(const Tensor& x);

/// Exact equality of shape and every bit of every element.
bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept;

double sum(const Tensor& x) noexcept;
double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& x) noexcept;
double max_abs(const Tensor& x) noexcept;
double max_abs_diff(const Tensor& a, const Tensor& b);

/// Throws DimensionError unless `a` and `b` have the same shape.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

struct ConvGeometry {
  int stride = 1;
  int padding = 0;
  int groups = 1;
};

/// Cross-correlation of `input` [B,Cin,H,W] with `kernel` [Cout,Cin/g,Kh,Kw].
/// `bias` is either empty or [Cout].
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              ConvGeometry geom = {});

/// Gradient of a conv2d output w.r.t. its input.
Tensor conv2d_input_grad(const Tensor& grad_out, const Tensor& kernel,
                         const Shape& input_shape, ConvGeometry geom = {});

/// Gradient of a conv2d output w.r.t. its kernel.
Tensor conv2d_weight_grad(const Tensor& grad_out, const Tensor& input,
                          const Shape& kernel_shape, ConvGeometry geom = {});

/// Per-channel matrix product: [C,M,K] x [C,K,N] -> [C,M,N].
Tensor channel_matmul(const Tensor& lhs, const Tensor& rhs);
/// Per-channel transpose: [C,M,N] -> [C,N,M].
Tensor channel_transpose(const Tensor& x);
/// Per-channel Frobenius norms of a [C,M,N] tensor.
std::vector<double> channel_frobenius(const Tensor& x);

/// Softmax over each trailing 2-D slab, max-subtracted.
Tensor softmax_lastaxes(const Tensor& x);

/// Adaptive average pooling of [B,C,H,W] to [B,C,out_h,out_w] with windows
/// [floor(i*H/out_h), ceil((i+1)*H/out_h)).
Tensor adaptive_avg_pool(const Tensor& x, std::size_t out_h,
                         std::size_t out_w);

struct Spectrum {
  Tensor real;
  Tensor imag;
};

/// Unnormalized forward DFT over the last two axes. Leading axes are batch.
Spectrum dft2d(const Tensor& x);

/// [B,C,H,W] -> [B,C*r*r,H/r,W/r]; channel c*r*r + i*r + j holds
/// input pixel (h*r + i, w*r + j).
Tensor pixel_unshuffle(const Tensor& x, std::size_t r);
Tensor pixel_shuffle(const Tensor& x, std::size_t r);

/// Concatenate / split along `axis`. split_half requires an even extent.
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
std::pair<Tensor, Tensor> split_half(const Tensor& x, std::size_t axis);

}  // namespace interir
