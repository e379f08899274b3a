#include "interir/verify/oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace interir::oracle {

Tensor naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
                    int padding, int groups) {
  const long B = static_cast<long>(x.dim(0)), Cin = static_cast<long>(x.dim(1));
  const long H = static_cast<long>(x.dim(2)), W = static_cast<long>(x.dim(3));
  const long Cout = static_cast<long>(w.dim(0)), Kh = static_cast<long>(w.dim(2));
  const long Kw = static_cast<long>(w.dim(3));
  const long cin_g = Cin / groups, cout_g = Cout / groups;
  const long Ho = (H + 2 * padding - Kh) / stride + 1;
  const long Wo = (W + 2 * padding - Kw) / stride + 1;
  Tensor y({static_cast<std::size_t>(B), static_cast<std::size_t>(Cout),
            static_cast<std::size_t>(Ho), static_cast<std::size_t>(Wo)});
  for (long b = 0; b < B; ++b)
    for (long co = 0; co < Cout; ++co)
      for (long i = 0; i < Ho; ++i)
        for (long j = 0; j < Wo; ++j) {
          double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(co)];
          const long g = co / cout_g;
          for (long k = 0; k < cin_g; ++k)
            for (long u = 0; u < Kh; ++u)
              for (long v = 0; v < Kw; ++v) {
                const long r = i * stride + u - padding, c = j * stride + v - padding;
                if (r < 0 || r >= H || c < 0 || c >= W) continue;
                acc += w.at(static_cast<std::size_t>(co), static_cast<std::size_t>(k),
                            static_cast<std::size_t>(u), static_cast<std::size_t>(v)) *
                       x.at(static_cast<std::size_t>(b), static_cast<std::size_t>(g * cin_g + k),
                            static_cast<std::size_t>(r), static_cast<std::size_t>(c));
              }
          y.at(static_cast<std::size_t>(b), static_cast<std::size_t>(co),
               static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
        }
  return y;
}

void naive_dft(const Tensor& x, Tensor& real, Tensor& imag) {
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  const std::size_t slabs = x.size() / (H * W);
  real = Tensor(x.shape());
  imag = Tensor(x.shape());
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t s = 0; s < slabs; ++s)
    for (std::size_t k = 0; k < H; ++k)
      for (std::size_t l = 0; l < W; ++l) {
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < H; ++n)
          for (std::size_t m = 0; m < W; ++m) {
            const double angle = -two_pi * (static_cast<double>(k * n) / static_cast<double>(H) +
                                             static_cast<double>(l * m) / static_cast<double>(W));
            const double v = x[s * H * W + n * W + m];
            re += v * std::cos(angle);
            im += v * std::sin(angle);
          }
        real[s * H * W + k * W + l] = re;
        imag[s * H * W + k * W + l] = im;
      }
}

Tensor kronecker_apply(const Tensor& a, const Tensor& image, const Tensor& b) {
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  const std::size_t N = H * W;
  Tensor out({C, a.dim(1), b.dim(2)});
  for (std::size_t c = 0; c < C; ++c) {
    // K = B^T kron A: K[(q*H + p), (l*H + k)] = B[l,q] * A[p,k].
    std::vector<double> kron(N * N);
    for (std::size_t q = 0; q < W; ++q)
      for (std::size_t p = 0; p < H; ++p)
        for (std::size_t l = 0; l < W; ++l)
          for (std::size_t k = 0; k < H; ++k)
            kron[(q * H + p) * N + (l * H + k)] = b.at(c, l, q) * a.at(c, p, k);
    std::vector<double> vec(N);
    for (std::size_t l = 0; l < W; ++l)
      for (std::size_t k = 0; k < H; ++k) vec[l * H + k] = image.at(c, k, l);
    for (std::size_t row = 0; row < N; ++row) {
      double acc = 0.0;
      for (std::size_t col = 0; col < N; ++col) acc += kron[row * N + col] * vec[col];
      out.at(c, row % H, row / H) = acc;
    }
  }
  return out;
}

double prox_grid_search(double x, double t, double step) {
  const double radius = std::abs(x) + t + 1.0;
  const auto points = static_cast<long>(std::ceil(2.0 * radius / step));
  double best_c = 0.0, best = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= points; ++i) {
    const double c = -radius + static_cast<double>(i) * step;
    const double obj = t * std::abs(c) + 0.5 * (c - x) * (c - x);
    if (obj < best) {
      best = obj;
      best_c = c;
    }
  }
  return best_c;
}

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, std::vector<double>(c, 0.0)); }

std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

std::vector<double> mat_t_vec(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(m.front().size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += m[i][j] * v[i];
  return out;
}

double shrink(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

DenseFH dense_f_h(const Tensor& image, const Tensor& degraded, const Tensor& a, const Tensor& b,
                  const Tensor& lambda, const RegularizerConfig& config) {
  const std::size_t H = image.dim(1), W = image.dim(2), N = H * W;
  // Row-major vec: index h*W + w.
  Matrix m = zeros(N, N);  // vec(A I B) = m vec(I)
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j)
      for (std::size_t k = 0; k < H; ++k)
        for (std::size_t l = 0; l < W; ++l) m[i * W + j][k * W + l] = a.at(0, i, k) * b.at(0, l, j);

  Matrix v = zeros(2 * N, N);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t w = 0; w < W; ++w) {
      if (w + 1 < W) {
        v[h * W + w][h * W + w + 1] = 1.0;
        v[h * W + w][h * W + w] = -1.0;
      }
      if (h + 1 < H) {
        v[N + h * W + w][(h + 1) * W + w] = 1.0;
        v[N + h * W + w][h * W + w] = -1.0;
      }
    }

  const std::vector<double> x(image.data().begin(), image.data().end());
  const std::vector<double> d(degraded.data().begin(), degraded.data().end());
  const std::vector<double> lam(lambda.data().begin(), lambda.data().end());
  const double t = config.alpha / config.sigma;

  std::vector<double> residual = mat_vec(m, x);
  for (std::size_t i = 0; i < N; ++i) residual[i] -= d[i];
  std::vector<double> f = mat_t_vec(m, residual);

  const std::vector<double> vx = mat_vec(v, x);
  std::vector<double> inner(2 * N), mask(2 * N);
  for (std::size_t i = 0; i < 2 * N; ++i) {
    const double arg = lam[i] / config.sigma + vx[i];
    inner[i] = lam[i] + config.epsilon * (vx[i] - shrink(arg, t));
    mask[i] = std::abs(arg) > t ? 1.0 : 0.0;
  }
  const std::vector<double> vt_inner = mat_t_vec(v, inner);
  for (std::size_t i = 0; i < N; ++i) f[i] += vt_inner[i];

  std::vector<double> h = mat_t_vec(m, mat_vec(m, f));
  std::vector<double> vf = mat_vec(v, f);
  for (std::size_t i = 0; i < 2 * N; ++i) vf[i] *= 1.0 - mask[i];
  const std::vector<double> vt_vf = mat_t_vec(v, vf);
  for (std::size_t i = 0; i < N; ++i) h[i] += config.sigma * vt_vf[i];

  return {Tensor({1, H, W}, f), Tensor({1, H, W}, h)};
}

Tensor explainable_conv_steps(const Tensor& x, const ExplainableConvParams& p) {
  const std::size_t B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t Cout = p.weight.dim(0), cin_g = p.weight.dim(1);
  const std::size_t Kh = p.weight.dim(2), Kw = p.weight.dim(3);
  const std::size_t groups = static_cast<std::size_t>(p.geom.groups), cout_g = Cout / groups;

  Tensor mask(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) mask[i] = x[i] >= p.tau ? 1.0 : 0.0;

  Tensor pooled({B, Cin, Kh, Kw});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < Cin; ++c)
      for (std::size_t i = 0; i < Kh; ++i)
        for (std::size_t j = 0; j < Kw; ++j) {
          const std::size_t r0 = (i * H) / Kh, r1 = ((i + 1) * H + Kh - 1) / Kh;
          const std::size_t c0 = (j * W) / Kw, c1 = ((j + 1) * W + Kw - 1) / Kw;
          double s = 0.0;
          for (std::size_t r = r0; r < r1; ++r)
            for (std::size_t q = c0; q < c1; ++q) s += mask.at(b, c, r, q);
          pooled.at(b, c, i, j) = s / static_cast<double>((r1 - r0) * (c1 - c0));
        }

  Tensor attention(pooled.shape());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < Cin; ++c) {
      double z = 0.0;
      for (std::size_t i = 0; i < Kh; ++i)
        for (std::size_t j = 0; j < Kw; ++j) z += std::exp(pooled.at(b, c, i, j));
      for (std::size_t i = 0; i < Kh; ++i)
        for (std::size_t j = 0; j < Kw; ++j)
          attention.at(b, c, i, j) = std::exp(pooled.at(b, c, i, j)) / z;
    }

  Tensor y;
  for (std::size_t b = 0; b < B; ++b) {
    Tensor wb = p.weight;
    for (std::size_t co = 0; co < Cout; ++co)
      for (std::size_t k = 0; k < cin_g; ++k)
        for (std::size_t i = 0; i < Kh; ++i)
          for (std::size_t j = 0; j < Kw; ++j)
            wb.at(co, k, i, j) *= attention.at(b, (co / cout_g) * cin_g + k, i, j);
    Tensor xb({1, Cin, H, W});
    for (std::size_t i = 0; i < xb.size(); ++i) xb[i] = x[b * xb.size() + i];
    const Tensor yb = naive_conv2d(xb, wb, p.bias, p.geom.stride, p.geom.padding, p.geom.groups);
    if (b == 0) y = Tensor({B, yb.dim(1), yb.dim(2), yb.dim(3)});
    for (std::size_t i = 0; i < yb.size(); ++i) y[b * yb.size() + i] = yb[i];
  }
  return y;
}

Tensor central_difference(Tensor& param, double h, const std::function<double()>& f) {
  Tensor grad(param.shape());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param[i];
    param[i] = saved + h;
    const double up = f();
    param[i] = saved - h;
    const double down = f();
    param[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double relative_error(const Tensor& analytic, const Tensor& numeric, double floor) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max(scale, std::abs(numeric[i]));
  }
  return diff / std::max(scale, floor);
}

std::size_t ep_block_params(std::size_t c) {
  const std::size_t norms = 2 * (2 * c);                  // two LayerNorms, weight + bias
  const std::size_t expand = 2 * (c * 2 * c + 2 * c);     // two 1x1 C -> 2C
  const std::size_t depthwise = 2 * c * 9 + 2 * c + 1;    // 3x3 per channel, bias, tau
  const std::size_t sca = c * c + c;
  const std::size_t project = 2 * (c * c + c);
  const std::size_t residual_scales = 2;
  return norms + expand + depthwise + sca + project + residual_scales;
}

std::size_t convs_params(std::size_t c) { return 2 * (c * c * 9 + c); }

std::size_t unfolded_params(std::size_t n, std::size_t c) {
  const std::size_t resm = 4 * ep_block_params(c) + convs_params(c) + 1;
  const std::size_t dmum = 2 * ep_block_params(2 * c);
  const std::size_t mum = ep_block_params(c) + convs_params(c);
  const std::size_t out_proj = c * c + c;
  return ep_block_params(c) + n * (resm + dmum + mum) + resm + out_proj + 1;
}

Tensor random_tensor(Shape shape, Xoshiro256& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace interir::oracle
