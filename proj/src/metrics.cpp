#include "interir/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "interir/errors.hpp"
#include "interir/format.hpp"

namespace interir {

namespace {

void require_rgb(const Image& img, const char* what) {
  if (img.channels() != 3) {
    throw DimensionError("channel", std::string(what) + " needs an RGB image, got " +
                                        std::to_string(img.channels()) + " channels");
  }
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "psnr");
  double se = 0.0;
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    const double d = ad[i] - bd[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(ad.size());
  return 20.0 * std::log10(1.0 / std::sqrt(mse));
}

double psnr(const Image& a, const Image& b, ChannelMode mode) {
  if (mode == ChannelMode::kY) return psnr(rgb_to_y(a), rgb_to_y(b));
  return psnr(a.pixels, b.pixels);
}

Tensor ssim_window() {
  const std::size_t n = kSsimWindow;
  const double centre = static_cast<double>(n / 2);
  std::vector<double> g(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - centre;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += g[i];
  }
  Tensor w({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w[i * n + j] = g[i] * g[j] / (total * total);
  return w;
}

double ssim(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "ssim");
  if (a.rank() != 4) throw DimensionError("rank", "ssim expects [1,C,H,W]");
  const std::size_t n = kSsimWindow;
  const std::size_t C = a.dim(1), H = a.dim(2), W = a.dim(3);
  if (H < n) throw DimensionError("height", "ssim: height " + std::to_string(H) + " < window 11");
  if (W < n) throw DimensionError("width", "ssim: width " + std::to_string(W) + " < window 11");

  const Tensor w = ssim_window();
  const double c1 = kSsimK1 * kSsimK1, c2 = kSsimK2 * kSsimK2;
  double total = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y + n <= H; ++y) {
      for (std::size_t x = 0; x + n <= W; ++x) {
        double mu_a = 0.0, mu_b = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            mu_a += w[i * n + j] * a.at(0, c, y + i, x + j);
            mu_b += w[i * n + j] * b.at(0, c, y + i, x + j);
          }
        double var_a = 0.0, var_b = 0.0, cov = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double da = a.at(0, c, y + i, x + j) - mu_a;
            const double db = b.at(0, c, y + i, x + j) - mu_b;
            var_a += w[i * n + j] * (da * da);
            var_b += w[i * n + j] * (db * db);
            cov += w[i * n + j] * (da * db);
          }
        total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                 ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      }
    }
  }
  return total / static_cast<double>(C * (H - n + 1) * (W - n + 1));
}

double ssim_y(const Image& a, const Image& b) { return ssim(rgb_to_y(a), rgb_to_y(b)); }

CompositeLoss composite_loss(const Tensor& pred, const Tensor& target, double lambda) {
  require_same_shape(pred, target, "composite_loss");
  CompositeLoss out;
  auto p = pred.data(), t = target.data();
  for (std::size_t i = 0; i < p.size(); ++i) out.spatial += std::abs(p[i] - t[i]);
  out.spatial /= static_cast<double>(p.size());

  const Spectrum sp = dft2d(pred), st = dft2d(target);
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.freq += std::hypot(sp.real[i] - st.real[i], sp.imag[i] - st.imag[i]);
  }
  out.freq /= static_cast<double>(p.size());
  out.total = out.spatial + lambda * out.freq;
  return out;
}

EvalReport evaluate(const Image& restored, const Image& clean, double lambda) {
  require_rgb(restored, "evaluate");
  require_rgb(clean, "evaluate");
  EvalReport r;
  r.psnr_rgb = psnr(restored, clean, ChannelMode::kRgb);
  r.psnr_y = psnr(restored, clean, ChannelMode::kY);
  r.ssim_y = ssim_y(restored, clean);
  r.loss = composite_loss(restored.pixels, clean.pixels, lambda);
  return r;
}

std::string format_eval_row(const std::string& name, const EvalReport& r) {
  return name + ',' + format_double(r.psnr_rgb) + ',' + format_double(r.psnr_y) + ',' +
         format_double(r.ssim_y) + ',' + format_double(r.loss.spatial) + ',' +
         format_double(r.loss.freq) + ',' + format_double(r.loss.total);
}

std::string describe(const EvalReport& r) {
  std::ostringstream os;
  os << "PSNR (RGB): " << format_double(r.psnr_rgb) << " dB\n"
     << "PSNR (Y):   " << format_double(r.psnr_y) << " dB\n"
     << "SSIM (Y):   " << format_double(r.ssim_y) << '\n'
     << "Loss:       " << format_double(r.loss.total) << " (spatial "
     << format_double(r.loss.spatial) << ", freq " << format_double(r.loss.freq) << ")\n";
  return os.str();
}

}  // namespace interir
