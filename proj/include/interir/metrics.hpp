#pragma once

#include <string>

#include "interir/image_io.hpp"
#include "interir/tensor.hpp"

namespace interir {

enum class ChannelMode { kRgb, kY };

inline constexpr double kDefaultFreqWeight = 0.1;
inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// 20 log10(1 / sqrt(MSE)) for data on [0,1]; +infinity for identical inputs.
double psnr(const Tensor& a, const Tensor& b);
double psnr(const Image& a, const Image& b, ChannelMode mode = ChannelMode::kRgb);

/// Mean local SSIM over every valid 11x11 Gaussian window (sigma 1.5,
/// K1 0.01, K2 0.03, L 1), averaged over channels. Inputs are [1,C,H,W].
/// Throws DimensionError if either side is shorter than the window.
double ssim(const Tensor& a, const Tensor& b);
double ssim_y(const Image& a, const Image& b);

/// Normalized 11x11 Gaussian weights, [11, 11].
Tensor ssim_window();

struct CompositeLoss {
  double total = 0.0;
  double spatial = 0.0;
  double freq = 0.0;
};

/// spatial = mean |p - t|; freq = mean |DFT(p) - DFT(t)| (complex modulus);
/// total = spatial + lambda * freq.
CompositeLoss composite_loss(const Tensor& pred, const Tensor& target,
                             double lambda = kDefaultFreqWeight);

struct EvalReport {
  double psnr_rgb = 0.0;
  double psnr_y = 0.0;
  double ssim_y = 0.0;
  CompositeLoss loss;
};

/// Requires RGB images of equal shape.
EvalReport evaluate(const Image& restored, const Image& clean,
                    double lambda = kDefaultFreqWeight);

inline constexpr const char* kEvalCsvHeader =
    "image,psnr_rgb,psnr_y,ssim_y,loss_spatial,loss_freq,loss_total";

std::string format_eval_row(const std::string& name, const EvalReport& r);
/// Multi-line human-readable summary.
std::string describe(const EvalReport& r);

}  // namespace interir
