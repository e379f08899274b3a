#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "interir/tensor.hpp"

namespace interir {

/// 8-bit image held as [1,C,H,W] doubles in [0,1]; C is 3 (RGB) or 1 (gray).
struct Image {
  Tensor pixels;

  std::size_t channels() const { return pixels.dim(1); }
  std::size_t height() const { return pixels.dim(2); }
  std::size_t width() const { return pixels.dim(3); }
};

/// Decode binary P6 / P5 bytes with maxval 255. Comments in the header are
/// accepted; exactly one whitespace byte must follow maxval.
Image decode_pnm(std::span<const std::uint8_t> bytes);

/// Encode as P6 (3 channels) or P5 (1 channel), header "P6\n<w> <h>\n255\n".
/// Values are clamped to [0,1] and rounded half away from zero.
std::vector<std::uint8_t> encode_pnm(const Image& image);

Image load_ppm(const std::filesystem::path& path);
void save_ppm(const Image& image, const std::filesystem::path& path);

std::uint8_t quantize(double value) noexcept;

/// BT.601 studio-range luma of an RGB image, as [1,1,H,W] in [16/255, 235/255].
Tensor rgb_to_y(const Image& image);

}  // namespace interir
