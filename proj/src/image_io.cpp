#include "interir/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "interir/errors.hpp"

namespace interir {

namespace {

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }

  // Skips whitespace and '#' comments, then reads a decimal token.
  std::size_t read_uint(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 30)) {
        throw ParseError(start, std::string("PNM ") + field + " too large");
      }
      ++pos_;
    }
    if (pos_ == start) {
      throw ParseError(pos_, std::string("PNM header: expected ") + field);
    }
    return value;
  }

  void expect_single_space() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw ParseError(pos_, "PNM header: expected whitespace after maxval");
    }
    ++pos_;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

std::uint8_t quantize(double value) noexcept {
  const double clamped = std::clamp(value, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

Image decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5')) {
    throw ParseError(0, "not a binary PPM/PGM file (expected magic P6 or P5)");
  }
  const std::size_t channels = bytes[1] == '6' ? 3 : 1;
  HeaderReader header(bytes);
  const std::size_t width = header.read_uint("width");
  const std::size_t height = header.read_uint("height");
  const std::size_t maxval_pos = header.pos();
  const std::size_t maxval = header.read_uint("maxval");
  if (width == 0 || height == 0) {
    throw ParseError(maxval_pos, "PNM header: zero image extent");
  }
  if (maxval != 255) {
    throw UnsupportedFormatError("PNM maxval " + std::to_string(maxval) +
                                 " unsupported (only 255)");
  }
  header.expect_single_space();
  const std::size_t offset = header.pos();
  const std::size_t count = width * height * channels;
  if (bytes.size() - offset < count) {
    throw ParseError(bytes.size(), "PNM pixel data truncated: need " +
                                       std::to_string(count) + " bytes, have " +
                                       std::to_string(bytes.size() - offset));
  }
  Image image{Tensor({1, channels, height, width})};
  auto px = image.pixels.data();
  for (std::size_t h = 0; h < height; ++h) {
    for (std::size_t w = 0; w < width; ++w) {
      for (std::size_t c = 0; c < channels; ++c) {
        const std::uint8_t raw = bytes[offset + (h * width + w) * channels + c];
        px[(c * height + h) * width + w] = static_cast<double>(raw) / 255.0;
      }
    }
  }
  return image;
}

std::vector<std::uint8_t> encode_pnm(const Image& image) {
  const std::size_t channels = image.channels();
  if (channels != 1 && channels != 3) {
    throw DimensionError("channel", "PNM output needs 1 or 3 channels, got " +
                                        std::to_string(channels));
  }
  const std::size_t height = image.height(), width = image.width();
  const std::string header = std::string(channels == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(width) + " " + std::to_string(height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + channels * height * width);
  auto px = image.pixels.data();
  for (std::size_t h = 0; h < height; ++h) {
    for (std::size_t w = 0; w < width; ++w) {
      for (std::size_t c = 0; c < channels; ++c) {
        out.push_back(quantize(px[(c * height + h) * width + w]));
      }
    }
  }
  return out;
}

Image load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_pnm(bytes);
}

void save_ppm(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_pnm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

Tensor rgb_to_y(const Image& image) {
  if (image.pixels.rank() != 4 || image.channels() != 3) {
    throw DimensionError("channel", "rgb_to_y needs a 3-channel image, got " +
                                        shape_string(image.pixels.shape()));
  }
  const std::size_t H = image.height(), W = image.width(), plane = H * W;
  Tensor y({1, 1, H, W});
  auto px = image.pixels.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < plane; ++i) {
    const double r = px[i], g = px[plane + i], b = px[2 * plane + i];
    yd[i] = (65.481 * r + 128.553 * g + 24.966 * b + 16.0) / 255.0;
  }
  return y;
}

}  // namespace interir
