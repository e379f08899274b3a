#include "interir/degradation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "interir/errors.hpp"
#include "interir/format.hpp"
#include "interir/rng.hpp"

namespace interir {

namespace {

constexpr std::uint64_t kRainStream = 0x7261696eULL;   // "rain"
constexpr std::uint64_t kNoiseStream = 0x6e6f6973ULL;  // "nois"

constexpr double kStreakMinLength = 8.0;
constexpr double kStreakMaxLength = 24.0;
constexpr double kStreakMinAngleDeg = 60.0;
constexpr double kStreakMaxAngleDeg = 120.0;
constexpr double kStreakMinIntensity = 0.15;
constexpr double kStreakMaxIntensity = 0.4;

void check_range(double value, double hi, const char* name) {
  if (!(value >= 0.0 && value <= hi)) {
    throw SpecError(std::string(name) + " level " + std::to_string(value) +
                    " outside [0, " + std::to_string(hi) + "]");
  }
}

void clamp_unit(Tensor& t) {
  for (auto& v : t.data()) v = std::clamp(v, 0.0, 1.0);
}

double distance_to_segment(double px, double py, double x0, double y0, double x1,
                           double y1) {
  const double dx = x1 - x0, dy = y1 - y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - x0) * dx + (py - y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double cx = x0 + t * dx - px, cy = y0 + t * dy - py;
  return std::sqrt(cx * cx + cy * cy);
}

double parse_number(const std::string& field, const char* name) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw SpecError(std::string("manifest: bad ") + name + " value '" + field + "'");
  }
  return v;
}

}  // namespace

void DegradationSpec::validate() const {
  check_range(haze_level, kMaxHazeLevel, "haze");
  check_range(rain_level, kMaxRainLevel, "rain");
  check_range(noise_level, kMaxNoiseLevel, "noise");
}

Image apply_noise(const Image& image, double sigma_8bit, std::uint64_t seed) {
  check_range(sigma_8bit, kMaxNoiseLevel, "noise");
  if (sigma_8bit == 0.0) return image;
  Image out = image;
  Xoshiro256 rng(seed);
  const double sigma = sigma_8bit / 255.0;
  for (auto& v : out.pixels.data()) v += sigma * rng.normal();
  clamp_unit(out.pixels);
  return out;
}

Image apply_rain(const Image& image, double level, std::uint64_t seed) {
  check_range(level, kMaxRainLevel, "rain");
  const auto streaks = static_cast<long>(std::lround(level));
  if (streaks == 0) return image;

  const std::size_t H = image.height(), W = image.width();
  Tensor layer({H, W});
  Xoshiro256 rng(seed);
  for (long s = 0; s < streaks; ++s) {
    const double cx = rng.uniform(0.0, static_cast<double>(W));
    const double cy = rng.uniform(0.0, static_cast<double>(H));
    const double length = rng.uniform(kStreakMinLength, kStreakMaxLength);
    const double angle =
        rng.uniform(kStreakMinAngleDeg, kStreakMaxAngleDeg) * std::numbers::pi / 180.0;
    const double intensity = rng.uniform(kStreakMinIntensity, kStreakMaxIntensity);
    const double hx = 0.5 * length * std::cos(angle), hy = 0.5 * length * std::sin(angle);
    const double x0 = cx - hx, y0 = cy - hy, x1 = cx + hx, y1 = cy + hy;

    // Coverage falls off linearly to zero one pixel away from the segment.
    const auto lo_x = static_cast<long>(std::floor(std::min(x0, x1) - 1.0));
    const auto hi_x = static_cast<long>(std::ceil(std::max(x0, x1) + 1.0));
    const auto lo_y = static_cast<long>(std::floor(std::min(y0, y1) - 1.0));
    const auto hi_y = static_cast<long>(std::ceil(std::max(y0, y1) + 1.0));
    for (long py = std::max(lo_y, 0L); py <= std::min(hi_y, static_cast<long>(H) - 1); ++py) {
      for (long px = std::max(lo_x, 0L); px <= std::min(hi_x, static_cast<long>(W) - 1); ++px) {
        const double d = distance_to_segment(static_cast<double>(px) + 0.5,
                                             static_cast<double>(py) + 0.5, x0, y0, x1, y1);
        if (d < 1.0) {
          layer.data()[static_cast<std::size_t>(py) * W + static_cast<std::size_t>(px)] +=
              intensity * (1.0 - d);
        }
      }
    }
  }

  Image out = image;
  auto px = out.pixels.data();
  auto ld = layer.data();
  const std::size_t plane = H * W;
  for (std::size_t c = 0; c < out.channels(); ++c) {
    for (std::size_t i = 0; i < plane; ++i) px[c * plane + i] += ld[i];
  }
  clamp_unit(out.pixels);
  return out;
}

Image apply_haze(const Image& image, double level, std::uint64_t /*seed*/) {
  check_range(level, kMaxHazeLevel, "haze");
  if (level == 0.0) return image;
  const double t = std::exp(-level / kMaxHazeLevel * kHazeDensity);
  Image out = image;
  for (auto& v : out.pixels.data()) v = v * t + kAtmosphericLight * (1.0 - t);
  return out;
}

Tensor apply_factored_degradation(const Tensor& image_chan, const Tensor& a,
                                  const Tensor& b, const Tensor& noise) {
  Tensor out = channel_matmul(channel_matmul(a, image_chan), b);
  require_same_shape(out, noise, "apply_factored_degradation noise");
  return out += noise;
}

Image make_test_case(const Image& clean, const DegradationSpec& spec) {
  spec.validate();
  Image out = clean;
  if (spec.haze_level > 0.0) out = apply_haze(out, spec.haze_level, spec.seed);
  if (spec.rain_level > 0.0) {
    out = apply_rain(out, spec.rain_level, derive_seed(spec.seed, kRainStream));
  }
  if (spec.noise_level > 0.0) {
    out = apply_noise(out, spec.noise_level, derive_seed(spec.seed, kNoiseStream));
  }
  return out;
}

std::string format_manifest_line(const ManifestEntry& e) {
  return e.clean_path + '\t' + e.degraded_path + '\t' + format_double(e.spec.haze_level) +
         '\t' + format_double(e.spec.rain_level) + '\t' +
         format_double(e.spec.noise_level) + '\t' + std::to_string(e.spec.seed);
}

ManifestEntry parse_manifest_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, '\t')) fields.push_back(field);
  if (fields.size() != 6) {
    throw SpecError("manifest line needs 6 tab-separated fields, got " +
                    std::to_string(fields.size()));
  }
  ManifestEntry e;
  e.clean_path = fields[0];
  e.degraded_path = fields[1];
  e.spec.haze_level = parse_number(fields[2], "haze");
  e.spec.rain_level = parse_number(fields[3], "rain");
  e.spec.noise_level = parse_number(fields[4], "noise");
  std::uint64_t seed = 0;
  auto res = std::from_chars(fields[5].data(), fields[5].data() + fields[5].size(), seed);
  if (res.ec != std::errc{} || res.ptr != fields[5].data() + fields[5].size()) {
    throw SpecError("manifest: bad seed '" + fields[5] + "'");
  }
  e.spec.seed = seed;
  return e;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    entries.push_back(parse_manifest_line(line));
  }
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  for (const auto& e : entries) out << format_manifest_line(e) << '\n';
}

}  // namespace interir
