#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "interir/image_io.hpp"
#include "interir/tensor.hpp"

namespace interir {

inline constexpr double kMaxHazeLevel = 150.0;
inline constexpr double kMaxRainLevel = 300.0;
inline constexpr double kMaxNoiseLevel = 50.0;

/// Haze transmission at level 150 is exp(-kHazeDensity).
inline constexpr double kHazeDensity = 2.0;
inline constexpr double kAtmosphericLight = 0.9;

/// Per-image degradation recipe. A level of 0 disables that stage.
struct DegradationSpec {
  double haze_level = 0.0;   // [0, 150]
  double rain_level = 0.0;   // [0, 300], number of streaks after rounding
  double noise_level = 0.0;  // [0, 50], Gaussian sigma in 8-bit units
  std::uint64_t seed = 0;

  /// Throws SpecError for out-of-range levels.
  void validate() const;
};

Image apply_noise(const Image& image, double sigma_8bit, std::uint64_t seed);
Image apply_rain(const Image& image, double level, std::uint64_t seed);
/// Uniform-transmission scattering model; `seed` is accepted for interface
/// symmetry and currently unused.
Image apply_haze(const Image& image, double level, std::uint64_t seed);

/// Per-channel A * I * B + N for I [C,H,W], A [C,H,H], B [C,W,W].
Tensor apply_factored_degradation(const Tensor& image_chan, const Tensor& a,
                                  const Tensor& b, const Tensor& noise);

/// Haze, then rain, then noise. The rain and noise stages draw from streams
/// derived from spec.seed.
Image make_test_case(const Image& clean, const DegradationSpec& spec);

/// One line of a degradation manifest.
struct ManifestEntry {
  std::string clean_path;
  std::string degraded_path;
  DegradationSpec spec;
};

/// Tab-separated: clean_path, degraded_path, haze, rain, noise, seed.
std::string format_manifest_line(const ManifestEntry& entry);
ManifestEntry parse_manifest_line(const std::string& line);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path);

}  // namespace interir
