#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "interir/degradation.hpp"
#include "interir/errors.hpp"
#include "interir/verify/oracles.hpp"

using namespace interir;

namespace {

Image random_image(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  return Image{oracle::random_tensor({1, c, h, w}, rng, 0.0, 1.0)};
}

double mean(const Tensor& t) { return sum(t) / static_cast<double>(t.size()); }

}  // namespace

TEST_CASE("level validation") {
  CHECK_NOTHROW((DegradationSpec{150, 300, 50, 1}.validate()));
  CHECK_THROWS_AS((DegradationSpec{150.5, 0, 0, 1}.validate()), SpecError);
  CHECK_THROWS_AS((DegradationSpec{0, -1, 0, 1}.validate()), SpecError);
  CHECK_THROWS_AS((DegradationSpec{0, 0, 51, 1}.validate()), SpecError);
  CHECK_THROWS_AS((DegradationSpec{0, 0, std::nan(""), 1}.validate()), SpecError);
  const Image img = random_image(3, 8, 8, 1);
  CHECK_THROWS_AS(apply_noise(img, 60, 1), SpecError);
  CHECK_THROWS_AS(apply_rain(img, 301, 1), SpecError);
  CHECK_THROWS_AS(apply_haze(img, -1, 1), SpecError);
}

TEST_CASE("zero levels are exact identities") {
  const Image img = random_image(3, 16, 12, 2);
  CHECK(bitwise_equal(apply_noise(img, 0, 5).pixels, img.pixels));
  CHECK(bitwise_equal(apply_rain(img, 0, 5).pixels, img.pixels));
  CHECK(bitwise_equal(apply_haze(img, 0, 5).pixels, img.pixels));
  CHECK(bitwise_equal(make_test_case(img, {0, 0, 0, 9}).pixels, img.pixels));
}

TEST_CASE("noise statistics") {
  const Image img{Tensor({1, 1, 256, 256}, 0.5)};
  const Image out = apply_noise(img, 25, 42);
  const Tensor diff = out.pixels - img.pixels;
  const double m = mean(diff);
  double var = 0.0;
  for (double v : diff.data()) var += (v - m) * (v - m);
  const double sd = std::sqrt(var / static_cast<double>(diff.size()));
  // Clamping at 0 and 1 sits more than 6 sigma away from 0.5.
  CHECK(std::abs(sd - 25.0 / 255.0) <= 0.03 * 25.0 / 255.0);
  CHECK(bitwise_equal(apply_noise(img, 25, 42).pixels, out.pixels));
  CHECK_FALSE(bitwise_equal(apply_noise(img, 25, 43).pixels, out.pixels));
}

TEST_CASE("rain adds bright streaks deterministically") {
  const Image img = random_image(3, 48, 48, 3);
  const Image out = apply_rain(img, 300, 7);
  CHECK(mean(out.pixels) >= mean(img.pixels));
  CHECK(bitwise_equal(apply_rain(img, 300, 7).pixels, out.pixels));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    CHECK(out.pixels[i] >= img.pixels[i]);
    CHECK(out.pixels[i] <= 1.0);
  }
}

TEST_CASE("haze closed form") {
  const Image black{Tensor({1, 3, 4, 4})};
  const Image hazed = apply_haze(black, 150, 0);
  const double expected = 0.9 * (1.0 - std::exp(-2.0));
  for (double v : hazed.pixels.data()) CHECK(std::abs(v - expected) <= 1e-15);
  CHECK(expected == doctest::Approx(0.7782).epsilon(1e-4));
  for (double level : {1.0, 75.0, 150.0}) {
    const Image white = apply_haze(Image{Tensor({1, 3, 2, 2}, 1.0)}, level, 0);
    CHECK(max_abs(white.pixels) <= 1.0);
  }
}

TEST_CASE("factored degradation") {
  Xoshiro256 rng(11);
  const Tensor img = oracle::random_tensor({2, 3, 4}, rng);
  const Tensor noise = oracle::random_tensor({2, 3, 4}, rng);
  const Tensor ia = Tensor::identity(2, 3), ib = Tensor::identity(2, 4);
  CHECK(bitwise_equal(apply_factored_degradation(img, ia, ib, Tensor({2, 3, 4})), img));
  CHECK(max_abs_diff(apply_factored_degradation(img, ia, ib, noise), img + noise) == 0.0);
  for (std::size_t n = 2; n <= 6; ++n) {
    const Tensor a = oracle::random_tensor({1, n, n}, rng);
    const Tensor b = oracle::random_tensor({1, n, n}, rng);
    const Tensor i = oracle::random_tensor({1, n, n}, rng);
    const Tensor y = apply_factored_degradation(i, a, b, Tensor({1, n, n}));
    CHECK(max_abs_diff(y, oracle::kronecker_apply(a, i, b)) <= 1e-12);
  }
  CHECK_THROWS_AS(apply_factored_degradation(img, Tensor::identity(2, 4), ib, noise),
                  DimensionError);
}

TEST_CASE("composition order and skips") {
  const Image img = random_image(3, 32, 32, 4);
  CHECK(bitwise_equal(make_test_case(img, {150, 0, 0, 3}).pixels,
                      apply_haze(img, 150, 3).pixels));
  const DegradationSpec full{150, 300, 50, 1234};
  CHECK(bitwise_equal(make_test_case(img, full).pixels, make_test_case(img, full).pixels));
}

TEST_CASE("manifest round trip") {
  const ManifestEntry e{"/data/clean/a.ppm", "a.ppm", {12.5, 300, 0.1, 18446744073709551615ULL}};
  const std::string line = format_manifest_line(e);
  CHECK(std::count(line.begin(), line.end(), '\t') == 5);
  const ManifestEntry back = parse_manifest_line(line);
  CHECK(back.clean_path == e.clean_path);
  CHECK(back.degraded_path == e.degraded_path);
  CHECK(back.spec.haze_level == e.spec.haze_level);
  CHECK(back.spec.rain_level == e.spec.rain_level);
  CHECK(back.spec.noise_level == e.spec.noise_level);
  CHECK(back.spec.seed == e.spec.seed);
  CHECK_THROWS(parse_manifest_line("a\tb\t1\t2"));

  const auto dir = std::filesystem::temp_directory_path() / "interir_manifest_test";
  std::filesystem::create_directories(dir);
  write_manifest({e, e}, dir / "m.tsv");
  CHECK(read_manifest(dir / "m.tsv").size() == 2);
  write_manifest({}, dir / "empty.tsv");
  CHECK(read_manifest(dir / "empty.tsv").empty());
  std::filesystem::remove_all(dir);
}
