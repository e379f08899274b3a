#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "interir/commands.hpp"
#include "interir/errors.hpp"
#include "interir/metrics.hpp"
#include "interir/verify/oracles.hpp"
#include "interir/weights_io.hpp"

using namespace interir;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("interir_cmd_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  return Image{oracle::random_tensor({1, 3, h, w}, rng, 0.0, 1.0)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

RunConfig classical_config() {
  RunConfig cfg;
  cfg.solver.outer_iters = 2;
  cfg.solver.inner_iters = 2;
  cfg.solver.freeze_factors = true;
  return cfg;
}

}  // namespace

TEST_CASE("mode parsing and workers") {
  CHECK(parse_mode("classical") == RestoreMode::kClassical);
  CHECK(parse_mode("unfolded") == RestoreMode::kUnfolded);
  CHECK_THROWS_AS(parse_mode("neural"), SpecError);
  CHECK(parse_mask_variant("image") == MaskVariant::kImageGate);
  CHECK(parse_mask_variant("residual") == MaskVariant::kResidualGate);
  CHECK_THROWS_AS(parse_mask_variant("both"), SpecError);
  CHECK(worker_count() >= 1);
}

TEST_CASE("parallel_for") {
  std::vector<int> hits(50, 0);
  parallel_for(50, 4, [&](std::size_t i) { hits[i] += static_cast<int>(i); });
  for (std::size_t i = 0; i < 50; ++i) CHECK(hits[i] == static_cast<int>(i));
  std::atomic<int> calls{0};
  parallel_for(0, 4, [&](std::size_t) { ++calls; });
  CHECK(calls == 0);
  try {
    parallel_for(10, 3, [](std::size_t i) {
      if (i == 3 || i == 7) throw std::runtime_error("boom " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "boom 3");
  }
}

TEST_CASE("degrade") {
  TempDir tmp("degrade");
  std::ostringstream log;
  SUBCASE("empty input directory") {
    fs::create_directories(tmp.path / "clean");
    CHECK(cmd_degrade(tmp.path / "clean", tmp.path / "out", {}, 1, log) == 0);
    CHECK(read_manifest(tmp.path / "out" / "manifest.tsv").empty());
  }
  SUBCASE("zero levels copy bytes and the manifest is complete") {
    fs::create_directories(tmp.path / "clean");
    save_ppm(random_image(8, 9, 1), tmp.path / "clean" / "b.ppm");
    save_ppm(random_image(5, 5, 2), tmp.path / "clean" / "a.ppm");
    std::ofstream(tmp.path / "clean" / "notes.txt") << "ignored";
    CHECK(cmd_degrade(tmp.path / "clean", tmp.path / "out", {0, 0, 0, 3}, 2, log) == 0);
    for (const char* name : {"a.ppm", "b.ppm"}) {
      CHECK(slurp(tmp.path / "clean" / name) == slurp(tmp.path / "out" / name));
    }
    const auto m = read_manifest(tmp.path / "out" / "manifest.tsv");
    REQUIRE(m.size() == 2);
    CHECK(m[0].degraded_path == "a.ppm");
    CHECK(fs::path(m[0].clean_path).is_absolute());
    CHECK(m[0].spec.seed == derive_seed(3, 0));
    CHECK(m[1].spec.seed == derive_seed(3, 1));
  }
  SUBCASE("fixed seed is reproducible") {
    fs::create_directories(tmp.path / "clean");
    save_ppm(random_image(24, 24, 3), tmp.path / "clean" / "x.ppm");
    const DegradationSpec spec{40, 30, 10, 77};
    CHECK(cmd_degrade(tmp.path / "clean", tmp.path / "o1", spec, 1, log) == 0);
    CHECK(cmd_degrade(tmp.path / "clean", tmp.path / "o2", spec, 3, log) == 0);
    CHECK(slurp(tmp.path / "o1" / "x.ppm") == slurp(tmp.path / "o2" / "x.ppm"));
    CHECK(slurp(tmp.path / "o1" / "manifest.tsv") == slurp(tmp.path / "o2" / "manifest.tsv"));
  }
  SUBCASE("unreadable input continues and fails at the end") {
    fs::create_directories(tmp.path / "clean");
    std::ofstream(tmp.path / "clean" / "broken.ppm") << "P6\n4 4\n255\n";
    save_ppm(random_image(6, 6, 4), tmp.path / "clean" / "ok.ppm");
    CHECK(cmd_degrade(tmp.path / "clean", tmp.path / "out", {}, 1, log) == 1);
    CHECK(read_manifest(tmp.path / "out" / "manifest.tsv").size() == 1);
    CHECK(log.str().find("broken.ppm") != std::string::npos);
  }
  SUBCASE("out-of-range level") {
    CHECK_THROWS_AS(cmd_degrade(tmp.path, tmp.path / "out", {0, 0, 99, 1}, 1, log), SpecError);
  }
}

TEST_CASE("restore") {
  TempDir tmp("restore");
  std::ostringstream log;
  fs::create_directories(tmp.path / "clean");

  SUBCASE("classical leaves a flat image alone") {
    save_ppm(Image{Tensor({1, 3, 12, 12}, 128.0 / 255.0)}, tmp.path / "clean" / "flat.ppm");
    REQUIRE(cmd_degrade(tmp.path / "clean", tmp.path / "deg", {}, 1, log) == 0);
    CHECK(cmd_restore(tmp.path / "deg" / "manifest.tsv", tmp.path / "res", classical_config(),
                      log) == 0);
    CHECK(slurp(tmp.path / "res" / "flat.ppm") == slurp(tmp.path / "clean" / "flat.ppm"));
    CHECK(fs::exists(tmp.path / "res" / "flat.trace.csv"));
    const auto summary = lines(slurp(tmp.path / "res" / "summary.tsv"));
    REQUIRE(summary.size() == 2);
    CHECK(summary[1] == "flat\tok\t");
    const auto pairs = lines(slurp(tmp.path / "res" / "pairs.tsv"));
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].substr(pairs[0].find('\t') + 1) == "flat.ppm");
  }
  SUBCASE("classical mildly smooths a textured clean image") {
    const Image clean = random_image(16, 16, 5);
    save_ppm(clean, tmp.path / "clean" / "tex.ppm");
    REQUIRE(cmd_degrade(tmp.path / "clean", tmp.path / "deg", {}, 1, log) == 0);
    CHECK(cmd_restore(tmp.path / "deg" / "manifest.tsv", tmp.path / "res", classical_config(),
                      log) == 0);
    const Image out = load_ppm(tmp.path / "res" / "tex.ppm");
    CHECK(out.pixels.shape() == clean.pixels.shape());
    CHECK(psnr(out, load_ppm(tmp.path / "clean" / "tex.ppm")) >= 35.0);
  }
  SUBCASE("zero-weight unfolded model returns its input") {
    save_ppm(random_image(20, 20, 6), tmp.path / "clean" / "u.ppm");
    REQUIRE(cmd_degrade(tmp.path / "clean", tmp.path / "deg", {0, 0, 15, 2}, 1, log) == 0);
    save_weights(zero_model(2, 48), tmp.path / "zero.iirw");
    RunConfig cfg;
    cfg.mode = RestoreMode::kUnfolded;
    cfg.weights_path = tmp.path / "zero.iirw";
    CHECK(cmd_restore(tmp.path / "deg" / "manifest.tsv", tmp.path / "res", cfg, log) == 0);
    CHECK(slurp(tmp.path / "res" / "u.ppm") == slurp(tmp.path / "deg" / "u.ppm"));
    CHECK_FALSE(fs::exists(tmp.path / "res" / "u.trace.csv"));
  }
  SUBCASE("missing weights fall back to a seeded model") {
    save_ppm(random_image(16, 16, 7), tmp.path / "clean" / "s.ppm");
    REQUIRE(cmd_degrade(tmp.path / "clean", tmp.path / "deg", {}, 1, log) == 0);
    RunConfig cfg;
    cfg.mode = RestoreMode::kUnfolded;
    cfg.blocks = 1;
    CHECK(cmd_restore(tmp.path / "deg" / "manifest.tsv", tmp.path / "res", cfg, log) == 0);
    CHECK(log.str().find("untrained") != std::string::npos);
  }
  SUBCASE("a stall is flagged but not fatal") {
    save_ppm(random_image(8, 8, 8), tmp.path / "clean" / "st.ppm");
    REQUIRE(cmd_degrade(tmp.path / "clean", tmp.path / "deg", {}, 1, log) == 0);
    RunConfig cfg = classical_config();
    cfg.regularizer.alpha = 1e6;
    cfg.regularizer.epsilon = 1e12;
    CHECK(cmd_restore(tmp.path / "deg" / "manifest.tsv", tmp.path / "res", cfg, log) == 0);
    const auto summary = lines(slurp(tmp.path / "res" / "summary.tsv"));
    REQUIRE(summary.size() == 2);
    CHECK(summary[1].rfind("st\tstalled\t", 0) == 0);
    CHECK(slurp(tmp.path / "res" / "st.ppm") == slurp(tmp.path / "deg" / "st.ppm"));
  }
  SUBCASE("a missing input fails the run") {
    save_ppm(random_image(8, 8, 9), tmp.path / "clean" / "gone.ppm");
    save_ppm(random_image(8, 8, 10), tmp.path / "clean" / "kept.ppm");
    REQUIRE(cmd_degrade(tmp.path / "clean", tmp.path / "deg", {}, 1, log) == 0);
    fs::remove(tmp.path / "deg" / "gone.ppm");
    CHECK(cmd_restore(tmp.path / "deg" / "manifest.tsv", tmp.path / "res", classical_config(),
                      log) == 1);
    const auto summary = lines(slurp(tmp.path / "res" / "summary.tsv"));
    REQUIRE(summary.size() == 3);
    CHECK(summary[1].rfind("gone\tfailed\t", 0) == 0);
    CHECK(summary[2].rfind("kept\tok\t", 0) == 0);
  }
}

TEST_CASE("eval") {
  TempDir tmp("eval");
  std::ostringstream log;
  const Image a = random_image(16, 16, 11);
  const Image b = random_image(16, 16, 12);
  save_ppm(a, tmp.path / "a.ppm");
  save_ppm(b, tmp.path / "b.ppm");
  save_ppm(random_image(16, 12, 13), tmp.path / "narrow.ppm");

  SUBCASE("identical pair") {
    std::ofstream(tmp.path / "pairs.tsv") << (tmp.path / "a.ppm").string() << "\ta.ppm\n";
    std::ostringstream out;
    CHECK(cmd_eval(tmp.path / "pairs.tsv", out, log) == 0);
    const auto rows = lines(out.str());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "image,psnr_rgb,psnr_y,ssim_y,loss_spatial,loss_freq,loss_total");
    CHECK(rows[1] == "a,inf,inf,1,0,0,0");
    CHECK(rows[2] == "mean,inf,inf,1,0,0,0");
  }
  SUBCASE("mean row and error rows") {
    std::ofstream(tmp.path / "pairs.tsv") << "a.ppm\tb.ppm\n"
                                          << "b.ppm\ta.ppm\n"
                                          << "a.ppm\tnarrow.ppm\n";
    std::ostringstream out;
    CHECK(cmd_eval(tmp.path / "pairs.tsv", out, log) == 1);
    const auto rows = lines(out.str());
    REQUIRE(rows.size() == 5);
    CHECK(rows[3] == "narrow,ERROR,ERROR,ERROR,ERROR,ERROR,ERROR");
    const Image qa = load_ppm(tmp.path / "a.ppm"), qb = load_ppm(tmp.path / "b.ppm");
    const EvalReport r1 = evaluate(qb, qa), r2 = evaluate(qa, qb);
    CHECK(rows[4].rfind("mean,", 0) == 0);
    const double mean_psnr = std::stod(rows[4].substr(5, rows[4].find(',', 5) - 5));
    CHECK(mean_psnr == doctest::Approx((r1.psnr_rgb + r2.psnr_rgb) / 2.0).epsilon(1e-15));
  }
  SUBCASE("missing pairs file") {
    std::ostringstream out;
    CHECK_THROWS(cmd_eval(tmp.path / "none.tsv", out, log));
  }
}

TEST_CASE("column means") {
  const double inf = std::numeric_limits<double>::infinity();
  const auto m = column_means({{1.0, inf, inf}, {3.0, 2.0, inf}});
  CHECK(m[0] == 2.0);
  CHECK(m[1] == 2.0);
  CHECK(m[2] == inf);
  CHECK(column_means({}).empty());
  CHECK(std::isnan(column_means({{std::nan("")}})[0]));
}
