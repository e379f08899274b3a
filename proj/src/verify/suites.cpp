#include "interir/verify/suites.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "interir/commands.hpp"
#include "interir/degradation.hpp"
#include "interir/errors.hpp"
#include "interir/explainable_conv.hpp"
#include "interir/image_io.hpp"
#include "interir/isn_solver.hpp"
#include "interir/metrics.hpp"
#include "interir/operators.hpp"
#include "interir/unfolded_net.hpp"
#include "interir/verify/oracles.hpp"
#include "interir/weights_io.hpp"

#ifndef INTERIR_GOLDEN_DIR
#define INTERIR_GOLDEN_DIR "tests/golden"
#endif

namespace interir::verify {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void expect(bool condition, const std::string& message) {
  if (!condition) throw Failure(message);
}

std::string sci(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 2);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t pick(Xoshiro256& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("interir-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Shared fixtures --------------------------------------------------------

Image striped_image(std::size_t size) {
  Image img{Tensor({1, 3, size, size})};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t h = 0; h < size; ++h)
      for (std::size_t w = 0; w < size; ++w) {
        double v = h < size / 2 ? 0.3 : 0.7;
        if (w >= size / 4 && w < 3 * size / 4) v += 0.15;
        img.pixels.at(0, c, h, w) = v - 0.05 * static_cast<double>(c);
      }
  return img;
}

Image quantized(Image img) {
  for (auto& v : img.pixels.data()) v = static_cast<double>(quantize(v)) / 255.0;
  return img;
}

// Accepted steps must not raise |F|^2. Returns the number of accepted steps.
std::size_t check_descent(const SolverTrace& trace, const std::string& run) {
  std::size_t accepted = 0;
  for (const auto& s : trace.steps) {
    if (s.stalled) continue;
    ++accepted;
    expect(s.f_norm_sq_after <= s.f_norm_sq_before,
           run + ": step (" + std::to_string(s.outer) + "," + std::to_string(s.inner) +
               ") raised |F|^2 from " + sci(s.f_norm_sq_before) + " to " +
               sci(s.f_norm_sq_after));
  }
  return accepted;
}

ExplainableConvParams random_xconv(Xoshiro256& rng, std::size_t cin, std::size_t cout,
                                   std::size_t kh, std::size_t kw, int groups, int padding,
                                   int stride) {
  ExplainableConvParams p;
  p.weight = oracle::random_tensor({cout, cin / static_cast<std::size_t>(groups), kh, kw}, rng);
  p.bias = oracle::random_tensor({cout}, rng);
  p.geom = {stride, padding, groups};
  return p;
}

// Suites -----------------------------------------------------------------

std::string suite_conv_oracle() {
  const auto start = Clock::now();
  Xoshiro256 rng(101);
  double worst = 0.0;
  for (int draw = 0; draw < 50; ++draw) {
    const int groups = static_cast<int>(pick(rng, 1, 3));
    const auto g = static_cast<std::size_t>(groups);
    const std::size_t cin = g * pick(rng, 1, 3), cout = g * pick(rng, 1, 3);
    const std::array<std::size_t, 3> odd = {1, 3, 5};
    const std::size_t kh = odd[pick(rng, 0, 2)], kw = odd[pick(rng, 0, 2)];
    const int stride = static_cast<int>(pick(rng, 1, 2)), padding = static_cast<int>(pick(rng, 0, 2));
    const std::size_t h = kh + pick(rng, 0, 5), w = kw + pick(rng, 0, 5);
    const std::size_t batch = pick(rng, 1, 2);
    const Tensor x = oracle::random_tensor({batch, cin, h, w}, rng);
    Tensor k = oracle::random_tensor({cout, cin / g, kh, kw}, rng);
    if (draw % 4 == 0) {
      for (std::size_t i = 0; i < k.size(); i += 2) k[i] = 0.0;
    }
    const Tensor bias = draw % 2 == 0 ? oracle::random_tensor({cout}, rng) : Tensor();
    const Tensor got = conv2d(x, k, bias, {stride, padding, groups});
    const Tensor want = oracle::naive_conv2d(x, k, bias, stride, padding, groups);
    expect(got.shape() == want.shape(), "draw " + std::to_string(draw) + ": shape " +
                                            shape_string(got.shape()) + " vs " +
                                            shape_string(want.shape()));
    worst = std::max(worst, max_abs_diff(got, want));
    expect(worst <= 1e-12, "draw " + std::to_string(draw) + ": max abs error " + sci(worst));
  }
  const double elapsed = seconds_since(start);
  expect(elapsed < 10.0, "runtime " + fixed(elapsed, 2) + " s exceeds 10 s");
  return "50 draws, max abs error " + sci(worst) + ", " + fixed(elapsed, 2) + " s";
}

std::string suite_dft_oracle() {
  Xoshiro256 rng(202);
  double worst = 0.0;
  for (const Shape& shape : {Shape{8, 8}, Shape{7, 5}, Shape{2, 3, 7, 5}}) {
    const Tensor x = oracle::random_tensor(shape, rng);
    const Spectrum got = dft2d(x);
    Tensor re, im;
    oracle::naive_dft(x, re, im);
    worst = std::max({worst, max_abs_diff(got.real, re), max_abs_diff(got.imag, im)});
  }
  expect(worst <= 1e-9, "max abs error " + sci(worst));
  return "8x8, 7x5 and batched 7x5, max abs error " + sci(worst);
}

std::string suite_kronecker() {
  Xoshiro256 rng(303);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t c = pick(rng, 1, 3), h = pick(rng, 1, 6), w = pick(rng, 1, 6);
    const Tensor a = oracle::random_tensor({c, h, h}, rng);
    const Tensor b = oracle::random_tensor({c, w, w}, rng);
    const Tensor img = oracle::random_tensor({c, h, w}, rng);
    const Tensor got = channel_matmul(channel_matmul(a, img), b);
    worst = std::max(worst, max_abs_diff(got, oracle::kronecker_apply(a, img, b)));
  }
  expect(worst <= 1e-12, "max abs error " + sci(worst));
  return "100 instances, max abs error " + sci(worst);
}

std::string suite_adjoint() {
  Xoshiro256 rng(404);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t c = pick(rng, 1, 3), h = pick(rng, 1, 7), w = pick(rng, 1, 7);
    const Tensor x = oracle::random_tensor({c, h, w}, rng);
    const Tensor y = oracle::random_tensor({2 * c, h, w}, rng);
    const Tensor vx = v_grad(x);
    const Tensor vty = v_adjoint(y);
    const double lhs = dot(vx, y), rhs = dot(x, vty);
    const double scale = std::max(l2_norm(vx) * l2_norm(y), l2_norm(x) * l2_norm(vty));
    const double err = scale > 0.0 ? std::abs(lhs - rhs) / scale : std::abs(lhs - rhs);
    worst = std::max(worst, err);
  }
  expect(worst <= 1e-12, "relative error " + sci(worst));
  return "100 instances, max relative error " + sci(worst);
}

std::string suite_prox() {
  Xoshiro256 rng(505);
  constexpr double kGrid = 1e-4;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-3.0, 3.0), t = rng.uniform(0.01, 1.0);
    const double err = std::abs(soft_threshold(x, t) - oracle::prox_grid_search(x, t, kGrid));
    worst = std::max(worst, err);
    expect(err <= kGrid, "x=" + sci(x) + " t=" + sci(t) + ": error " + sci(err));
  }
  return "1000 scalars, max deviation from grid argmin " + sci(worst);
}

std::string suite_transcription() {
  Xoshiro256 rng(606);
  double worst_f = 0.0, worst_h = 0.0;
  for (int i = 0; i < 100; ++i) {
    SolverState s;
    s.image = oracle::random_tensor({1, 4, 4}, rng, 0.0, 1.0);
    s.degraded = oracle::random_tensor({1, 4, 4}, rng, 0.0, 1.0);
    s.a = oracle::random_tensor({1, 4, 4}, rng);
    s.b = oracle::random_tensor({1, 4, 4}, rng);
    s.lambda = oracle::random_tensor({2, 4, 4}, rng);
    s.config.alpha = rng.uniform(0.05, 0.5);
    s.config.sigma = rng.uniform(0.5, 2.0);
    s.config.epsilon = rng.uniform(0.5, 2.0);
    const Tensor f = compute_F(s);
    const Tensor h = compute_H(s, f);
    const auto dense = oracle::dense_f_h(s.image, s.degraded, s.a, s.b, s.lambda, s.config);
    worst_f = std::max(worst_f, max_abs_diff(f, dense.f));
    worst_h = std::max(worst_h, max_abs_diff(h, dense.h));
  }
  expect(worst_f <= 1e-12, "F max abs error " + sci(worst_f));
  expect(worst_h <= 1e-12, "H max abs error " + sci(worst_h));
  return "100 states, F error " + sci(worst_f) + ", H error " + sci(worst_h);
}

struct ClassicalRun {
  std::string name;
  Image degraded;
  RegularizerConfig config;
  SolverOptions options;
};

std::string suite_descent() {
  std::vector<ClassicalRun> runs;
  const Image clean16 = striped_image(16), clean12 = striped_image(12);
  auto noisy = [](const Image& img, double sigma, std::uint64_t seed) {
    return apply_noise(img, sigma, seed);
  };
  SolverOptions frozen;
  frozen.freeze_factors = true;
  frozen.outer_iters = 30;
  runs.push_back({"smoke", noisy(clean16, 25, 42), {}, frozen});
  SolverOptions free_opts;
  free_opts.outer_iters = 10;
  runs.push_back({"free factors", noisy(clean12, 15, 3), {}, free_opts});
  RegularizerConfig strong;
  strong.alpha = 0.4;
  runs.push_back({"alpha 0.4", noisy(clean12, 40, 4), strong, frozen});
  RegularizerConfig split;
  split.sigma = 2.0;
  split.epsilon = 0.5;
  runs.push_back({"sigma 2, epsilon 0.5", noisy(clean12, 20, 5), split, free_opts});
  SolverOptions big_eta = frozen;
  big_eta.eta = 1.0;
  runs.push_back({"eta 1.0", noisy(clean12, 30, 6), {}, big_eta});

  std::size_t accepted = 0, stalled = 0;
  for (const auto& run : runs) {
    const Tensor chan = run.degraded.pixels.reshaped(
        {run.degraded.channels(), run.degraded.height(), run.degraded.width()});
    const SolveResult r = solve(chan, run.config, run.options);
    accepted += check_descent(r.trace, run.name);
    for (const auto& s : r.trace.steps) stalled += s.stalled ? 1 : 0;
  }
  return std::to_string(runs.size()) + " runs, " + std::to_string(accepted) +
         " accepted steps, none increased |F|^2 (" + std::to_string(stalled) + " stalled)";
}

std::string suite_denoise_smoke() {
  const auto start = Clock::now();
  const Image clean = striped_image(16);
  const Image noisy = apply_noise(clean, 25.0, 42);
  SolverOptions opts;
  opts.outer_iters = 30;
  opts.freeze_factors = true;
  const SolveResult r = solve(noisy.pixels.reshaped({3, 16, 16}), RegularizerConfig{}, opts);
  check_descent(r.trace, "smoke");
  Image out{r.image.reshaped({1, 3, 16, 16})};
  for (auto& v : out.pixels.data()) v = std::clamp(v, 0.0, 1.0);
  const double in_psnr = psnr(noisy, clean), out_psnr = psnr(out, clean);
  const double elapsed = seconds_since(start);
  expect(out_psnr > in_psnr, "output PSNR " + fixed(out_psnr, 3) + " dB not above input " +
                                 fixed(in_psnr, 3) + " dB");
  expect(elapsed < 30.0, "runtime " + fixed(elapsed, 2) + " s exceeds 30 s");
  return "PSNR " + fixed(in_psnr, 3) + " -> " + fixed(out_psnr, 3) + " dB (+" +
         fixed(out_psnr - in_psnr, 3) + " dB), " + fixed(elapsed, 2) + " s";
}

std::string suite_uniform_attention() {
  Xoshiro256 rng(707);
  double worst = 0.0;
  for (int i = 0; i < 12; ++i) {
    const int groups = static_cast<int>(pick(rng, 1, 2));
    const auto g = static_cast<std::size_t>(groups);
    const std::array<std::size_t, 3> odd = {1, 3, 5};
    const std::size_t kh = odd[pick(rng, 0, 2)], kw = odd[pick(rng, 0, 2)];
    auto p = random_xconv(rng, 2 * g, 2 * g, kh, kw, groups, static_cast<int>(kh / 2), 1);
    p.tau = 0.0;
    Tensor x;
    switch (i % 3) {
      case 0: x = oracle::random_tensor({2, 2 * g, 7, 6}, rng, 0.1, 1.0); break;
      case 1: x = oracle::random_tensor({2, 2 * g, 7, 6}, rng, -1.0, -0.1); break;
      default: x = Tensor({2, 2 * g, 7, 6}, rng.uniform(-1.0, 1.0)); break;
    }
    const Tensor got = explainable_conv_forward(x, p).y;
    Tensor want = oracle::naive_conv2d(x, p.weight, Tensor(), 1, p.geom.padding, groups);
    want *= 1.0 / static_cast<double>(kh * kw);
    const std::size_t plane = want.dim(2) * want.dim(3);
    for (std::size_t b = 0; b < want.dim(0); ++b)
      for (std::size_t c = 0; c < want.dim(1); ++c)
        for (std::size_t k = 0; k < plane; ++k) want[(b * want.dim(1) + c) * plane + k] += p.bias[c];
    worst = std::max(worst, max_abs_diff(got, want));
  }
  expect(worst <= 1e-12, "max abs error " + sci(worst));
  return "12 constant-sign inputs, max abs error " + sci(worst);
}

std::string suite_gradient_check() {
  const auto start = Clock::now();
  Xoshiro256 rng(808);
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int groups = static_cast<int>(pick(rng, 1, 2));
    const std::size_t cout = 2 * pick(rng, 1, 2);
    auto p = random_xconv(rng, 2, cout, 3, 3, groups, static_cast<int>(pick(rng, 0, 1)),
                          static_cast<int>(pick(rng, 1, 2)));
    p.tau = rng.uniform(-0.5, 0.5);
    // Keep every input at least 0.05 from tau so +-h never flips the mask.
    Tensor x({1, 2, 5, 5});
    for (auto& v : x.data()) {
      const double offset = rng.uniform(0.05, 1.0);
      v = rng.uniform() < 0.5 ? p.tau - offset : p.tau + offset;
    }
    const auto fwd = explainable_conv_forward(x, p);
    const Tensor g = oracle::random_tensor(fwd.y.shape(), rng);
    const auto grads = explainable_conv_backward(g, fwd.cache, p);
    expect(grads.tau == 0.0, "tau gradient is not zero");

    auto loss = [&] { return dot(explainable_conv_forward(x, p).y, g); };
    const Tensor nx = oracle::central_difference(x, kStep, loss);
    const Tensor nw = oracle::central_difference(p.weight, kStep, loss);
    const Tensor nb = oracle::central_difference(p.bias, kStep, loss);
    const double ex = oracle::relative_error(grads.x, nx);
    const double ew = oracle::relative_error(grads.weight, nw);
    const double eb = oracle::relative_error(grads.bias, nb);
    worst = std::max({worst, ex, ew, eb});
    expect(worst <= 1e-4, "instance " + std::to_string(i) + ": relative errors x " + sci(ex) +
                              ", W " + sci(ew) + ", bias " + sci(eb));
  }
  const double elapsed = seconds_since(start);
  expect(elapsed < 60.0, "runtime " + fixed(elapsed, 2) + " s exceeds 60 s");
  return "20 instances, max relative error " + sci(worst) + ", " + fixed(elapsed, 2) + " s";
}

std::string suite_batch_independence() {
  Xoshiro256 rng(909);
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    auto p = random_xconv(rng, 4, 4, 3, 3, 2, 1, 1);
    p.tau = rng.uniform(-0.2, 0.2);
    Tensor x = oracle::random_tensor({3, 4, 7, 7}, rng);
    const Tensor batched = explainable_conv_forward(x, p).y;
    const std::size_t per_in = x.size() / 3, per_out = batched.size() / 3;
    for (std::size_t b = 0; b < 3; ++b) {
      Tensor xb({1, 4, 7, 7});
      std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(b * per_in), per_in, xb.data().begin());
      const Tensor yb = explainable_conv_forward(xb, p).y;
      for (std::size_t k = 0; k < per_out; ++k) {
        worst = std::max(worst, std::abs(yb[k] - batched[b * per_out + k]));
      }
    }
    // Perturbing sample 1 must leave samples 0 and 2 untouched.
    for (std::size_t k = 0; k < per_in; ++k) x[per_in + k] = rng.uniform(-1.0, 1.0);
    const Tensor changed = explainable_conv_forward(x, p).y;
    for (std::size_t k = 0; k < per_out; ++k) {
      expect(changed[k] == batched[k] && changed[2 * per_out + k] == batched[2 * per_out + k],
             "changing sample 1 altered another sample's output");
    }
  }
  expect(worst <= 1e-12, "max abs error " + sci(worst));
  return "5 batches of 3, max abs error " + sci(worst) + ", per-sample locality held";
}

// Golden -------------------------------------------------------------------

Image golden_input() {
  Xoshiro256 rng(kGoldenInputSeed);
  Image img{Tensor({1, 3, kGoldenSize, kGoldenSize})};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t h = 0; h < kGoldenSize; ++h)
      for (std::size_t w = 0; w < kGoldenSize; ++w) {
        const double base = 0.5 + 0.3 * std::sin(0.2 * static_cast<double>(h + 2 * c)) *
                                      std::cos(0.15 * static_cast<double>(w));
        img.pixels.at(0, c, h, w) = std::clamp(base + 0.05 * rng.normal(), 0.0, 1.0);
      }
  return quantized(img);
}

struct SmallGolden {
  NamedTensors ep_block;
  NamedTensors dmum;
  NamedTensors mum;
};

// Small fixed-seed cases for the EP block, DMUM and MUM. Residual scales are
// 0.5 so the blocks are not identities.
SmallGolden small_golden_cases() {
  Xoshiro256 rng(kGoldenModelSeed + 1);
  SmallGolden g;
  {
    const EPBlockParams p = seed_ep_block(8, rng, 0.5);
    const Tensor x = oracle::random_tensor({1, 8, 8, 8}, rng);
    g.ep_block = {{"input", x}, {"output", ep_block(x, p)}};
  }
  {
    DmumParams p{seed_ep_block(8, rng, 0.5), seed_ep_block(8, rng, 0.5)};
    const Tensor image = oracle::random_tensor({4, 8, 6}, rng);
    const Tensor b_prev = normalize_channels(oracle::random_tensor({4, 6, 6}, rng));
    const Tensor d_feat = oracle::random_tensor({4, 8, 6}, rng, 0.0, 1.0);
    const FactorPair ab = dmum(image, b_prev, d_feat, p);
    g.dmum = {{"image", image}, {"b_prev", b_prev}, {"d_feat", d_feat}, {"a", ab.a}, {"b", ab.b}};
  }
  {
    MumParams p;
    p.ep = seed_ep_block(4, rng, 0.5);
    p.convs.first = {oracle::random_tensor({4, 4, 3, 3}, rng, -0.3, 0.3),
                     oracle::random_tensor({4}, rng, -0.1, 0.1)};
    p.convs.second = {oracle::random_tensor({4, 4, 3, 3}, rng, -0.3, 0.3),
                      oracle::random_tensor({4}, rng, -0.1, 0.1)};
    const Tensor lambda = oracle::random_tensor({4, 6, 6}, rng);
    const Tensor image = oracle::random_tensor({4, 6, 6}, rng);
    g.mum = {{"lambda_prev", lambda}, {"image", image}, {"lambda", mum(lambda, image, p)}};
  }
  return g;
}

const Tensor& named(const NamedTensors& tensors, const std::string& name, const std::string& file) {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw Failure(file + ": no tensor '" + name + "'");
}

std::map<std::string, std::string> read_golden_manifest(const fs::path& dir) {
  std::ifstream in(dir / kGoldenManifest);
  expect(static_cast<bool>(in), "missing " + (dir / kGoldenManifest).string());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    expect(tab != std::string::npos, "malformed manifest line '" + line + "'");
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

std::string suite_forward_contract(const fs::path& golden_dir) {
  const auto manifest = read_golden_manifest(golden_dir);
  std::map<std::string, std::vector<std::uint8_t>> files;
  for (const auto& [name, hash] : manifest) {
    const fs::path path = golden_dir / name;
    expect(fs::exists(path), "missing golden file " + path.string());
    files[name] = read_file(path);
    const std::string actual = content_hash(files[name]);
    expect(actual == hash, "golden file " + name + " hash " + actual + " != manifest " + hash);
  }
  auto decode = [&files](const std::string& name) {
    auto it = files.find(name);
    expect(it != files.end(), "golden manifest lacks " + name);
    try {
      return decode_tensors(it->second);
    } catch (const ParseError& e) {
      throw Failure(name + ": " + e.what());
    }
  };
  auto compare = [](const Tensor& got, const Tensor& want, const std::string& what) {
    expect(got.shape() == want.shape(), what + ": shape " + shape_string(got.shape()) + " vs " +
                                            shape_string(want.shape()));
    const double err = max_abs_diff(got, want);
    expect(err <= kGoldenTolerance, what + ": max abs deviation " + sci(err));
    return err;
  };

  auto input_it = files.find("forward_input.ppm");
  expect(input_it != files.end(), "golden manifest lacks forward_input.ppm");
  const Image input = decode_pnm(input_it->second);
  const UnfoldedModel model = seed_model(kGoldenBlocks, kGoldenChannels, kGoldenModelSeed);
  const auto start = Clock::now();
  const Image out = forward(model, input);
  const double elapsed = seconds_since(start);
  expect(out.pixels.shape() == input.pixels.shape(),
         "forward output " + shape_string(out.pixels.shape()) + " is not full resolution");
  double worst = compare(out.pixels, named(decode("forward_output.iirw"), "output", "forward_output.iirw"),
                         "forward");
  expect(elapsed < 30.0, "forward runtime " + fixed(elapsed, 2) + " s exceeds 30 s");

  const SmallGolden small = small_golden_cases();
  const auto ep = decode("ep_block.iirw");
  expect(bitwise_equal(named(ep, "input", "ep_block.iirw"), named(small.ep_block, "input", "")),
         "ep_block input regenerated differently");
  worst = std::max(worst, compare(named(small.ep_block, "output", ""),
                                  named(ep, "output", "ep_block.iirw"), "ep_block"));
  const auto dm = decode("dmum.iirw");
  worst = std::max(worst, compare(named(small.dmum, "a", ""), named(dm, "a", "dmum.iirw"), "dmum A"));
  worst = std::max(worst, compare(named(small.dmum, "b", ""), named(dm, "b", "dmum.iirw"), "dmum B"));
  const auto mu = decode("mum.iirw");
  worst = std::max(worst, compare(named(small.mum, "lambda", ""), named(mu, "lambda", "mum.iirw"),
                                  "mum"));
  return "n=16, C=48, 64x64 forward in " + fixed(elapsed, 2) + " s; " +
         std::to_string(manifest.size()) + " golden files hash-checked, max deviation " + sci(worst);
}

std::string suite_serialization() {
  TempDir tmp("serial");
  const UnfoldedModel model = seed_model(2, 48, 11);
  const fs::path weights = tmp.path() / "model.iirw";
  save_weights(model, weights);
  const UnfoldedModel loaded = load_weights(weights);
  expect(bitwise_equal(model, loaded), "weights round trip changed a parameter");
  expect(read_file(weights) == encode_weights(loaded), "re-encoded weights differ");
  expect(encode_tensors({}).size() == 12, "empty container is not a 12-byte header");

  Xoshiro256 rng(1111);
  std::size_t images = 0;
  for (std::size_t channels : {std::size_t{3}, std::size_t{1}}) {
    for (int i = 0; i < 3; ++i) {
      Image img{Tensor({1, channels, pick(rng, 1, 9), pick(rng, 1, 9)})};
      for (auto& v : img.pixels.data()) v = static_cast<double>(pick(rng, 0, 255)) / 255.0;
      const fs::path path = tmp.path() / ("img" + std::to_string(images++) + ".ppm");
      save_ppm(img, path);
      const Image back = load_ppm(path);
      expect(bitwise_equal(img.pixels, back.pixels), "PPM round trip changed pixels");
      expect(encode_pnm(back) == read_file(path), "PPM re-encode differs");
    }
  }
  return "weights (" + std::to_string(parameter_count(model)) + " params) and " +
         std::to_string(images) + " PNM images round-tripped bit-exactly";
}

std::string suite_metrics() {
  Image a{Tensor({1, 3, 16, 16}, 100.0 / 255.0)};
  Image b{Tensor({1, 3, 16, 16}, 116.0 / 255.0)};
  const double p = psnr(a, b);
  const double closed_form = 20.0 * std::log10(255.0 / 16.0);
  expect(std::abs(p - closed_form) <= 1e-3,
         "offset-16 PSNR " + fixed(p, 6) + " vs closed form " + fixed(closed_form, 6));

  Xoshiro256 rng(1212);
  const Tensor r = oracle::random_tensor({1, 1, 16, 16}, rng, 0.0, 1.0);
  const double s = ssim(r, r);
  expect(s == 1.0, "ssim(a,a) = " + fixed(s, 17));

  const double c = 0.37;
  const Tensor t = oracle::random_tensor({1, 3, 4, 4}, rng, 0.0, 0.5);
  Tensor pred = t;
  for (auto& v : pred.data()) v += c;
  const CompositeLoss loss = composite_loss(pred, t);
  const double err = std::max({std::abs(loss.spatial - c), std::abs(loss.freq - c),
                               std::abs(loss.total - 1.1 * c)});
  expect(err <= 1e-12, "composite loss closed form off by " + sci(err));
  expect(kDefaultFreqWeight == 0.1, "default lambda is not 0.1");
  return "offset-16 PSNR " + fixed(p, 4) + " dB (closed form 20 log10(255/16)), ssim(a,a) = 1, loss closed form error " + sci(err) +
         ", lambda 0.1";
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  std::size_t count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file() && e.path().filename() != "timings.tsv") ++count_b;
  std::size_t compared = 0;
  for (const auto& rel : files) {
    if (rel.filename() == "timings.tsv") continue;
    ++compared;
    if (!fs::exists(b / rel) || read_file(a / rel) != read_file(b / rel)) {
      why = rel.string() + " differs between runs";
      return false;
    }
  }
  if (compared != count_b) {
    why = "runs produced different file sets";
    return false;
  }
  return true;
}

std::string suite_determinism() {
  TempDir tmp("determinism");
  const fs::path clean = tmp.path() / "clean";
  fs::create_directories(clean);
  save_ppm(quantized(striped_image(20)), clean / "a.ppm");
  Image b = striped_image(24);
  for (auto& v : b.pixels.data()) v = 1.0 - v;
  save_ppm(quantized(b), clean / "b.ppm");

  DegradationSpec spec;
  spec.haze_level = 40;
  spec.rain_level = 30;
  spec.noise_level = 15;
  spec.seed = 7;
  RunConfig classical;
  classical.solver.outer_iters = 3;
  classical.solver.inner_iters = 2;
  classical.threads = 2;
  RunConfig unfolded;
  unfolded.mode = RestoreMode::kUnfolded;
  unfolded.blocks = 1;
  unfolded.seed = 5;
  unfolded.threads = 2;

  std::ostringstream log;
  for (const char* run : {"run1", "run2"}) {
    const fs::path root = tmp.path() / run;
    expect(cmd_degrade(clean, root / "degraded", spec, 2, log) == 0, "cmd_degrade failed: " + log.str());
    expect(cmd_restore(root / "degraded" / "manifest.tsv", root / "classical", classical, log) == 0,
           "classical cmd_restore failed: " + log.str());
    expect(cmd_restore(root / "degraded" / "manifest.tsv", root / "unfolded", unfolded, log) == 0,
           "unfolded cmd_restore failed: " + log.str());
  }
  std::string why;
  expect(same_tree(tmp.path() / "run1", tmp.path() / "run2", why), why);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(tmp.path() / "run1"))
    if (e.is_regular_file() && e.path().filename() != "timings.tsv") ++files;
  return std::to_string(files) + " output files byte-identical across two runs";
}

std::string suite_attention_normalization() {
  Xoshiro256 rng(1313);
  for (int i = 0; i < 10; ++i) {
    const int groups = static_cast<int>(pick(rng, 1, 3));
    const auto g = static_cast<std::size_t>(groups);
    auto p = random_xconv(rng, 2 * g, g, 3, 5, groups, 1, 1);
    p.tau = rng.uniform(-0.5, 0.5);
    explainable_conv_forward(oracle::random_tensor({2, 2 * g, 9, 8}, rng), p);
  }
  const AttentionStats stats = attention_stats();
  expect(stats.slabs > 0, "no attention slabs recorded");
  expect(stats.max_deviation <= kAttentionTolerance,
         "slab sum deviates from 1 by " + sci(stats.max_deviation));
  return std::to_string(stats.slabs) + " slabs across every forward in this run, max |sum - 1| " +
         sci(stats.max_deviation);
}

struct Suite {
  SuiteInfo info;
  std::function<std::string(const VerifyOptions&)> run;
};

const std::vector<Suite>& suites() {
  static const std::vector<Suite> all = {
      {{"conv_oracle", "Convolution oracle"}, [](const auto&) { return suite_conv_oracle(); }},
      {{"dft_oracle", "DFT oracle"}, [](const auto&) { return suite_dft_oracle(); }},
      {{"kronecker", "Kronecker equivalence"}, [](const auto&) { return suite_kronecker(); }},
      {{"adjoint", "Adjoint identity"}, [](const auto&) { return suite_adjoint(); }},
      {{"prox", "Prox oracle"}, [](const auto&) { return suite_prox(); }},
      {{"transcription", "Formula-transcription oracle"},
       [](const auto&) { return suite_transcription(); }},
      {{"descent", "Descent property"}, [](const auto&) { return suite_descent(); }},
      {{"denoise_smoke", "Denoising smoke test"}, [](const auto&) { return suite_denoise_smoke(); }},
      {{"uniform_attention", "Uniform-attention reduction"},
       [](const auto&) { return suite_uniform_attention(); }},
      {{"gradient_check", "Gradient check"}, [](const auto&) { return suite_gradient_check(); }},
      {{"batch_independence", "Batch independence"},
       [](const auto&) { return suite_batch_independence(); }},
      {{"forward_contract", "Unfolded forward contract"},
       [](const VerifyOptions& o) { return suite_forward_contract(o.golden_dir); }},
      {{"serialization", "Serialization"}, [](const auto&) { return suite_serialization(); }},
      {{"metrics", "Metric spot values"}, [](const auto&) { return suite_metrics(); }},
      {{"determinism", "Determinism"}, [](const auto&) { return suite_determinism(); }},
      // Last, so its statistic covers every forward the other suites ran.
      {{"attention_normalization", "Explainable-conv attention normalization"},
       [](const auto&) { return suite_attention_normalization(); }},
  };
  return all;
}

}  // namespace

fs::path VerifyOptions::default_golden_dir() { return INTERIR_GOLDEN_DIR; }

std::vector<SuiteInfo> suite_catalog() {
  std::vector<SuiteInfo> out;
  for (const auto& s : suites()) out.push_back(s.info);
  return out;
}

std::vector<SuiteResult> run_suites(const VerifyOptions& options) {
  for (const auto& name : options.only) {
    const bool known = std::any_of(suites().begin(), suites().end(),
                                   [&](const Suite& s) { return s.info.name == name; });
    if (!known) throw std::invalid_argument("unknown suite '" + name + "'");
  }
  std::vector<SuiteResult> results;
  for (const auto& suite : suites()) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), suite.info.name) == options.only.end()) {
      continue;
    }
    SuiteResult r;
    r.name = suite.info.name;
    r.criterion = suite.info.criterion;
    const auto start = Clock::now();
    try {
      r.detail = suite.run(options);
      r.passed = true;
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    r.seconds = seconds_since(start);
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_result_line(const SuiteResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + "  " + r.name + "  [" + r.criterion + "]  " +
         r.detail + "  (" + fixed(r.seconds, 2) + " s)";
}

int cmd_verify(const VerifyOptions& options, std::ostream& out) {
  const auto results = run_suites(options);
  std::size_t passed = 0;
  const SuiteResult* first_failure = nullptr;
  for (const auto& r : results) {
    out << format_result_line(r) << '\n' << std::flush;
    if (r.passed) {
      ++passed;
    } else if (first_failure == nullptr) {
      first_failure = &r;
    }
  }
  out << "verify: " << passed << "/" << results.size() << " suites passed\n";
  if (first_failure != nullptr) {
    out << "first failure: " << first_failure->name << ": " << first_failure->detail << '\n';
    return 1;
  }
  return 0;
}

std::vector<GoldenFile> build_golden_files() {
  std::vector<GoldenFile> files;
  const Image input = golden_input();
  files.push_back({"forward_input.ppm", encode_pnm(input)});
  const Image decoded = decode_pnm(files.back().bytes);
  const UnfoldedModel model = seed_model(kGoldenBlocks, kGoldenChannels, kGoldenModelSeed);
  files.push_back({"forward_output.iirw", encode_tensors({{"output", forward(model, decoded).pixels}})});
  const SmallGolden small = small_golden_cases();
  files.push_back({"ep_block.iirw", encode_tensors(small.ep_block)});
  files.push_back({"dmum.iirw", encode_tensors(small.dmum)});
  files.push_back({"mum.iirw", encode_tensors(small.mum)});
  return files;
}

void write_golden(const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / kGoldenManifest, std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot write golden manifest in " + dir.string());
  for (const auto& f : build_golden_files()) {
    write_file(dir / f.name, f.bytes);
    manifest << f.name << '\t' << content_hash(f.bytes) << '\n';
  }
}

}  // namespace interir::verify
