#include "interir/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "interir/errors.hpp"
#include "interir/format.hpp"
#include "interir/metrics.hpp"
#include "interir/rng.hpp"

namespace interir {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

Image clamped(Image img) {
  for (auto& v : img.pixels.data()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, '\t')) fields.push_back(field);
  return fields;
}

struct RestoreItem {
  std::string status = "ok";
  std::string note;
  double seconds = 0.0;
  bool failed = false;
};

Image restore_classical(const Image& degraded, const RunConfig& config, const fs::path& trace_path,
                        RestoreItem& item) {
  const Tensor chan = degraded.pixels.reshaped(
      {degraded.channels(), degraded.height(), degraded.width()});
  try {
    SolveResult result = solve(chan, config.regularizer, config.solver);
    write_trace_csv(result.trace, trace_path);
    if (result.trace.any_stall()) {
      item.status = "stalled";
      item.note = "image step stalled; degraded copy emitted";
      return degraded;
    }
    return clamped(Image{result.image.reshaped(degraded.pixels.shape())});
  } catch (const SolveError& e) {
    write_trace_csv(e.trace(), trace_path);
    throw;
  }
}

}  // namespace

RestoreMode parse_mode(const std::string& text) {
  if (text == "classical") return RestoreMode::kClassical;
  if (text == "unfolded") return RestoreMode::kUnfolded;
  throw SpecError("mode must be 'classical' or 'unfolded', got '" + text + "'");
}

MaskVariant parse_mask_variant(const std::string& text) {
  if (text == "image") return MaskVariant::kImageGate;
  if (text == "residual") return MaskVariant::kResidualGate;
  throw SpecError("mask variant must be 'image' or 'residual', got '" + text + "'");
}

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("INTERIR_THREADS")) {
    std::size_t cap = 0;
    const std::string s(env);
    auto res = std::from_chars(s.data(), s.data() + s.size(), cap);
    if (res.ec == std::errc{} && res.ptr == s.data() + s.size() && cap > 0) n = std::min(n, cap);
  }
  return n;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(count, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return out;
}

int cmd_degrade(const fs::path& clean_dir, const fs::path& out_dir, const DegradationSpec& spec,
                std::size_t threads, std::ostream& log) {
  spec.validate();
  const auto inputs = list_images(clean_dir);
  fs::create_directories(out_dir);

  std::vector<std::optional<ManifestEntry>> entries(inputs.size());
  std::vector<std::string> errors(inputs.size());
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    try {
      DegradationSpec per_image = spec;
      per_image.seed = derive_seed(spec.seed, i);
      const Image degraded = make_test_case(load_ppm(inputs[i]), per_image);
      const fs::path name = inputs[i].filename();
      save_ppm(degraded, out_dir / name);
      entries[i] = ManifestEntry{fs::absolute(inputs[i]).lexically_normal().string(),
                                 name.string(), per_image};
    } catch (const std::exception& e) {
      errors[i] = inputs[i].string() + ": " + e.what();
    }
  });

  std::vector<ManifestEntry> manifest;
  int status = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (entries[i]) {
      manifest.push_back(*entries[i]);
    } else {
      log << "error: " << errors[i] << '\n';
      status = 1;
    }
  }
  write_manifest(manifest, out_dir / "manifest.tsv");
  log << "degraded " << manifest.size() << " of " << inputs.size() << " images into "
      << out_dir.string() << '\n';
  return status;
}

int cmd_restore(const fs::path& manifest_path, const fs::path& out_dir, const RunConfig& config,
                std::ostream& log) {
  config.regularizer.validate();
  const auto entries = read_manifest(manifest_path);
  const fs::path manifest_dir = manifest_path.parent_path();
  fs::create_directories(out_dir);

  std::optional<UnfoldedModel> loaded;
  if (config.mode == RestoreMode::kUnfolded) {
    if (config.weights_path) {
      loaded = load_weights(*config.weights_path);
      log << "loaded weights " << config.weights_path->string() << " (n=" << loaded->n() << ")\n";
    } else {
      log << "warning: no --weights given; using an untrained model seeded with " << config.seed
          << '\n';
    }
  }
  std::mutex seeded_mutex;
  std::map<std::size_t, UnfoldedModel> seeded;
  auto model_for = [&](std::size_t channels) -> const UnfoldedModel& {
    if (loaded) return *loaded;
    std::lock_guard lock(seeded_mutex);
    auto it = seeded.find(channels);
    if (it == seeded.end()) {
      it = seeded.emplace(channels, seed_model(config.blocks, channels, config.seed)).first;
    }
    return it->second;
  };

  std::vector<RestoreItem> items(entries.size());
  parallel_for(entries.size(), config.threads, [&](std::size_t i) {
    RestoreItem& item = items[i];
    const fs::path degraded_path = resolve(manifest_dir, entries[i].degraded_path);
    const std::string stem = degraded_path.stem().string();
    const auto start = std::chrono::steady_clock::now();
    std::optional<Image> degraded;
    try {
      degraded = load_ppm(degraded_path);
      Image restored;
      if (config.mode == RestoreMode::kClassical) {
        restored = restore_classical(*degraded, config, out_dir / (stem + ".trace.csv"), item);
      } else {
        const std::size_t channels = degraded->channels() * kDownsample * kDownsample;
        restored = forward(model_for(channels), *degraded, config.forward);
      }
      save_ppm(restored, out_dir / (stem + ".ppm"));
    } catch (const std::exception& e) {
      item.failed = true;
      item.status = "failed";
      item.note = e.what();
      if (degraded) {
        try {
          save_ppm(*degraded, out_dir / (stem + ".ppm"));
        } catch (const std::exception&) {
        }
      }
    }
    item.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  auto pairs = open_out(out_dir / "pairs.tsv");
  auto summary = open_out(out_dir / "summary.tsv");
  auto timings = open_out(out_dir / "timings.tsv");
  summary << "image\tstatus\tnote\n";
  timings << "image\tseconds\n";
  int status = 0;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string stem = fs::path(entries[i].degraded_path).stem().string();
    const RestoreItem& item = items[i];
    pairs << entries[i].clean_path << '\t' << stem << ".ppm\n";
    summary << stem << '\t' << item.status << '\t' << item.note << '\n';
    timings << stem << '\t' << format_double(item.seconds) << '\n';
    if (item.status != "ok") {
      ++flagged;
      log << (item.failed ? "error: " : "warning: ") << stem << ": " << item.note << '\n';
    }
    if (item.failed) status = 1;
  }
  log << "restored " << entries.size() - flagged << " of " << entries.size() << " images ("
      << flagged << " flagged) into " << out_dir.string() << '\n';
  return status;
}

std::vector<double> column_means(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  std::vector<double> out(rows.front().size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < out.size(); ++c) {
    double total = 0.0;
    std::size_t finite = 0, pos_inf = 0;
    for (const auto& r : rows) {
      if (std::isfinite(r[c])) {
        total += r[c];
        ++finite;
      } else if (r[c] > 0.0) {
        ++pos_inf;
      }
    }
    if (finite > 0) {
      out[c] = total / static_cast<double>(finite);
    } else if (pos_inf > 0) {
      out[c] = std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

int cmd_eval(const fs::path& pairs_path, std::ostream& out, std::ostream& log) {
  std::ifstream in(pairs_path);
  if (!in) throw std::runtime_error("cannot open pairs file " + pairs_path.string());
  const fs::path base = pairs_path.parent_path();

  out << kEvalCsvHeader << '\n';
  std::vector<std::vector<double>> rows;
  int status = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    const std::string name =
        fields.size() >= 2 ? fs::path(fields[1]).stem().string() : std::string("?");
    try {
      if (fields.size() != 2) throw SpecError("pairs line needs 2 tab-separated fields");
      const Image clean = load_ppm(resolve(base, fields[0]));
      const Image restored = load_ppm(resolve(base, fields[1]));
      if (clean.pixels.shape() != restored.pixels.shape()) {
        throw DimensionError("shape", "size mismatch " + shape_string(clean.pixels.shape()) +
                                          " vs " + shape_string(restored.pixels.shape()));
      }
      const EvalReport r = evaluate(restored, clean);
      out << format_eval_row(name, r) << '\n';
      rows.push_back({r.psnr_rgb, r.psnr_y, r.ssim_y, r.loss.spatial, r.loss.freq, r.loss.total});
    } catch (const std::exception& e) {
      out << name << ",ERROR,ERROR,ERROR,ERROR,ERROR,ERROR\n";
      log << "error: " << name << ": " << e.what() << '\n';
      status = 1;
    }
  }
  const auto means = column_means(rows);
  out << "mean";
  for (std::size_t c = 0; c < 6; ++c) {
    out << ',' << format_double(c < means.size() ? means[c] : std::numeric_limits<double>::quiet_NaN());
  }
  out << '\n';
  return status;
}

}  // namespace interir
