#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

#include "interir/degradation.hpp"
#include "interir/isn_solver.hpp"
#include "interir/unfolded_net.hpp"

namespace interir {

enum class RestoreMode { kClassical, kUnfolded };

RestoreMode parse_mode(const std::string& text);
/// "image" or "residual".
MaskVariant parse_mask_variant(const std::string& text);

struct RunConfig {
  RestoreMode mode = RestoreMode::kClassical;
  std::optional<std::filesystem::path> weights_path;
  DegradationSpec spec;
  RegularizerConfig regularizer;
  SolverOptions solver;
  ForwardOptions forward;
  int blocks = kDefaultBlocks;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Worker count from INTERIR_THREADS, else the hardware concurrency; at least 1.
std::size_t worker_count();

/// Runs fn(0..count-1) on up to `threads` workers. Exceptions escaping fn
/// are rethrown after all workers finish (the first by index wins).
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

/// *.ppm / *.pgm files directly inside `dir`, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Degrades every image in `clean_dir` into `out_dir` and writes
/// `out_dir/manifest.tsv`. Image i uses seed derive_seed(spec.seed, i).
/// Returns 0 when every image was written, 1 otherwise.
int cmd_degrade(const std::filesystem::path& clean_dir, const std::filesystem::path& out_dir,
                const DegradationSpec& spec, std::size_t threads, std::ostream& log);

/// Restores every degraded image listed in `manifest` into `out_dir`:
///   <stem>.ppm         restored image (the degraded copy on stall/failure)
///   <stem>.trace.csv   classical solver trace
///   pairs.tsv          clean path, restored file
///   summary.tsv        name, status (ok|stalled|failed), note
///   timings.tsv        wall-clock seconds per image
/// Returns 0 only when every image was processed without failure.
int cmd_restore(const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
                const RunConfig& config, std::ostream& log);

/// Writes the evaluation CSV for the pairs file to `out`. Returns 0 when
/// every pair evaluated.
int cmd_eval(const std::filesystem::path& pairs, std::ostream& out, std::ostream& log);

/// Per-column mean over finite values; +inf if a column is all +inf.
std::vector<double> column_means(const std::vector<std::vector<double>>& rows);

}  // namespace interir
