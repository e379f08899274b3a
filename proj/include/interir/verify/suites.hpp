#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace interir::verify {

struct SuiteResult {
  std::string name;
  std::string criterion;
  bool passed = false;
  /// Measured figures on success, the first failing assertion otherwise.
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::filesystem::path golden_dir = default_golden_dir();
  /// Suite names to run; empty runs all.
  std::vector<std::string> only;

  static std::filesystem::path default_golden_dir();
};

struct SuiteInfo {
  std::string name;
  std::string criterion;
};
std::vector<SuiteInfo> suite_catalog();

/// Runs the selected suites in catalog order. Throws std::invalid_argument
/// for an unknown suite name.
std::vector<SuiteResult> run_suites(const VerifyOptions& options);

/// Prints one PASS/FAIL line per suite plus a summary; 0 iff all pass.
int cmd_verify(const VerifyOptions& options, std::ostream& out);

std::string format_result_line(const SuiteResult& r);

// Golden vectors -----------------------------------------------------------

inline constexpr std::uint64_t kGoldenModelSeed = 20240601;
inline constexpr std::uint64_t kGoldenInputSeed = 77;
inline constexpr int kGoldenBlocks = 16;
inline constexpr std::size_t kGoldenChannels = 48;
inline constexpr std::size_t kGoldenSize = 64;
inline constexpr double kGoldenTolerance = 1e-12;
inline constexpr const char* kGoldenManifest = "MANIFEST.tsv";

struct GoldenFile {
  std::string name;
  std::vector<std::uint8_t> bytes;
};

/// Recomputes every golden artifact from the current code.
std::vector<GoldenFile> build_golden_files();

/// Writes the artifacts and MANIFEST.tsv (file name, content hash).
void write_golden(const std::filesystem::path& dir);

}  // namespace interir::verify
