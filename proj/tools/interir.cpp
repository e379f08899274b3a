// Command-line entry point: degrade, restore, eval, verify.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "interir/commands.hpp"
#include "interir/verify/suites.hpp"

namespace fs = std::filesystem;
using namespace interir;

int main(int argc, char** argv) {
  CLI::App app{"interir: interpretable image restoration toolkit"};
  app.require_subcommand(1);

  DegradationSpec spec;
  fs::path clean_dir, degrade_out;
  auto* degrade = app.add_subcommand("degrade", "Synthesize degraded copies of clean images");
  degrade->add_option("clean_dir", clean_dir, "Directory of clean .ppm/.pgm images")->required();
  degrade->add_option("--out", degrade_out, "Output directory")->required();
  degrade->add_option("--haze", spec.haze_level, "Haze level [0,150]")->capture_default_str();
  degrade->add_option("--rain", spec.rain_level, "Rain streak count [0,300]")->capture_default_str();
  degrade->add_option("--noise", spec.noise_level, "Gaussian sigma, 8-bit units [0,50]")
      ->capture_default_str();
  degrade->add_option("--seed", spec.seed, "Base seed")->capture_default_str();

  RunConfig config;
  std::string mode = "classical";
  fs::path manifest, restore_out, weights;
  std::string mask_variant = "image";
  auto* restore = app.add_subcommand("restore", "Restore every image listed in a manifest");
  restore->add_option("manifest", manifest, "manifest.tsv written by degrade")->required();
  restore->add_option("--out", restore_out, "Output directory")->required();
  restore->add_option("--mode", mode, "classical or unfolded")
      ->check(CLI::IsMember({"classical", "unfolded"}))
      ->capture_default_str();
  restore->add_option("--weights", weights, "IIRW weights for unfolded mode");
  restore->add_option("--seed", config.seed, "Seed for an untrained unfolded model")
      ->capture_default_str();
  restore->add_option("--blocks", config.blocks, "IPBlocks of an untrained unfolded model")
      ->capture_default_str();
  restore->add_option("--outer", config.solver.outer_iters, "Outer iterations")->capture_default_str();
  restore->add_option("--inner", config.solver.inner_iters, "Image steps per outer iteration")
      ->capture_default_str();
  restore->add_option("--alpha", config.regularizer.alpha, "TV weight")->capture_default_str();
  restore->add_option("--beta", config.regularizer.beta, "Penalty on A")->capture_default_str();
  restore->add_option("--gamma", config.regularizer.gamma, "Penalty on B")->capture_default_str();
  restore->add_option("--sigma", config.regularizer.sigma, "Multiplier scale")->capture_default_str();
  restore->add_option("--epsilon", config.regularizer.epsilon, "Augmented Lagrangian penalty")
      ->capture_default_str();
  restore->add_option("--eta", config.solver.eta, "Initial image step")->capture_default_str();
  restore->add_option("--mask-variant", mask_variant, "Unfolded H mask term: image or residual")
      ->check(CLI::IsMember({"image", "residual"}))
      ->capture_default_str();
  restore->add_flag("--freeze-factors", config.solver.freeze_factors,
                    "Keep A and B at identity in classical mode");

  fs::path pairs, eval_out;
  auto* eval = app.add_subcommand("eval", "Score restored images against their clean references");
  eval->add_option("pairs", pairs, "pairs.tsv written by restore")->required();
  eval->add_option("--out", eval_out, "CSV output file (default: stdout)");

  verify::VerifyOptions verify_options;
  auto* verify = app.add_subcommand("verify", "Run the oracle and property suites");
  verify->add_option("--golden-dir", verify_options.golden_dir, "Golden vector directory")
      ->capture_default_str();
  verify->add_option("--suite", verify_options.only, "Run only the named suite(s)");
  verify->add_flag_callback(
      "--list",
      [] {
        for (const auto& s : verify::suite_catalog()) std::cout << s.name << "  " << s.criterion << '\n';
        std::exit(0);
      },
      "List suite names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (degrade->parsed()) {
      return cmd_degrade(clean_dir, degrade_out, spec, worker_count(), std::cerr);
    }
    if (restore->parsed()) {
      config.mode = parse_mode(mode);
      config.forward.mask_variant = parse_mask_variant(mask_variant);
      if (!weights.empty()) config.weights_path = weights;
      config.threads = worker_count();
      return cmd_restore(manifest, restore_out, config, std::cerr);
    }
    if (eval->parsed()) {
      if (eval_out.empty()) return cmd_eval(pairs, std::cout, std::cerr);
      std::ofstream out(eval_out, std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + eval_out.string());
      return cmd_eval(pairs, out, std::cerr);
    }
    if (verify->parsed()) return verify::cmd_verify(verify_options, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
