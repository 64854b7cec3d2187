#include <iostream>

#include <CLI11.hpp>

#include "fracsaddle/errors.hpp"
#include "fracsaddle/experiment.hpp"

namespace fs = fracsaddle;

int main(int argc, char** argv) {
  CLI::App app{"Saddle points of fractional Laplacian systems: solve, stability studies, optimal control."};
  app.footer(fs::config_reference() +
             "\nOutput goes to --out, else [run] out, else $FRACSADDLE_OUTPUT_ROOT/<mode>, else "
             "./fracsaddle_out/<mode>.\nExit codes: 0 ok, 1 validation error, 2 solver failure, 3 i/o error.");
  std::string config_path;
  std::string mode;
  std::string out;
  long long seed = -1;
  int threads = -1;
  bool verbose = false;
  app.add_option("--config", config_path, "INI experiment file (defaults apply when omitted)");
  app.add_option("--mode", mode, "solve | stability | optimize | constants | selftest (overrides [run] mode)");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "integer seed (overrides [run] seed)")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose", verbose, "per-term detail on stdout");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fs::kExitValidation;
  }

  fs::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = fs::load_config(config_path);
    if (!mode.empty()) cfg.mode = fs::parse_run_mode(mode);
  } catch (const fs::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return fs::kExitIo;
  } catch (const fs::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return fs::kExitValidation;
  }
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (threads >= 0) cfg.threads = threads;
  if (!out.empty()) cfg.out = out;
  const std::filesystem::path dir = cfg.out.empty() ? fs::default_output_dir(cfg.mode) : std::filesystem::path(cfg.out);
  const int rc = fs::run_experiment(cfg, dir, std::cout, std::cerr, verbose);
  if (verbose) std::cerr << "output: " << dir.string() << " (exit " << rc << ")\n";
  return rc;
}
