#pragma once

// One experiment = one INI file. run_experiment validates everything it can
// before computing anything, then writes the mode's artifacts plus a
// run_info.json sidecar (the only file carrying a timestamp).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracsaddle/io.hpp"

namespace fracsaddle {

enum class RunMode { solve, stability, optimize, constants, selftest };
std::string to_string(RunMode m);
RunMode parse_run_mode(const std::string& name);

struct ExperimentConfig {
  RunMode mode = RunMode::solve;
  std::uint64_t seed = 0;
  int threads = 0;
  /// Output directory; empty picks the default (see default_output_dir).
  std::string out;

  BoxDomain domain;
  double alpha = 1.5;
  int cutoff = 3;
  int grid = 7;

  std::string nonlinearity = "linear_coupled";
  ParamMap nonlinearity_params;

  ControlSet controls{{{0.0, 1.0}, {0.0, 1.0}}, 2.0};
  /// Constant control for mode solve; empty means the centre of M.
  std::vector<double> control_value;

  SolverConfig solver;

  ControlSequenceSpec sequence;
  DependenceThresholds thresholds;

  std::string cost = "example1_cost";
  ParamMap cost_params;
  OptimizerConfig optimizer;
  int cells = 2;
  /// Initial per-cell value (one entry per component); empty means the centre of M.
  std::vector<double> init;
  int baseline_samples = 0;

  /// Field ranges and cross-field rules; no problem is built.
  void validate() const;
};

ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its default, as shown by --help.
std::string config_reference();

/// $FRACSADDLE_OUTPUT_ROOT/<mode> if set, else ./fracsaddle_out/<mode>.
std::filesystem::path default_output_dir(RunMode mode);

/// Builds the problem and runs the checks that need it (weak modes need the split).
ProblemPtr build_problem(const ExperimentConfig& cfg);

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitSolver = 2, kExitIo = 3 };

/// Runs the configured mode, writing into out_dir. Never throws; the return
/// value is an ExitCode and the reason goes to err.
int run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                   std::ostream& out, std::ostream& err, bool verbose = false);

struct SelftestLine {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick in-process invariant checks at the configured alpha.
std::vector<SelftestLine> run_selftest(double alpha, std::uint64_t seed);

}  // namespace fracsaddle
