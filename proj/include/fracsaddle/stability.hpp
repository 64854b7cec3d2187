#pragma once

// Continuous dependence of saddle points on the control.
//
// A ControlSequenceSpec generates w_1..w_L around a base control w_0:
//   strong_lp:  w_k = clip_M(w_0 + A decay^k psi(x)),     psi = prod_i sin(pi x_i / side)
//   weak_lp:    w_k = clip_M(w_0 + A pattern(omega_k x_1)) measured in L^p, p < inf
//   weak_star:  same oscillation, measured in L^inf
// with omega_k = k by default. Every term is solved and compared with the solve at w_0.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fracsaddle/saddle_solver.hpp"

namespace fracsaddle {

enum class SequenceMode { strong_lp, weak_lp, weak_star };
enum class Verdict { pass, fail, inconclusive };

std::string to_string(SequenceMode m);
SequenceMode parse_sequence_mode(const std::string& name);
std::string to_string(Verdict v);

struct ControlSequenceSpec {
  SequenceMode mode = SequenceMode::strong_lp;
  /// Base value of w_0, constant in x. Empty means the centre of M.
  std::vector<double> base;
  int length = 20;
  double amplitude = 0.1;
  double decay = 0.4;
  /// Oscillation frequency of term k is frequency_scale * k.
  double frequency_scale = 1.0;
  /// "sin" or "square".
  std::string pattern = "sin";

  void validate() const;
};

constexpr std::size_t kTestFunctions = 5;

struct ControlSequence {
  ControlField base;
  std::vector<ControlField> terms;
  /// ||w_k - w_0|| in the norm of the mode.
  std::vector<double> distance;
  /// <w_k - w_0, psi_j> summed over components, for the fixed test functions
  /// 1, phi_1, x_1/side, phi_(2,1,1), a centred Gaussian.
  std::vector<std::array<double, kTestFunctions>> pairings;
  /// Fraction of node components changed by the clip onto M.
  std::vector<double> clipped_fraction;
  /// Exponent used for the distances.
  double p = 2.0;
  std::vector<std::string> issues;
};

/// Grid samples of the five test functions.
std::array<std::vector<double>, kTestFunctions> test_functions(const QuadratureGrid& grid);

/// Base w_0 = spec.base (constant in x).
ControlSequence make_sequence(const ActionProblem& problem, const ControlSequenceSpec& spec);
/// Arbitrary admissible base control; spec.base is ignored.
ControlSequence make_sequence(const ActionProblem& problem, const ControlSequenceSpec& spec,
                              const ControlField& base);

struct DependenceRow {
  int k = 0;
  double control_distance = 0.0;
  double max_pairing = 0.0;
  double solution_distance = 0.0;
  double value_gap = 0.0;
  double action = 0.0;
  double residual = 0.0;
  bool converged = false;
  bool certified = false;
  std::string status;
};

struct InclusionCheck {
  bool attempted = false;
  bool converged = false;
  bool certified = false;
  double residual = 0.0;
  double distance_to_base = 0.0;
  int iterations = 0;
};

struct DependenceThresholds {
  double solution_tol = 1e-6;
  double value_tol = 1e-8;
  int monotone_tail = 5;
  double weak_solution_tol = 1e-4;
  double contrast_factor = 0.1;
  double membership_tol = 1e-8;
};

struct DependenceVerdicts {
  Verdict strong_dependence = Verdict::inconclusive;
  Verdict value_continuity = Verdict::inconclusive;
  Verdict weak_contrast = Verdict::inconclusive;
  Verdict weak_null_evidence = Verdict::inconclusive;
  Verdict set_inclusion = Verdict::inconclusive;
  /// The verdict of the mode: strong_dependence and value_continuity for
  /// strong_lp, weak_contrast for the weak modes, and set_inclusion in all modes.
  Verdict overall = Verdict::inconclusive;
  std::vector<std::string> notes;
};

struct DependenceReport {
  ControlSequenceSpec spec;
  DependenceThresholds thresholds;
  double p = 2.0;
  double volume = 0.0;
  double base_action = 0.0;
  bool base_converged = false;
  std::vector<DependenceRow> rows;
  std::vector<std::string> issues;
  InclusionCheck inclusion;
  DependenceVerdicts verdicts;
  SaddleResult base;
  SaddleResult last;
};

/// Verdicts as a pure function of the report contents.
DependenceVerdicts assess(const DependenceReport& report);

/// Weak modes require the linear-in-control split and its hypotheses.
DependenceReport run_dependence(const ActionProblem& problem, const ControlSequenceSpec& spec,
                                const SolverConfig& cfg, const DependenceThresholds& thresholds = {},
                                int threads = 0);

struct ClusterVerdict {
  Verdict verdict = Verdict::inconclusive;
  /// Number of trailing terms within eps of the candidate.
  int close_tail = 0;
  double min_distance = 0.0;
  double residual = 0.0;
  std::string detail;
};

/// The candidate clusters if the trailing min(3, len) terms lie within eps of it,
/// and belongs to S_0 if its weak residual at w0 is below tol.
ClusterVerdict cluster_check(const std::vector<SaddleResult>& solutions, const SaddleResult& candidate,
                             const ActionProblem& problem, const ControlField& w0,
                             double eps = 1e-6, double tol = 1e-8);

}  // namespace fracsaddle
