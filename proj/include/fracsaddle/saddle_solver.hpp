#pragma once

// Saddle points of the action functional.
//
// extragradient: two-point ascent (u) / descent (v) in the metric preconditioned
//   by diag(rho_k^{-alpha/2}), with a Lipschitz-type step test and backtracking.
// direct_linear: exact per-mode 2x2 solve for linear_coupled with constant control.
// min_only:      preconditioned gradient descent for u-independent problems.

#include <cstdint>
#include <string>
#include <vector>

#include "fracsaddle/action.hpp"

namespace fracsaddle {

enum class SolverMethod { extragradient, direct_linear, min_only };

std::string to_string(SolverMethod m);
SolverMethod parse_solver_method(const std::string& name);

struct SolverConfig {
  SolverMethod method = SolverMethod::extragradient;
  double step = 0.5;
  double tol = 1e-10;
  int max_iters = 100000;
  double backtrack = 0.5;
  /// Accept a step when tau |d(z_half) - d(z)| <= lipschitz_factor |z_half - z|.
  double lipschitz_factor = 0.9;
  /// Stop as diverged after this many consecutive residual increases.
  int divergence_window = 100;
  bool random_init = false;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  /// Solve even when the assumption report has failures.
  bool override_validation = false;
  int certify_probes = 100;
  double certify_tol = 1e-8;
  bool record_log = false;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double action = 0.0;
  double residual_u = 0.0;
  double residual_v = 0.0;
  double step = 0.0;
};

struct SaddleCertificate {
  int probes = 0;
  double tol = 0.0;
  bool passed = false;
  /// min over probes of F0 + tol - F(u0 + g, v0); negative means violated.
  double worst_u_margin = 0.0;
  /// min over probes of F(u0, v0 + h) - F0 + tol.
  double worst_v_margin = 0.0;
  std::vector<int> violations;
};

struct SaddleResult {
  SpectralField u;
  SpectralField v;
  double action = 0.0;
  double residual_u = 0.0;
  double residual_v = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;
  SolverMethod method = SolverMethod::extragradient;
  SaddleCertificate certificate;
  std::vector<IterationRecord> log;
};

/// Dispatches on cfg.method. `warm` seeds the iteration when given.
SaddleResult solve(const ActionProblem& problem, const ControlField& w, const SolverConfig& cfg,
                   const SaddleResult* warm = nullptr);

SaddleResult solve_saddle(const ActionProblem& problem, const ControlField& w,
                          const SolverConfig& cfg, const SaddleResult* warm = nullptr);

/// Requires a LinearCoupled nonlinearity and a spatially constant control.
/// Throws SolverError naming the mode when a 2x2 block is singular.
SaddleResult solve_direct_linear(const ActionProblem& problem, const ControlField& w,
                                 const SolverConfig& cfg = {});

/// Requires a u-independent nonlinearity; u stays zero.
SaddleResult solve_min_only(const ActionProblem& problem, const ControlField& w,
                            const SolverConfig& cfg, const SaddleResult* warm = nullptr);

/// Random probe check of F(u0+g, v0) <= F0 + tol <= F(u0, v0+h) + 2 tol with
/// tol = rel_tol (1 + |F0|). Probe 0 is the null direction.
SaddleCertificate certify_saddle(const ActionProblem& problem, const ControlField& w,
                                 const SpectralField& u, const SpectralField& v, int probes,
                                 double rel_tol = 1e-8, std::uint64_t seed = 7);

}  // namespace fracsaddle
