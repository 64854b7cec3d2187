#pragma once

// Functional of action
//   F_w(u,v) = 1/2 |(-Lap)^{alpha/4} v|^2 - 1/2 |(-Lap)^{alpha/4} u|^2 + int G(x,u,v,w)
// with the quadratic parts computed spectrally and the G part by grid quadrature.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fracsaddle/nonlinearity.hpp"
#include "fracsaddle/spectral_core.hpp"

namespace fracsaddle {

class ActionProblem {
 public:
  ActionProblem(BasisPtr basis, GridPtr grid, double alpha, NonlinearityPtr nonlinearity,
                ControlSet controls);

  [[nodiscard]] const BasisPtr& basis() const { return transform_.basis(); }
  [[nodiscard]] const GridPtr& grid() const { return transform_.grid(); }
  [[nodiscard]] const SineTransform& transform() const { return transform_; }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] const Nonlinearity& nonlinearity() const { return *nonlinearity_; }
  [[nodiscard]] const NonlinearityPtr& nonlinearity_ptr() const { return nonlinearity_; }
  [[nodiscard]] const ControlSet& controls() const { return controls_; }
  [[nodiscard]] const ValidationReport& report() const { return report_; }
  /// rho_k^{alpha/2} per mode.
  [[nodiscard]] std::span<const double> symbol() const { return symbol_; }
  /// rho_1^{alpha/2}.
  [[nodiscard]] double principal_symbol() const;
  [[nodiscard]] std::span<const double> aux_at(std::size_t node) const {
    return {aux_.data() + node * aux_count_, aux_count_};
  }
  [[nodiscard]] std::size_t aux_count() const { return aux_count_; }

  /// Throws ValidationError unless w has m components, matches the grid and lies in M.
  void check_control(const ControlField& w) const;
  [[nodiscard]] ControlField constant_control(std::span<const double> w) const;
  [[nodiscard]] SpectralField zero_field() const { return SpectralField(basis()); }

 private:
  SineTransform transform_;
  double alpha_;
  NonlinearityPtr nonlinearity_;
  ControlSet controls_;
  ValidationReport report_;
  std::vector<double> symbol_;
  std::size_t aux_count_ = 0;
  std::vector<double> aux_;
};

using ProblemPtr = std::shared_ptr<const ActionProblem>;

/// Weak-form left-hand sides tested against phi_k:
///   (r_u)_k = -rho_k^{alpha/2} u_k + <G_u, phi_k>,  (r_v)_k = rho_k^{alpha/2} v_k + <G_v, phi_k>.
/// Norms are dual H^{-alpha/2} norms sqrt(sum r_k^2 / rho_k^{alpha/2}).
struct WeakResidual {
  std::vector<double> r_u;
  std::vector<double> r_v;
  double norm_u = 0.0;
  double norm_v = 0.0;

  [[nodiscard]] double norm() const;
};

struct Evaluation {
  double action = 0.0;
  WeakResidual residual;
};

double eval_action(const ActionProblem& problem, const SpectralField& u, const SpectralField& v,
                   const ControlField& w);
WeakResidual weak_residual(const ActionProblem& problem, const SpectralField& u,
                           const SpectralField& v, const ControlField& w);
/// Action and residual from one synthesis pass.
Evaluation evaluate(const ActionProblem& problem, std::span<const double> u,
                    std::span<const double> v, const ControlField& w);

double dual_norm(const ActionProblem& problem, std::span<const double> r);

/// H_0^{alpha/2} x H_0^{alpha/2} distance between two state pairs.
double state_distance(const ActionProblem& problem, const SpectralField& u1, const SpectralField& v1,
                      const SpectralField& u2, const SpectralField& v2);

struct GradientCheckReport {
  int trials = 0;
  double worst_relative_error = 0.0;
  int worst_trial = -1;
  std::vector<double> worst_direction_u;
  std::vector<double> worst_direction_v;

  [[nodiscard]] bool passed(double tol) const { return worst_relative_error < tol; }
};

/// Directional derivatives of eval_action along random directions against the
/// residual-based gradient, with the difference step picked from a ladder by
/// the smallest successive change.
GradientCheckReport gradient_check(const ActionProblem& problem, const SpectralField& u,
                                   const SpectralField& v, const ControlField& w, int trials,
                                   std::uint64_t seed = 1);

}  // namespace fracsaddle
