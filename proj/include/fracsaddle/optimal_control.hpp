#pragma once

// Integral cost J(u, v, w) = int theta(x, u, (-Lap)^{alpha/4} u, v, (-Lap)^{alpha/4} v, w) dx
// and its minimisation over piecewise-constant admissible controls, with a full
// saddle solve for every candidate control.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fracsaddle/saddle_solver.hpp"

namespace fracsaddle {

struct CostPoint {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  double u = 0.0;
  double p = 0.0;
  double v = 0.0;
  double q = 0.0;
  std::span<const double> w;
};

struct CostIntegrand {
  std::string name;
  std::function<double(const CostPoint&)> theta;
  /// Growth exponent s in |theta| <= c (1 + |u|^s + p^2 + |v|^s + q^2).
  double growth = 2.0;
  bool convex_in_w = true;
  /// Optional lower-bound data theta >= eta(x) - C (|u| + |p| + |v| + |q| + |w|).
  std::function<double(const std::array<double, 3>&)> eta;
  double eta_constant = 0.0;
};

/// theta = |u|^s + |v|^s + |w|^2.
CostIntegrand example1_cost(double s = 2.0);
/// theta = |u|^s + p^2 w1 + q^2 w2 - |x| p + |w|^2.
CostIntegrand example2_cost(double s = 3.0);

using CostFactory = std::function<CostIntegrand(const std::map<std::string, std::string>&)>;
void register_cost(const std::string& name, CostFactory factory);
CostIntegrand make_cost(const std::string& name, const std::map<std::string, std::string>& params);
std::vector<std::string> registered_costs();

double eval_cost(const ActionProblem& problem, const CostIntegrand& cost, const SpectralField& u,
                 const SpectralField& v, const ControlField& w);

struct CostCheck {
  bool convex_ok = true;
  double worst_midpoint_gap = 0.0;
  int samples = 0;
};

/// Midpoint inequality theta(.., (w1+w2)/2) <= (theta(w1) + theta(w2))/2 on
/// deterministic random samples with w in M.
CostCheck check_cost_convexity(const CostIntegrand& cost, const ControlSet& controls,
                               const BoxDomain& domain, int samples = 200,
                               std::uint64_t seed = 0xc0ffee);

/// int eta - C (||u||_1 + ||p||_1 + ||v||_1 + ||q||_1 + ||w||_1); requires cost.eta.
double a7_lower_bound(const ActionProblem& problem, const CostIntegrand& cost, const SpectralField& u,
                      const SpectralField& v, const ControlField& w);

/// Per-cell control values on c^n congruent subcells. Grid nodes on cell
/// interfaces take the mean of the adjacent cells, which stays in M.
class ControlParametrization {
 public:
  ControlParametrization(GridPtr grid, ControlSet controls, int cells_per_axis,
                         std::span<const double> fill);

  [[nodiscard]] int cells_per_axis() const { return cells_; }
  [[nodiscard]] std::size_t cell_count() const { return cell_count_; }
  [[nodiscard]] int components() const { return controls_.dim(); }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] const ControlSet& controls() const { return controls_; }
  [[nodiscard]] const GridPtr& grid() const { return grid_; }
  /// Value of component c in cell i.
  [[nodiscard]] double value(std::size_t cell, int c) const;
  /// Sets all values and projects them onto M.
  void assign(std::span<const double> values);
  void set(std::size_t index, double value);
  [[nodiscard]] ControlField to_field() const;

 private:
  GridPtr grid_;
  ControlSet controls_;
  int cells_;
  std::size_t cell_count_;
  std::vector<double> values_;
  // per node: offsets into cells_of_ for its adjacent cells
  std::vector<std::size_t> node_begin_;
  std::vector<std::uint32_t> cells_of_;
};

enum class OptimizerMethod { pattern, projected_gradient };
std::string to_string(OptimizerMethod m);
OptimizerMethod parse_optimizer_method(const std::string& name);

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::pattern;
  /// Initial stencil step as a fraction of each component's box width.
  double initial_step = 0.25;
  /// Stop once the relative step falls below this.
  double step_tol = 1e-4;
  double shrink = 0.5;
  int max_evaluations = 20000;
  double max_failure_fraction = 0.5;
  /// projected_gradient: finite-difference step (relative to box width) and iterations.
  double fd_step = 1e-5;
  int max_iters = 200;
  int threads = 0;
  bool override_validation = false;

  void validate() const;
};

struct TraceRow {
  int iteration = 0;
  int evaluations = 0;
  double step = 0.0;
  double cost = 0.0;
  bool accepted = false;
  /// Stencil index (2i for +e_i, 2i+1 for -e_i) of the accepted move, -1 if none.
  int move = -1;
  int failures = 0;
};

struct AdmissibilityVerdict {
  bool passed = false;
  double residual_u = 0.0;
  double residual_v = 0.0;
  double tol = 0.0;
};

AdmissibilityVerdict admissibility_check(const ActionProblem& problem, const SpectralField& u,
                                         const SpectralField& v, const ControlField& w,
                                         double tol = 1e-8);

struct OptimalResult {
  ControlParametrization w_star;
  SaddleResult state;
  double cost = 0.0;
  std::vector<TraceRow> trace;
  /// Reasons for rejected candidates, in evaluation order.
  std::vector<std::string> rejected;
  AdmissibilityVerdict admissibility;
  int evaluations = 0;
  int failures = 0;
  std::string status;
};

/// One control-to-cost evaluation: saddle solve at the induced control, then J.
struct CostEvaluation {
  bool ok = false;
  double cost = 0.0;
  SaddleResult state;
  std::string reason;
};

CostEvaluation evaluate_control(const ActionProblem& problem, const CostIntegrand& cost,
                                const ControlParametrization& w, const SolverConfig& solver,
                                const SaddleResult* warm = nullptr);

OptimalResult optimize_control(const ActionProblem& problem, const CostIntegrand& cost,
                               const ControlParametrization& init, const SolverConfig& solver,
                               const OptimizerConfig& cfg = {});

struct BaselineResult {
  double best_cost = 0.0;
  std::vector<double> best_values;
  int samples = 0;
  int failures = 0;
};

/// Uniform random per-cell values in M; deterministic for a given seed.
BaselineResult random_search_baseline(const ActionProblem& problem, const CostIntegrand& cost,
                                      const ControlParametrization& shape,
                                      const SolverConfig& solver, int samples = 200,
                                      std::uint64_t seed = 1, int threads = 0);

}  // namespace fracsaddle
