#pragma once

// The coupling term G(x, u, v, w) of the action functional, its control set,
// the built-in instances and the assumption validators.

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fracsaddle/spectral_core.hpp"

namespace fracsaddle {

/// Box M = prod_i [lo_i, hi_i] in R^m together with the L^p exponent of the
/// control topology (p may be +inf).
struct ControlSet {
  std::vector<std::pair<double, double>> box;
  double p = std::numeric_limits<double>::infinity();

  [[nodiscard]] int dim() const { return static_cast<int>(box.size()); }
  void validate() const;
  [[nodiscard]] bool contains(std::span<const double> w, double tol = 0.0) const;
  /// Componentwise clamp onto M.
  void project(std::span<double> w) const;
  [[nodiscard]] std::vector<double> center() const;
};

/// R^m valued control sampled on every grid node, node-major.
struct ControlField {
  int components = 0;
  std::vector<double> values;

  static ControlField constant(const QuadratureGrid& grid, std::span<const double> w);
  [[nodiscard]] std::span<const double> at(std::size_t node) const {
    return {values.data() + node * static_cast<std::size_t>(components),
            static_cast<std::size_t>(components)};
  }
  [[nodiscard]] std::size_t nodes() const {
    return components == 0 ? 0 : values.size() / static_cast<std::size_t>(components);
  }
  /// True when every node carries the same value; `value` receives it.
  [[nodiscard]] bool is_constant(std::vector<double>* value = nullptr) const;
};

ControlField operator-(const ControlField& a, const ControlField& b);

struct PointArgs {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  double u = 0.0;
  double v = 0.0;
  std::span<const double> w;
  /// Auxiliary x-dependent data (sampled forcing fields), see auxiliary_fields().
  std::span<const double> aux;
};

struct PointValue {
  double g = 0.0;
  double g_u = 0.0;
  double g_v = 0.0;
};

/// Declared metadata used by the validators.
struct NonlinearityTraits {
  /// Growth exponent s of (A2).
  double growth = 2.0;
  int control_dim = 2;
  /// Upper bound xi_1 on G_uu (concavity certificate).
  double concavity_bound = 0.0;
  /// Upper bound xi_2 on -G_vv (convexity certificate).
  double convexity_bound = 0.0;
  /// Constant b of the lower bound G >= -b v^2 - beta_1(x) v - gamma_1(x).
  double lower_quadratic = 0.0;
  /// Constant B of the upper bound G <= B u^2 + beta_2(x) u + gamma_2(x).
  double upper_quadratic = 0.0;
  bool depends_on_u = true;
};

class Nonlinearity {
 public:
  virtual ~Nonlinearity() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual const NonlinearityTraits& traits() const = 0;
  [[nodiscard]] virtual PointValue eval(const PointArgs& args) const = 0;

  /// Linear-in-control form G = G1(x,u,v) + G2(x,u,v) . w.
  [[nodiscard]] virtual bool has_split() const { return false; }
  /// Returns G1 and writes G2 (size m). Only called when has_split().
  virtual double eval_split(const PointArgs& args, std::span<double> g2) const;

  /// Fields whose grid samples are passed in PointArgs::aux, in order.
  [[nodiscard]] virtual std::vector<SpectralField> auxiliary_fields() const { return {}; }
  /// Scalar parameters, for result metadata.
  [[nodiscard]] virtual std::map<std::string, double> parameters() const { return {}; }
};

using NonlinearityPtr = std::shared_ptr<const Nonlinearity>;

/// Evaluate and reject non-finite output.
PointValue eval_pointwise(const Nonlinearity& nl, const PointArgs& args);

/// |t|^s, the even extension used for non-integer powers.
double abs_pow(double t, double s);
/// d/dt |t|^s = s sign(t) |t|^{s-1}.
double abs_pow_deriv(double t, double s);

/// Example 1: G = (b1/2)u^2 - (b2/2)v^2 + (w1 + w2)uv + l1 u + l2 v.
/// The constructor does not check b_i against the principal eigenvalue; use
/// make_linear_coupled for the checked form.
class LinearCoupled final : public Nonlinearity {
 public:
  LinearCoupled(double beta1, double beta2, SpectralField l1, SpectralField l2);

  [[nodiscard]] std::string name() const override { return "linear_coupled"; }
  [[nodiscard]] const NonlinearityTraits& traits() const override { return traits_; }
  [[nodiscard]] PointValue eval(const PointArgs& args) const override;
  [[nodiscard]] bool has_split() const override { return true; }
  double eval_split(const PointArgs& args, std::span<double> g2) const override;
  [[nodiscard]] std::vector<SpectralField> auxiliary_fields() const override { return {l1_, l2_}; }
  [[nodiscard]] std::map<std::string, double> parameters() const override;

  [[nodiscard]] double beta1() const { return beta1_; }
  [[nodiscard]] double beta2() const { return beta2_; }
  [[nodiscard]] const SpectralField& l1() const { return l1_; }
  [[nodiscard]] const SpectralField& l2() const { return l2_; }

 private:
  double beta1_;
  double beta2_;
  SpectralField l1_;
  SpectralField l2_;
  NonlinearityTraits traits_;
};

/// Example 2: G = (b/2)u^2 - (a/2)v^2 + |x|^2 w1 (|v|^s - |u|^s)
///              - |x| w2 (u + v) + uv.
class PowerCoupled final : public Nonlinearity {
 public:
  PowerCoupled(double a, double b, double s);

  [[nodiscard]] std::string name() const override { return "power_coupled"; }
  [[nodiscard]] const NonlinearityTraits& traits() const override { return traits_; }
  [[nodiscard]] PointValue eval(const PointArgs& args) const override;
  [[nodiscard]] bool has_split() const override { return true; }
  double eval_split(const PointArgs& args, std::span<double> g2) const override;
  [[nodiscard]] std::map<std::string, double> parameters() const override;

 private:
  double a_;
  double b_;
  double s_;
  NonlinearityTraits traits_;
};

/// Quadratic action with the control entering as distributed sources:
/// G = (b1/2)u^2 - (b2/2)v^2 + kappa uv + l1 u + l2 v + sum_i w_i (mu_i u + nu_i v).
class QuadraticSplit final : public Nonlinearity {
 public:
  QuadraticSplit(double beta1, double beta2, double kappa, SpectralField l1, SpectralField l2,
                 std::vector<double> mu, std::vector<double> nu);

  [[nodiscard]] std::string name() const override { return "quadratic_split"; }
  [[nodiscard]] const NonlinearityTraits& traits() const override { return traits_; }
  [[nodiscard]] PointValue eval(const PointArgs& args) const override;
  [[nodiscard]] bool has_split() const override { return true; }
  double eval_split(const PointArgs& args, std::span<double> g2) const override;
  [[nodiscard]] std::vector<SpectralField> auxiliary_fields() const override { return {l1_, l2_}; }
  [[nodiscard]] std::map<std::string, double> parameters() const override;

 private:
  double beta1_;
  double beta2_;
  double kappa_;
  SpectralField l1_;
  SpectralField l2_;
  std::vector<double> mu_;
  std::vector<double> nu_;
  NonlinearityTraits traits_;
};

/// u-independent term for the single-equation (min-only) problem:
/// G = (q/4)|v|^4 - (beta/2)v^2 - (l(x) + w1) v,   m = 1.
class SingleEquation final : public Nonlinearity {
 public:
  SingleEquation(double quartic, double beta, SpectralField l);

  [[nodiscard]] std::string name() const override { return "single_equation"; }
  [[nodiscard]] const NonlinearityTraits& traits() const override { return traits_; }
  [[nodiscard]] PointValue eval(const PointArgs& args) const override;
  [[nodiscard]] bool has_split() const override { return true; }
  double eval_split(const PointArgs& args, std::span<double> g2) const override;
  [[nodiscard]] std::vector<SpectralField> auxiliary_fields() const override { return {l_}; }
  [[nodiscard]] std::map<std::string, double> parameters() const override;

 private:
  double quartic_;
  double beta_;
  SpectralField l_;
  NonlinearityTraits traits_;
};

/// User extension built from callables.
class FunctionNonlinearity final : public Nonlinearity {
 public:
  using EvalFn = std::function<PointValue(const PointArgs&)>;
  using SplitFn = std::function<double(const PointArgs&, std::span<double>)>;

  FunctionNonlinearity(std::string name, NonlinearityTraits traits, EvalFn eval,
                       SplitFn split = {}, std::vector<SpectralField> aux = {});

  [[nodiscard]] std::string name() const override { return name_; }
  [[nodiscard]] const NonlinearityTraits& traits() const override { return traits_; }
  [[nodiscard]] PointValue eval(const PointArgs& args) const override { return eval_(args); }
  [[nodiscard]] bool has_split() const override { return static_cast<bool>(split_); }
  double eval_split(const PointArgs& args, std::span<double> g2) const override;
  [[nodiscard]] std::vector<SpectralField> auxiliary_fields() const override { return aux_; }

 private:
  std::string name_;
  NonlinearityTraits traits_;
  EvalFn eval_;
  SplitFn split_;
  std::vector<SpectralField> aux_;
};

struct ValidationCheck {
  std::string id;
  std::string description;
  bool passed = true;
  std::string detail;
  /// Checks of the linear-in-control hypotheses only gate weak-topology runs.
  bool split_only = false;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::vector<std::string> notes;

  /// All general checks (A2)-(A5) and sampling checks pass.
  [[nodiscard]] bool passed() const;
  /// passed() and the (A2') checks pass.
  [[nodiscard]] bool split_passed() const;
  [[nodiscard]] std::vector<ValidationCheck> failures() const;
  [[nodiscard]] const ValidationCheck* find(const std::string& id) const;
  [[nodiscard]] std::string summary() const;
};

/// Checks the decidable subset of the hypotheses: exponent ranges, strictness
/// of the declared quadratic bounds against rho_1^{alpha/2}, the concavity /
/// convexity certificates, and sampled derivative / split / curvature
/// consistency (deterministic sampling). Never throws on a violation.
ValidationReport validate_assumptions(const Nonlinearity& nl, const ControlSet& controls,
                                      double alpha, const BoxDomain& domain,
                                      int samples = 100);

using ParamMap = std::map<std::string, std::string>;
using NonlinearityFactory =
    std::function<NonlinearityPtr(const ParamMap&, const BasisPtr&, double alpha)>;

/// Numeric parameter lookup; missing or empty gives the fallback.
double param_double(const ParamMap& params, const std::string& key, double fallback);

/// Parses "k1,k2,k3:c; k1,k2,k3:c; ..." into a field on `basis`.
SpectralField parse_mode_list(const std::string& text, const BasisPtr& basis);

/// make_* enforce the strict eigenvalue inequalities of the built-ins.
NonlinearityPtr make_linear_coupled(double beta1, double beta2, SpectralField l1, SpectralField l2,
                                    double alpha);
NonlinearityPtr make_power_coupled(double a, double b, double s, const BoxDomain& domain,
                                   double alpha);

/// Registry of named nonlinearities ("linear_coupled", "power_coupled",
/// "quadratic_split", "single_equation" are built in).
void register_nonlinearity(const std::string& name, NonlinearityFactory factory);
NonlinearityPtr make_nonlinearity(const std::string& name, const ParamMap& params,
                                  const BasisPtr& basis, double alpha);
std::vector<std::string> registered_nonlinearities();

}  // namespace fracsaddle
