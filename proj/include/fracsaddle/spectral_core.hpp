#pragma once

// Dirichlet-Laplacian eigenbasis on boxes (0, side)^n, fractional powers,
// grid transforms and norms.
//
// Basis functions are L2-orthonormal:
//   phi_k(x) = (2/side)^{n/2} prod_i sin(k_i pi x_i / side),
//   rho_k    = sum_i (k_i pi / side)^2.
// A SpectralField stores coefficients over phi_k in lexicographic mode order
// (last axis fastest).

#include <array>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

namespace fracsaddle {

struct BoxDomain {
  int dim = 3;
  double side = std::numbers::pi;

  void validate() const;
  [[nodiscard]] double volume() const;
};

using MultiIndex = std::array<int, 3>;

class SpectralBasis {
 public:
  SpectralBasis(BoxDomain domain, int cutoff);

  [[nodiscard]] const BoxDomain& domain() const { return domain_; }
  [[nodiscard]] int dim() const { return domain_.dim; }
  [[nodiscard]] int cutoff() const { return cutoff_; }
  [[nodiscard]] std::size_t size() const { return modes_.size(); }
  [[nodiscard]] const MultiIndex& mode(std::size_t i) const { return modes_[i]; }
  [[nodiscard]] std::span<const MultiIndex> modes() const { return modes_; }
  [[nodiscard]] std::span<const double> eigenvalues() const { return eigenvalues_; }
  [[nodiscard]] double eigenvalue(std::size_t i) const { return eigenvalues_[i]; }
  /// rho_1 = n (pi/side)^2.
  [[nodiscard]] double principal_eigenvalue() const;
  /// Position of a multi-index in the lexicographic order. Throws if outside the cutoff.
  [[nodiscard]] std::size_t index_of(const MultiIndex& k) const;
  /// phi_k evaluated at an arbitrary point (first dim() entries of x used).
  [[nodiscard]] double eval_basis(std::size_t i, std::span<const double> x) const;

 private:
  BoxDomain domain_;
  int cutoff_;
  std::vector<MultiIndex> modes_;
  std::vector<double> eigenvalues_;
};

using BasisPtr = std::shared_ptr<const SpectralBasis>;

/// All K^n modes of the box with their Laplacian eigenvalues, lexicographic.
BasisPtr enumerate_modes(const BoxDomain& domain, int cutoff);

struct SpectralField {
  BasisPtr basis;
  std::vector<double> coeffs;

  SpectralField() = default;
  explicit SpectralField(BasisPtr b);
  SpectralField(BasisPtr b, std::vector<double> c);

  [[nodiscard]] std::size_t size() const { return coeffs.size(); }
  /// Field equal to amplitude * phi_k.
  static SpectralField mode(BasisPtr b, const MultiIndex& k, double amplitude = 1.0);

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);
  /// this += s * other
  SpectralField& axpy(double s, const SpectralField& other);

  [[nodiscard]] double eval_at(std::span<const double> x) const;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

/// Tensor trapezoidal grid with N interior nodes per axis plus the two
/// boundary nodes: x_j = j side/(N+1), j = 0..N+1, weights h (interior) and
/// h/2 (boundary). Sine-basis fields vanish on the boundary, so for them the
/// rule reduces to the equal-weight interior rule and discrete sine
/// orthogonality holds exactly for modes k <= N.
class QuadratureGrid {
 public:
  QuadratureGrid(BoxDomain domain, int interior_nodes_per_axis);

  [[nodiscard]] const BoxDomain& domain() const { return domain_; }
  [[nodiscard]] int dim() const { return domain_.dim; }
  [[nodiscard]] int interior_nodes_per_axis() const { return interior_; }
  [[nodiscard]] int points_per_axis() const { return interior_ + 2; }
  [[nodiscard]] std::size_t size() const { return weights_.size(); }
  [[nodiscard]] double spacing() const { return spacing_; }
  [[nodiscard]] std::span<const double> weights() const { return weights_; }
  [[nodiscard]] double weight(std::size_t node) const { return weights_[node]; }
  /// Per-axis point index of a flat node index (last axis fastest).
  [[nodiscard]] std::array<int, 3> axis_indices(std::size_t node) const;
  /// Coordinates of a node; unused axes are zero.
  [[nodiscard]] const std::array<double, 3>& coords(std::size_t node) const { return coords_[node]; }
  [[nodiscard]] double axis_coord(int j) const { return spacing_ * j; }
  [[nodiscard]] bool on_boundary(std::size_t node) const;

 private:
  BoxDomain domain_;
  int interior_;
  double spacing_;
  std::vector<double> weights_;
  std::vector<std::array<double, 3>> coords_;
};

using GridPtr = std::shared_ptr<const QuadratureGrid>;

/// Separable sine synthesis/analysis between a basis and a grid.
class SineTransform {
 public:
  SineTransform(BasisPtr basis, GridPtr grid);

  [[nodiscard]] const BasisPtr& basis() const { return basis_; }
  [[nodiscard]] const GridPtr& grid() const { return grid_; }

  /// Values at every grid node (zero on the boundary).
  [[nodiscard]] std::vector<double> synthesize(const SpectralField& field) const;
  void synthesize(std::span<const double> coeffs, std::span<double> values) const;
  /// Quadrature projections <f, phi_k>, i.e. the discrete L2 coefficients.
  [[nodiscard]] SpectralField analyze(std::span<const double> values) const;
  void analyze(std::span<const double> values, std::span<double> coeffs) const;

 private:
  BasisPtr basis_;
  GridPtr grid_;
  // table_[k-1][j] = sqrt(2/side) sin(k pi x_j / side), j = 0..N+1
  std::vector<std::vector<double>> table_;
  // synthesis (N+2) x K and weighted analysis K x (N+2) matrices
  std::vector<std::vector<double>> synth_;
  std::vector<std::vector<double>> analysis_;
};

/// b_k = a_k rho_k^sigma.
SpectralField apply_frac_power(const SpectralField& field, double sigma);

double l2_norm(const SpectralField& field);
/// sqrt(sum a_k^2 rho_k^{alpha/2}); alpha in (1,2).
double h_alpha_norm(const SpectralField& field, double alpha);
/// Inner product sum rho_k^{alpha/2} a_k b_k of H_0^{alpha/2}.
double h_alpha_inner(const SpectralField& a, const SpectralField& b, double alpha);
/// sum a_k^2 rho_k^{alpha/2} / sum a_k^2; rejects the zero field.
double poincare_ratio(const SpectralField& field, double alpha);

/// (sum_j w_j |v_j|^p)^{1/p}, or max |v_j| when p is infinite. Rejects p < 1.
double lp_norm_on_grid(std::span<const double> values, const QuadratureGrid& grid, double p);
/// L^p norm of an R^m valued grid function stored node-major (m entries per
/// node), with the Euclidean norm pointwise.
double lp_norm_on_grid(std::span<const double> values, int components, const QuadratureGrid& grid,
                       double p);
/// Quadrature integral sum_j w_j v_j.
double integrate(std::span<const double> values, const QuadratureGrid& grid);

void validate_alpha(double alpha);

}  // namespace fracsaddle
