#include "fracsaddle/spectral_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fracsaddle/errors.hpp"

namespace fracsaddle {

void BoxDomain::validate() const {
  if (dim < 1 || dim > 3) {
    throw ValidationError("BoxDomain: dim must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
  }
  if (!(side > 0.0) || !std::isfinite(side)) {
    throw ValidationError("BoxDomain: side must be positive");
  }
}

double BoxDomain::volume() const { return std::pow(side, dim); }

SpectralBasis::SpectralBasis(BoxDomain domain, int cutoff) : domain_(domain), cutoff_(cutoff) {
  domain_.validate();
  if (cutoff < 1) throw ValidationError("enumerate_modes: cutoff must be >= 1");
  const int n = domain_.dim;
  std::size_t count = 1;
  for (int d = 0; d < n; ++d) count *= static_cast<std::size_t>(cutoff);
  modes_.reserve(count);
  eigenvalues_.reserve(count);
  const double scale = std::numbers::pi / domain_.side;
  MultiIndex k{1, 1, 1};
  for (int d = n; d < 3; ++d) k[d] = 0;
  for (std::size_t idx = 0; idx < count; ++idx) {
    modes_.push_back(k);
    double rho = 0.0;
    for (int d = 0; d < n; ++d) rho += (k[d] * scale) * (k[d] * scale);
    eigenvalues_.push_back(rho);
    // odometer, last axis fastest
    for (int d = n - 1; d >= 0; --d) {
      if (k[d] < cutoff) {
        ++k[d];
        break;
      }
      k[d] = 1;
    }
  }
}

double SpectralBasis::principal_eigenvalue() const {
  const double scale = std::numbers::pi / domain_.side;
  return domain_.dim * scale * scale;
}

std::size_t SpectralBasis::index_of(const MultiIndex& k) const {
  std::size_t idx = 0;
  for (int d = 0; d < domain_.dim; ++d) {
    if (k[d] < 1 || k[d] > cutoff_) {
      throw ValidationError("SpectralBasis: mode index outside cutoff");
    }
    idx = idx * static_cast<std::size_t>(cutoff_) + static_cast<std::size_t>(k[d] - 1);
  }
  return idx;
}

double SpectralBasis::eval_basis(std::size_t i, std::span<const double> x) const {
  const double norm = std::sqrt(2.0 / domain_.side);
  const double scale = std::numbers::pi / domain_.side;
  double value = 1.0;
  for (int d = 0; d < domain_.dim; ++d) value *= norm * std::sin(modes_[i][d] * scale * x[d]);
  return value;
}

BasisPtr enumerate_modes(const BoxDomain& domain, int cutoff) {
  return std::make_shared<const SpectralBasis>(domain, cutoff);
}

SpectralField::SpectralField(BasisPtr b) : basis(std::move(b)), coeffs(basis->size(), 0.0) {}

SpectralField::SpectralField(BasisPtr b, std::vector<double> c)
    : basis(std::move(b)), coeffs(std::move(c)) {
  if (coeffs.size() != basis->size()) {
    throw ValidationError("SpectralField: coefficient count does not match basis");
  }
}

SpectralField SpectralField::mode(BasisPtr b, const MultiIndex& k, double amplitude) {
  SpectralField f(b);
  f.coeffs[b->index_of(k)] = amplitude;
  return f;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) { return axpy(1.0, other); }
SpectralField& SpectralField::operator-=(const SpectralField& other) { return axpy(-1.0, other); }

SpectralField& SpectralField::operator*=(double s) {
  for (double& c : coeffs) c *= s;
  return *this;
}

SpectralField& SpectralField::axpy(double s, const SpectralField& other) {
  if (other.coeffs.size() != coeffs.size()) {
    throw ValidationError("SpectralField: size mismatch");
  }
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += s * other.coeffs[i];
  return *this;
}

double SpectralField::eval_at(std::span<const double> x) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] != 0.0) sum += coeffs[i] * basis->eval_basis(i, x);
  }
  return sum;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

QuadratureGrid::QuadratureGrid(BoxDomain domain, int interior_nodes_per_axis)
    : domain_(domain), interior_(interior_nodes_per_axis) {
  domain_.validate();
  if (interior_ < 1) throw ValidationError("QuadratureGrid: need at least one interior node");
  spacing_ = domain_.side / (interior_ + 1);
  const int p = points_per_axis();
  std::vector<double> w1(static_cast<std::size_t>(p), spacing_);
  w1.front() = w1.back() = 0.5 * spacing_;
  std::size_t count = 1;
  for (int d = 0; d < domain_.dim; ++d) count *= static_cast<std::size_t>(p);
  weights_.resize(count);
  coords_.resize(count);
  for (std::size_t node = 0; node < count; ++node) {
    const auto idx = axis_indices(node);
    double w = 1.0;
    for (int d = 0; d < domain_.dim; ++d) w *= w1[static_cast<std::size_t>(idx[d])];
    weights_[node] = w;
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int d = 0; d < domain_.dim; ++d) x[d] = spacing_ * idx[d];
    coords_[node] = x;
  }
}

std::array<int, 3> QuadratureGrid::axis_indices(std::size_t node) const {
  std::array<int, 3> idx{0, 0, 0};
  const auto p = static_cast<std::size_t>(points_per_axis());
  for (int d = domain_.dim - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(node % p);
    node /= p;
  }
  return idx;
}

bool QuadratureGrid::on_boundary(std::size_t node) const {
  const auto idx = axis_indices(node);
  for (int d = 0; d < domain_.dim; ++d) {
    if (idx[d] == 0 || idx[d] == interior_ + 1) return true;
  }
  return false;
}

namespace {

// out[o][r][i] = sum_c mat[r][c] in[o][c][i] along `axis` (row-major shape).
void transform_axis(std::span<const double> in, std::array<std::size_t, 3> shape, int axis,
                    const std::vector<std::vector<double>>& mat, std::vector<double>& out) {
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (int d = 0; d < axis; ++d) outer *= shape[d];
  for (int d = axis + 1; d < 3; ++d) inner *= shape[d];
  const std::size_t in_len = shape[axis];
  const std::size_t out_len = mat.size();
  out.assign(outer * out_len * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t r = 0; r < out_len; ++r) {
      const auto& row = mat[r];
      double* dst = &out[(o * out_len + r) * inner];
      for (std::size_t c = 0; c < in_len; ++c) {
        const double m = row[c];
        if (m == 0.0) continue;
        const double* src = &in[(o * in_len + c) * inner];
        for (std::size_t i = 0; i < inner; ++i) dst[i] += m * src[i];
      }
    }
  }
}

}  // namespace

SineTransform::SineTransform(BasisPtr basis, GridPtr grid)
    : basis_(std::move(basis)), grid_(std::move(grid)) {
  if (basis_->dim() != grid_->dim() || basis_->domain().side != grid_->domain().side) {
    throw ValidationError("SineTransform: basis and grid live on different domains");
  }
  if (basis_->cutoff() > grid_->interior_nodes_per_axis()) {
    throw ValidationError("SineTransform: cutoff K exceeds interior nodes N");
  }
  const double side = basis_->domain().side;
  const double norm = std::sqrt(2.0 / side);
  const int p = grid_->points_per_axis();
  const int n_interior = grid_->interior_nodes_per_axis();
  table_.assign(static_cast<std::size_t>(basis_->cutoff()),
                std::vector<double>(static_cast<std::size_t>(p), 0.0));
  for (int k = 1; k <= basis_->cutoff(); ++k) {
    for (int j = 1; j <= n_interior; ++j) {
      // sin(k j pi/(N+1)) evaluated with the argument reduced mod 2(N+1)
      const int r = (k * j) % (2 * (n_interior + 1));
      table_[k - 1][j] = norm * std::sin(std::numbers::pi * r / (n_interior + 1));
    }
  }
  const auto kk = static_cast<std::size_t>(basis_->cutoff());
  const auto pp = static_cast<std::size_t>(p);
  const double h = grid_->spacing();
  // interior weight folded into the analysis matrix; boundary columns of the table vanish
  synth_.assign(pp, std::vector<double>(kk));
  analysis_.assign(kk, std::vector<double>(pp));
  for (std::size_t k = 0; k < kk; ++k) {
    for (std::size_t j = 0; j < pp; ++j) {
      synth_[j][k] = table_[k][j];
      analysis_[k][j] = h * table_[k][j];
    }
  }
}

void SineTransform::synthesize(std::span<const double> coeffs, std::span<double> values) const {
  const int n = basis_->dim();
  const auto kk = static_cast<std::size_t>(basis_->cutoff());
  const auto pp = static_cast<std::size_t>(grid_->points_per_axis());
  std::array<std::size_t, 3> shape{1, 1, 1};
  for (int d = 0; d < n; ++d) shape[d] = kk;
  std::vector<double> cur(coeffs.begin(), coeffs.end());
  std::vector<double> next;
  // last axis first keeps the long contiguous loops on the largest pass
  for (int axis = n - 1; axis >= 0; --axis) {
    transform_axis(cur, shape, axis, synth_, next);
    shape[axis] = pp;
    cur.swap(next);
  }
  std::copy(cur.begin(), cur.end(), values.begin());
}

std::vector<double> SineTransform::synthesize(const SpectralField& field) const {
  std::vector<double> values(grid_->size());
  synthesize(field.coeffs, values);
  return values;
}

void SineTransform::analyze(std::span<const double> values, std::span<double> coeffs) const {
  const int n = basis_->dim();
  const auto kk = static_cast<std::size_t>(basis_->cutoff());
  const auto pp = static_cast<std::size_t>(grid_->points_per_axis());
  std::array<std::size_t, 3> shape{1, 1, 1};
  for (int d = 0; d < n; ++d) shape[d] = pp;
  std::vector<double> cur(values.begin(), values.end());
  std::vector<double> next;
  for (int axis = 0; axis < n; ++axis) {
    transform_axis(cur, shape, axis, analysis_, next);
    shape[axis] = kk;
    cur.swap(next);
  }
  std::copy(cur.begin(), cur.end(), coeffs.begin());
}

SpectralField SineTransform::analyze(std::span<const double> values) const {
  SpectralField f(basis_);
  analyze(values, f.coeffs);
  return f;
}

void validate_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw ValidationError("alpha must lie in the open interval (1,2)");
  }
}

SpectralField apply_frac_power(const SpectralField& field, double sigma) {
  SpectralField out = field;
  const auto rho = field.basis->eigenvalues();
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] *= std::pow(rho[i], sigma);
  return out;
}

double l2_norm(const SpectralField& field) {
  double sum = 0.0;
  for (double c : field.coeffs) sum += c * c;
  return std::sqrt(sum);
}

double h_alpha_inner(const SpectralField& a, const SpectralField& b, double alpha) {
  const auto rho = a.basis->eigenvalues();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
    sum += std::pow(rho[i], alpha / 2.0) * a.coeffs[i] * b.coeffs[i];
  }
  return sum;
}

double h_alpha_norm(const SpectralField& field, double alpha) {
  validate_alpha(alpha);
  return std::sqrt(h_alpha_inner(field, field, alpha));
}

double poincare_ratio(const SpectralField& field, double alpha) {
  validate_alpha(alpha);
  double num = 0.0;
  double den = 0.0;
  const auto rho = field.basis->eigenvalues();
  for (std::size_t i = 0; i < field.coeffs.size(); ++i) {
    const double c2 = field.coeffs[i] * field.coeffs[i];
    num += c2 * std::pow(rho[i], alpha / 2.0);
    den += c2;
  }
  if (den == 0.0) throw ValidationError("poincare_ratio: zero field");
  return num / den;
}

double integrate(std::span<const double> values, const QuadratureGrid& grid) {
  const auto w = grid.weights();
  double sum = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) sum += w[j] * values[j];
  return sum;
}

double lp_norm_on_grid(std::span<const double> values, int components, const QuadratureGrid& grid,
                       double p) {
  if (!(p >= 1.0)) throw ValidationError("lp_norm_on_grid: p must be >= 1");
  const auto m = static_cast<std::size_t>(components);
  if (values.size() != grid.size() * m) {
    throw ValidationError("lp_norm_on_grid: value count does not match grid");
  }
  const auto w = grid.weights();
  const bool sup = std::isinf(p);
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    double mag2 = 0.0;
    for (std::size_t c = 0; c < m; ++c) mag2 += values[j * m + c] * values[j * m + c];
    const double mag = std::sqrt(mag2);
    if (sup) {
      acc = std::max(acc, mag);
    } else if (mag > 0.0) {
      acc += w[j] * (p == 2.0 ? mag2 : std::pow(mag, p));
    }
  }
  return sup ? acc : std::pow(acc, 1.0 / p);
}

double lp_norm_on_grid(std::span<const double> values, const QuadratureGrid& grid, double p) {
  return lp_norm_on_grid(values, 1, grid, p);
}

}  // namespace fracsaddle
