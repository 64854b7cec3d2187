#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "fracsaddle/errors.hpp"
#include "fracsaddle/special_functions.hpp"
#include "fracsaddle/spectral_core.hpp"

namespace fs = fracsaddle;
using std::numbers::pi;

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

// 50-digit evaluation of the Sobolev constant formula.
double sobolev_oracle(double alpha_d, int n) {
  const Big alpha(alpha_d);
  const Big nn(n);
  const Big bpi = boost::math::constants::pi<Big>();
  using boost::math::tgamma;
  using boost::multiprecision::pow;
  const Big num = 2 * pow(bpi, alpha / 2) * tgamma((nn + alpha) / 2) * tgamma((2 - alpha) / 2) *
                  pow(tgamma(nn / 2), alpha / nn);
  const Big den = tgamma(alpha / 2) * tgamma((nn - alpha) / 2) * pow(tgamma(nn), alpha / 2);
  return static_cast<double>(num / den);
}

fs::SpectralField random_field(const fs::BasisPtr& b, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  fs::SpectralField f(b);
  for (double& c : f.coeffs) c = g(rng);
  return f;
}

// Direct double sum over modes and nodes.
std::vector<double> brute_synthesize(const fs::SpectralField& f, const fs::QuadratureGrid& grid) {
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto x = grid.coords(j);
    for (std::size_t k = 0; k < f.size(); ++k) out[j] += f.coeffs[k] * f.basis->eval_basis(k, x);
  }
  return out;
}

}  // namespace

TEST(EnumerateModes, CubeSingleMode) {
  auto b = fs::enumerate_modes({3, pi}, 1);
  ASSERT_EQ(b->size(), 1u);
  EXPECT_EQ(b->mode(0), (fs::MultiIndex{1, 1, 1}));
  EXPECT_NEAR(b->eigenvalue(0), 3.0, 1e-14);
}

TEST(EnumerateModes, IntervalEigenvalues) {
  auto b = fs::enumerate_modes({1, pi}, 3);
  ASSERT_EQ(b->size(), 3u);
  EXPECT_NEAR(b->eigenvalue(0), 1.0, 1e-14);
  EXPECT_NEAR(b->eigenvalue(1), 4.0, 1e-14);
  EXPECT_NEAR(b->eigenvalue(2), 9.0, 1e-14);
}

TEST(EnumerateModes, SquareLexicographic) {
  auto b = fs::enumerate_modes({2, pi}, 2);
  ASSERT_EQ(b->size(), 4u);
  EXPECT_EQ(b->mode(0)[0], 1);
  EXPECT_EQ(b->mode(0)[1], 1);
  EXPECT_EQ(b->mode(1)[0], 1);
  EXPECT_EQ(b->mode(1)[1], 2);
  EXPECT_EQ(b->mode(2)[0], 2);
  double lo = 1e300;
  for (double r : b->eigenvalues()) lo = std::min(lo, r);
  EXPECT_NEAR(lo, 2.0, 1e-14);
  EXPECT_NEAR(b->principal_eigenvalue(), 2.0, 1e-14);
  EXPECT_EQ(b->index_of({2, 1, 0}), 2u);
}

TEST(EnumerateModes, CountAndScaling) {
  auto b = fs::enumerate_modes({3, 2.0}, 4);
  EXPECT_EQ(b->size(), 64u);
  EXPECT_NEAR(b->principal_eigenvalue(), 3.0 * (pi / 2.0) * (pi / 2.0), 1e-13);
}

TEST(EnumerateModes, Rejects) {
  EXPECT_THROW(fs::enumerate_modes({3, pi}, 0), fs::ValidationError);
  EXPECT_THROW(fs::enumerate_modes({4, pi}, 2), fs::ValidationError);
  EXPECT_THROW(fs::enumerate_modes({2, -1.0}, 2), fs::ValidationError);
}

TEST(FracPower, PrincipalModeOnCube) {
  auto b = fs::enumerate_modes({3, pi}, 3);
  for (double alpha : {1.1, 1.5, 1.9}) {
    const auto phi1 = fs::SpectralField::mode(b, {1, 1, 1});
    const auto out = fs::apply_frac_power(phi1, alpha / 2.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_NEAR(out.coeffs[i], i == 0 ? std::pow(3.0, alpha / 2.0) : 0.0, 1e-12);
    }
  }
}

TEST(FracPower, ClassicalLaplacianAndInverse) {
  auto b = fs::enumerate_modes({1, pi}, 5);
  const auto f = fs::SpectralField::mode(b, {4, 0, 0}, 2.0);
  EXPECT_NEAR(fs::apply_frac_power(f, 1.0).coeffs[3], 32.0, 1e-12);

  std::mt19937_64 rng(3);
  auto b3 = fs::enumerate_modes({3, pi}, 4);
  const auto g = random_field(b3, rng);
  const auto back = fs::apply_frac_power(fs::apply_frac_power(g, 0.7), -0.7);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(back.coeffs[i], g.coeffs[i], 1e-12);
}

TEST(FracPower, Semigroup) {
  std::mt19937_64 rng(11);
  auto b = fs::enumerate_modes({2, pi}, 6);
  const auto f = random_field(b, rng);
  const auto lhs = fs::apply_frac_power(fs::apply_frac_power(f, 0.3), 0.45);
  const auto rhs = fs::apply_frac_power(f, 0.75);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_NEAR(lhs.coeffs[i], rhs.coeffs[i], 1e-12 * (1.0 + std::abs(rhs.coeffs[i])));
  }
}

TEST(HAlphaNorm, Examples) {
  auto b = fs::enumerate_modes({3, pi}, 2);
  const double alpha = 1.5;
  EXPECT_NEAR(fs::h_alpha_norm(fs::SpectralField::mode(b, {1, 1, 1}), alpha), std::pow(3.0, 0.375),
              1e-14);
  EXPECT_EQ(fs::h_alpha_norm(fs::SpectralField(b), alpha), 0.0);
  const auto f = fs::SpectralField::mode(b, {2, 1, 2}, -1.7);
  EXPECT_NEAR(fs::h_alpha_norm(f, alpha), 1.7 * std::pow(9.0, alpha / 4.0), 1e-13);
  EXPECT_THROW(fs::h_alpha_norm(f, 2.0), fs::ValidationError);
  EXPECT_THROW(fs::h_alpha_norm(f, 1.0), fs::ValidationError);
}

TEST(HAlphaNorm, EqualsL2OfHalfPower) {
  std::mt19937_64 rng(5);
  auto b = fs::enumerate_modes({3, pi}, 4);
  const auto f = random_field(b, rng);
  for (double alpha : {1.2, 1.7}) {
    EXPECT_NEAR(fs::h_alpha_norm(f, alpha), fs::l2_norm(fs::apply_frac_power(f, alpha / 4.0)),
                1e-12);
  }
}

TEST(HAlphaNorm, ApproachesH1Seminorm) {
  std::mt19937_64 rng(6);
  auto b = fs::enumerate_modes({2, pi}, 5);
  const auto f = random_field(b, rng);
  double h1 = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) h1 += f.coeffs[i] * f.coeffs[i] * b->eigenvalue(i);
  double prev = 1e300;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6}) {
    const double h = fs::h_alpha_norm(f, 2.0 - eps);
    const double gap = std::abs(h * h - h1);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev / h1, 1e-5);
}

TEST(Transforms, MatchesDirectSummation) {
  std::mt19937_64 rng(17);
  for (int n : {1, 2, 3}) {
    auto b = fs::enumerate_modes({n, pi}, 4);
    fs::QuadratureGrid grid({n, pi}, 6);
    fs::SineTransform tr(b, std::make_shared<const fs::QuadratureGrid>(grid));
    const auto f = random_field(b, rng);
    const auto fast = tr.synthesize(f);
    const auto slow = brute_synthesize(f, grid);
    ASSERT_EQ(fast.size(), slow.size());
    for (std::size_t j = 0; j < fast.size(); ++j) EXPECT_NEAR(fast[j], slow[j], 1e-12);
  }
}

TEST(Transforms, RoundTrip) {
  std::mt19937_64 rng(19);
  for (int n : {1, 2, 3}) {
    for (int N : {4, 5, 9}) {
      auto b = fs::enumerate_modes({n, 2.5}, 4);
      auto grid = std::make_shared<const fs::QuadratureGrid>(fs::BoxDomain{n, 2.5}, N);
      fs::SineTransform tr(b, grid);
      const auto f = random_field(b, rng);
      const auto back = tr.analyze(tr.synthesize(f));
      for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(back.coeffs[i], f.coeffs[i], 1e-12);
    }
  }
}

TEST(Transforms, PrincipalModeValues) {
  auto b = fs::enumerate_modes({1, pi}, 1);
  auto grid = std::make_shared<const fs::QuadratureGrid>(fs::BoxDomain{1, pi}, 3);
  fs::SineTransform tr(b, grid);
  const auto vals = tr.synthesize(fs::SpectralField::mode(b, {1, 0, 0}));
  ASSERT_EQ(vals.size(), 5u);
  EXPECT_EQ(vals[0], 0.0);
  EXPECT_EQ(vals[4], 0.0);
  for (int j = 1; j <= 3; ++j) {
    EXPECT_NEAR(vals[j], std::sin(j * pi / 4.0) * std::sqrt(2.0 / pi), 1e-15);
  }
  // quadrature of phi_1^2
  std::vector<double> sq(vals.size());
  for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = vals[j] * vals[j];
  EXPECT_NEAR(fs::integrate(sq, *grid), 1.0, 1e-12);
}

TEST(Transforms, DiscreteOrthogonality) {
  auto b = fs::enumerate_modes({2, pi}, 5);
  auto grid = std::make_shared<const fs::QuadratureGrid>(fs::BoxDomain{2, pi}, 5);
  fs::SineTransform tr(b, grid);
  for (std::size_t k = 0; k < b->size(); ++k) {
    for (std::size_t l = 0; l < b->size(); ++l) {
      fs::SpectralField fk(b), fl(b);
      fk.coeffs[k] = 1.0;
      fl.coeffs[l] = 1.0;
      const auto a = tr.synthesize(fk);
      const auto c = tr.synthesize(fl);
      std::vector<double> prod(a.size());
      for (std::size_t j = 0; j < a.size(); ++j) prod[j] = a[j] * c[j];
      EXPECT_NEAR(fs::integrate(prod, *grid), k == l ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(Transforms, RejectsCutoffAboveNodes) {
  auto b = fs::enumerate_modes({2, pi}, 5);
  auto grid = std::make_shared<const fs::QuadratureGrid>(fs::BoxDomain{2, pi}, 4);
  EXPECT_THROW(fs::SineTransform(b, grid), fs::ValidationError);
}

TEST(Parseval, QuadratureOfSquares) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    auto b = fs::enumerate_modes({3, pi}, 3);
    auto grid = std::make_shared<const fs::QuadratureGrid>(fs::BoxDomain{3, pi}, 3 + trial % 4);
    fs::SineTransform tr(b, grid);
    const auto f = random_field(b, rng);
    const auto vals = tr.synthesize(f);
    std::vector<double> sq(vals.size());
    for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = vals[j] * vals[j];
    const double l2 = fs::l2_norm(f);
    EXPECT_NEAR(fs::integrate(sq, *grid), l2 * l2, 1e-10);
  }
}

TEST(OperatorSymmetry, QuadratureInnerProductOfHalfPowers) {
  std::mt19937_64 rng(29);
  const double alpha = 1.4;
  auto b = fs::enumerate_modes({3, pi}, 4);
  auto grid = std::make_shared<const fs::QuadratureGrid>(fs::BoxDomain{3, pi}, 9);
  fs::SineTransform tr(b, grid);
  for (int t = 0; t < 10; ++t) {
    const auto f = random_field(b, rng);
    const auto g = random_field(b, rng);
    const auto pf = tr.synthesize(fs::apply_frac_power(f, alpha / 4.0));
    const auto pg = tr.synthesize(fs::apply_frac_power(g, alpha / 4.0));
    std::vector<double> prod(pf.size());
    for (std::size_t j = 0; j < prod.size(); ++j) prod[j] = pf[j] * pg[j];
    EXPECT_NEAR(fs::integrate(prod, *grid), fs::h_alpha_inner(f, g, alpha), 1e-10);
  }
}

TEST(LpNorm, Examples) {
  auto grid = fs::QuadratureGrid({3, pi}, 7);
  const double c = 1.3;
  std::vector<double> vals(grid.size(), c);
  EXPECT_NEAR(fs::lp_norm_on_grid(vals, grid, 2.0), c * std::pow(pi, 1.5), 1e-12);
  EXPECT_NEAR(fs::lp_norm_on_grid(vals, grid, 3.0), c * pi, 1e-12);
  EXPECT_NEAR(fs::lp_norm_on_grid(vals, grid, std::numeric_limits<double>::infinity()), c, 0.0);

  std::vector<double> zeros(grid.size(), 0.0);
  for (double p : {1.0, 2.0, 5.5}) EXPECT_EQ(fs::lp_norm_on_grid(zeros, grid, p), 0.0);
  EXPECT_THROW(fs::lp_norm_on_grid(zeros, grid, 0.5), fs::ValidationError);

  auto g1 = fs::QuadratureGrid({1, pi}, 15);
  std::vector<double> s(g1.size());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = std::sin(g1.coords(j)[0]);
  EXPECT_NEAR(fs::lp_norm_on_grid(s, g1, 2.0), std::sqrt(pi / 2.0), 1e-10);
}

TEST(Poincare, Ratio) {
  auto b = fs::enumerate_modes({3, pi}, 5);
  for (double alpha : {1.1, 1.5, 1.9}) {
    EXPECT_NEAR(fs::poincare_ratio(fs::SpectralField::mode(b, {1, 1, 1}, 0.3), alpha),
                std::pow(3.0, alpha / 2.0), 1e-12);
    EXPECT_NEAR(fs::poincare_ratio(fs::SpectralField::mode(b, {5, 2, 3}), alpha),
                std::pow(38.0, alpha / 2.0), 1e-11);
  }
  EXPECT_THROW(fs::poincare_ratio(fs::SpectralField(b), 1.5), fs::ValidationError);
}

TEST(Poincare, RandomFieldsProperty) {
  std::mt19937_64 rng(31);
  auto b = fs::enumerate_modes({3, pi}, 5);  // 125 modes
  std::uniform_int_distribution<std::size_t> pick(0, b->size() - 1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    fs::SpectralField f(b);
    for (int k = 0; k < 100; ++k) f.coeffs[pick(rng)] = g(rng);
    const double alpha = 1.0 + 0.98 * ((t % 50) + 1) / 51.0;
    const double r = fs::poincare_ratio(f, alpha);
    // direct coefficient oracle
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      num += f.coeffs[i] * f.coeffs[i] * std::pow(b->eigenvalue(i), alpha / 2.0);
      den += f.coeffs[i] * f.coeffs[i];
    }
    EXPECT_NEAR(r, num / den, 1e-12 * r);
    EXPECT_GE(r, std::pow(3.0, alpha / 2.0) - 1e-12);
  }
}

TEST(Gamma, KnownValues) {
  EXPECT_NEAR(fs::gamma_fn(0.5), std::sqrt(pi), 1e-12);
  EXPECT_NEAR(fs::gamma_fn(1.0), 1.0, 1e-14);
  EXPECT_NEAR(fs::gamma_fn(5.0), 24.0, 1e-12);
  EXPECT_NEAR(fs::gamma_fn(-0.5), -2.0 * std::sqrt(pi), 1e-12);
  EXPECT_THROW(fs::gamma_fn(0.0), fs::ValidationError);
  EXPECT_THROW(fs::gamma_fn(-2.0), fs::ValidationError);
}

TEST(Gamma, AgreesWithHighPrecision) {
  for (double x = 0.05; x < 6.0; x += 0.0731) {
    const double ref = static_cast<double>(boost::math::tgamma(Big(x)));
    EXPECT_NEAR(fs::gamma_fn(x) / ref, 1.0, 1e-13) << "x=" << x;
  }
}

TEST(Sobolev, MatchesHighPrecisionOracle) {
  for (double alpha : {1.05, 1.3, 1.5, 1.7, 1.95}) {
    for (int n : {2, 3}) {
      const double ref = sobolev_oracle(alpha, n);
      EXPECT_NEAR(fs::sobolev_constant(alpha, n) / ref, 1.0, 1e-10) << alpha << " " << n;
    }
  }
}

TEST(Sobolev, ContinuityAndErrors) {
  const double s1 = fs::sobolev_constant(1.0001, 3);
  const double s2 = fs::sobolev_constant(1.0002, 3);
  EXPECT_GT(s1, 0.0);
  EXPECT_TRUE(std::isfinite(s1));
  EXPECT_LT(std::abs(s1 - s2), 1e-3 * s1);
  EXPECT_THROW(fs::sobolev_constant(1.5, 1), fs::ValidationError);
  EXPECT_THROW(fs::sobolev_constant(2.0, 3), fs::ValidationError);
  EXPECT_NEAR(*fs::critical_exponent(1.5, 3), 4.0, 1e-15);
  EXPECT_FALSE(fs::critical_exponent(1.5, 1).has_value());
}
