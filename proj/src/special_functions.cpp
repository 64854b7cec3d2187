#include "fracsaddle/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "fracsaddle/errors.hpp"

namespace fracsaddle {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoeffs = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

}  // namespace

double gamma_fn(double x) {
  if (!std::isfinite(x)) throw ValidationError("gamma_fn: non-finite argument");
  if (x <= 0.0 && std::floor(x) == x) {
    throw ValidationError("gamma_fn: pole at " + std::to_string(x));
  }
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
    return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_fn(1.0 - x));
  }
  const double z = x - 1.0;
  double series = kLanczosCoeffs[0];
  for (std::size_t i = 1; i < kLanczosCoeffs.size(); ++i) {
    series += kLanczosCoeffs[i] / (z + static_cast<double>(i));
  }
  const double t = z + kLanczosG + 0.5;
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * series;
}

std::optional<double> critical_exponent(double alpha, int n) {
  if (static_cast<double>(n) <= alpha) return std::nullopt;
  return 2.0 * n / (n - alpha);
}

double sobolev_constant(double alpha, int n) {
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw ValidationError("sobolev_constant: alpha must lie in (1,2)");
  }
  if (static_cast<double>(n) <= alpha) {
    throw ValidationError("sobolev_constant: requires n > alpha");
  }
  const double nd = n;
  const double num = 2.0 * std::pow(std::numbers::pi, alpha / 2.0) * gamma_fn((nd + alpha) / 2.0) *
                     gamma_fn((2.0 - alpha) / 2.0) * std::pow(gamma_fn(nd / 2.0), alpha / nd);
  const double den = gamma_fn(alpha / 2.0) * gamma_fn((nd - alpha) / 2.0) *
                     std::pow(gamma_fn(nd), alpha / 2.0);
  return num / den;
}

}  // namespace fracsaddle
