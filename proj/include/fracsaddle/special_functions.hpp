#pragma once

#include <optional>

namespace fracsaddle {

/// Euler Gamma function for real arguments (Lanczos, g = 7, nine terms),
/// with the reflection formula below 1/2. Relative accuracy ~1e-15 on
/// moderate arguments. Throws ValidationError at the poles 0, -1, -2, ...
double gamma_fn(double x);

/// Critical Sobolev exponent 2n/(n - alpha); empty when n <= alpha.
std::optional<double> critical_exponent(double alpha, int n);

/// Best constant S(alpha, n) of the fractional Sobolev inequality at the
/// critical exponent. Requires 1 < alpha < 2 and n > alpha.
double sobolev_constant(double alpha, int n);

}  // namespace fracsaddle
