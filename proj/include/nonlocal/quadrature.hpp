#pragma once

#include <functional>

namespace nonlocal::quadrature {

using Integrand = std::function<double(double)>;

/// Adaptive 20-point Gauss-Legendre on [a, b].
double integrate(const Integrand& g, double a, double b, double rel_tol = 1e-12);

/// Integral over [a, +inf) using panels of doubling width. The integrand must
/// eventually decay; panels are added until the newest one is negligible.
double integrate_upper(const Integrand& g, double a, double rel_tol = 1e-12);

/// Integral over (-inf, b].
double integrate_lower(const Integrand& g, double b, double rel_tol = 1e-12);

}  // namespace nonlocal::quadrature
