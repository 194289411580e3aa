#include "nonlocal/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <queue>

#include "nonlocal/core.hpp"

namespace nonlocal::quadrature {

namespace {

constexpr int kOrder = 20;

struct GaussLegendre {
  std::array<double, kOrder> node{};
  std::array<double, kOrder> weight{};

  GaussLegendre() {
    for (int i = 0; i < kOrder; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (kOrder + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= kOrder; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      node[i] = x;
      weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

const GaussLegendre& rule() {
  static const GaussLegendre gl;
  return gl;
}

double panel(const Integrand& g, double a, double b) {
  const auto& gl = rule();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < kOrder; ++i) s += gl.weight[i] * g(mid + half * gl.node[i]);
  return s * half;
}

struct Piece {
  double a, b, value, error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

Piece make_piece(const Integrand& g, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double coarse = panel(g, a, b);
  const double fine = panel(g, a, mid) + panel(g, mid, b);
  return {a, b, fine, std::abs(fine - coarse)};
}

}  // namespace

double integrate(const Integrand& g, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  // Globally adaptive bisection: always split the piece with the largest error.
  std::priority_queue<Piece> heap;
  heap.push(make_piece(g, a, b));
  double value = heap.top().value, error = heap.top().error;
  for (int it = 0; it < 4000; ++it) {
    if (error <= rel_tol * std::abs(value) || error < 1e-300) break;
    const Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Piece left = make_piece(g, worst.a, mid);
    const Piece right = make_piece(g, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-add the pieces so the result does not carry the running-update rounding.
  double total = 0.0;
  for (; !heap.empty(); heap.pop()) total += heap.top().value;
  return total;
}

double integrate_upper(const Integrand& g, double a, double rel_tol) {
  double total = 0.0;
  double lo = a;
  double width = 1.0;
  for (int k = 0; k < 80; ++k) {
    const double part = integrate(g, lo, lo + width, rel_tol);
    total += part;
    if (k >= 4 && std::abs(part) <= 1e-3 * rel_tol * std::abs(total)) return total;
    lo += width;
    width *= 2.0;
  }
  throw ConvergenceError("semi-infinite quadrature did not settle", total);
}

double integrate_lower(const Integrand& g, double b, double rel_tol) {
  return integrate_upper([&g](double u) { return g(-u); }, -b, rel_tol);
}

}  // namespace nonlocal::quadrature
