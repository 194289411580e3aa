#include "nonlocal/cantor.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "nonlocal/energy.hpp"
#include "nonlocal/functional.hpp"
#include "nonlocal/mollifier.hpp"

namespace nonlocal {

namespace {

// num/den compared with a/2^e, using 128-bit products.
int compare(std::int64_t num, std::int64_t den, std::int64_t a, int e) {
  const __int128 lhs = static_cast<__int128>(num) << e;
  const __int128 rhs = static_cast<__int128>(a) * den;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

}  // namespace

bool FatCantorSpec::in_set(std::int64_t num, std::int64_t den) const {
  for (const auto& c : components[static_cast<std::size_t>(depth)]) {
    if (compare(num, den, c.lo, exponent) >= 0 && compare(num, den, c.hi, exponent) <= 0) return true;
  }
  return false;
}

bool FatCantorSpec::in_gap(int i, std::int64_t num, std::int64_t den) const {
  for (const auto& g : gaps[static_cast<std::size_t>(i)]) {
    if (compare(num, den, g.lo, exponent) > 0 && compare(num, den, g.hi, exponent) < 0) return true;
  }
  return false;
}

FatCantorSpec fat_cantor(int m) {
  if (m < 1 || m > 12) throw ValidationError("fat_cantor: depth must satisfy 1 <= m <= 12");
  FatCantorSpec spec;
  spec.depth = m;
  spec.exponent = 2 * m + 1;
  const std::int64_t one = std::int64_t{1} << spec.exponent;
  spec.components.push_back({{0, one}});
  spec.gaps.emplace_back();
  spec.lengths.push_back(1.0);
  for (int i = 1; i <= m; ++i) {
    const std::int64_t half_gap = std::int64_t{1} << (spec.exponent - 2 * i - 1);
    std::vector<DyadicInterval> next, gaps;
    for (const auto& c : spec.components.back()) {
      const std::int64_t mid = (c.lo + c.hi) / 2;
      gaps.push_back({mid - half_gap, mid + half_gap});
      next.push_back({c.lo, mid - half_gap});
      next.push_back({mid + half_gap, c.hi});
    }
    std::int64_t total = 0;
    for (const auto& c : next) total += c.hi - c.lo;
    spec.components.push_back(std::move(next));
    spec.gaps.push_back(std::move(gaps));
    spec.lengths.push_back(static_cast<double>(total) * spec.scale());
  }
  return spec;
}

MetricMeasureSpace cantor_space(const FatCantorSpec& spec, Index n_cells) {
  const Index minimum = Index{1} << (2 * spec.depth + 2);
  if (n_cells < minimum) {
    std::ostringstream os;
    os << "cantor_space: depth " << spec.depth << " needs n_cells >= " << minimum
       << " (4 cells per finest gap), got " << n_cells;
    throw ValidationError(os.str());
  }
  Vector w(n_cells);
  for (Index k = 0; k < n_cells; ++k) w[k] = spec.in_set(2 * k + 1, 2 * n_cells) ? 2.0 : 1.0;
  return MetricMeasureSpace::weighted_interval(n_cells, w);
}

namespace {

GridFunction midpoint_integral(const GridFunction& g, double h) {
  GridFunction f(g.size());
  double acc = 0.0;
  for (Index k = 0; k < g.size(); ++k) {
    f[k] = h * (acc + 0.5 * g[k]);
    acc += g[k];
  }
  return f;
}

}  // namespace

CantorFunctions cantor_function(const FatCantorSpec& spec, const MetricMeasureSpace& space) {
  if (!space.is_interval()) throw ValidationError("cantor_function: space is not an interval space");
  const Index n = space.size();
  const Vector& w = space.weights();
  GridFunction g(n);
  for (Index k = 0; k < n; ++k) {
    const bool inside = spec.in_set(2 * k + 1, 2 * n);
    if (w[k] != (inside ? 2.0 : 1.0)) {
      std::ostringstream os;
      os << "cantor_function: space weights do not match the depth-" << spec.depth
         << " construction (cell " << k << ")";
      throw ValidationError(os.str());
    }
    g[k] = inside ? 2.0 : 0.0;
  }
  const double h = space.cell_length();
  CantorFunctions out;
  out.f = midpoint_integral(g, h);
  out.approximants.emplace_back();
  out.densities.emplace_back();
  for (int i = 1; i <= spec.depth; ++i) {
    const double scale = 1.0 / (spec.lengths[static_cast<std::size_t>(i - 1)] -
                                spec.lengths[static_cast<std::size_t>(i)]);
    GridFunction gi(n);
    for (Index k = 0; k < n; ++k) gi[k] = spec.in_gap(i, 2 * k + 1, 2 * n) ? scale : 0.0;
    out.approximants.push_back(midpoint_integral(gi, h));
    out.densities.push_back(std::move(gi));
  }
  return out;
}

GridFunction tent_function(const MetricMeasureSpace& space, double a, double b, double height) {
  if (!(b > a)) throw ValidationError("tent_function: need a < b");
  const Vector& x = space.coords();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  GridFunction f(x.size());
  for (Index k = 0; k < x.size(); ++k) f[k] = height * std::max(0.0, 1.0 - std::abs(x[k] - mid) / half);
  return f;
}

CounterexampleReport run_counterexample(int m, Index n_cells, const std::vector<double>& radii,
                                        double epsilon, int workers) {
  const auto start = std::chrono::steady_clock::now();
  const FatCantorSpec spec = fat_cantor(m);
  const MetricMeasureSpace space = cantor_space(spec, n_cells);
  if (radii.empty()) throw ValidationError("run_counterexample: radii must not be empty");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("run_counterexample: epsilon must lie in (0, 1)");
  const double finest_gap = std::ldexp(1.0, -2 * m);
  if (!(radii.back() < finest_gap)) {
    std::ostringstream os;
    os << "run_counterexample: smallest radius must be below the finest gap length 2^-" << 2 * m;
    throw ValidationError(os.str());
  }
  if (radii.back() * static_cast<double>(n_cells) < 8.0) {
    throw ValidationError("run_counterexample: smallest radius must span at least 8 cells");
  }
  // Validates ordering and positivity.
  const auto family = MollifierFamily::indicator(radii, Normalization::lebesgue_1d, 1.0);

  CounterexampleReport rep;
  rep.depth = m;
  rep.n_cells = n_cells;
  rep.radii = radii;
  rep.epsilon = epsilon;
  rep.gap_scale = std::ldexp(1.0, -m);
  rep.predicted_limit = 8.0 * spec.lengths.back();

  const auto fns = cantor_function(spec, space);
  const DomainMask all = full_mask(n_cells);
  EvaluateOptions opt;
  opt.workers = workers;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    rep.functional_values.push_back(evaluate(space, fns.f, family, i, all, opt).value);
    rep.resolved.push_back(radii[i] < finest_gap);
  }
  rep.tv_discrete_delta0 = tv(fns.f, space, 0.0).value;
  rep.tv_discrete_gapscale = tv(fns.f, space, rep.gap_scale).value;
  rep.lower_bound_check = rep.functional_values.back() >= 2.0 * (1.0 - epsilon) * rep.tv_reference;

  const GridFunction bump = tent_function(space, 0.375, 0.625, 1.0);
  rep.bump_functional = evaluate(space, bump, family, radii.size() - 1, all, opt).value;
  rep.bump_tv = tv(bump, space, 0.0).value;
  rep.bump_ratio = rep.bump_functional / rep.bump_tv;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace nonlocal
