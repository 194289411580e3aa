#include "nonlocal/functional.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include "nonlocal/summation.hpp"

namespace nonlocal {

namespace {

// |a|^p without pow for the common exponents.
struct PowerFn {
  double p;
  double operator()(double a) const {
    a = std::abs(a);
    if (p == 1.0) return a;
    if (p == 2.0) return a * a;
    return std::pow(a, p);
  }
};

}  // namespace

std::optional<double> majorant_cutoff(const MollifierFamily& family,
                                      const MetricMeasureSpace& space, std::size_t i,
                                      double tol, int workers) {
  // Pairs at distance >= 1 are outside every dyadic shell.
  if (space.diam() >= 1.0) return std::nullopt;
  const auto maj = dyadic_majorant(family, space, i, workers);
  double dropped = 0.0;
  std::optional<double> cutoff;
  for (std::size_t j = 0; j < maj.coeffs.size(); ++j) {
    dropped += maj.coeffs[j];
    if (dropped > tol * (maj.sum - dropped)) break;
    cutoff = std::ldexp(1.0, -static_cast<int>(j + 1));
  }
  return cutoff;
}

Evaluation evaluate(const MetricMeasureSpace& space, const GridFunction& f,
                    const MollifierFamily& family, std::size_t i, const DomainMask& omega,
                    const EvaluateOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = space.size();
  if (f.size() != n) throw ValidationError("function length does not match the space");
  if (omega.size() != n) throw ValidationError("omega mask length does not match the space");
  if (i >= family.size()) throw ValidationError("family index out of range");
  family.require_compatible(space);
  for (Index k = 0; k < n; ++k) {
    if (omega[k] && std::isnan(f[k])) {
      std::ostringstream os;
      os << "function is NaN at point " << k;
      throw ValidationError(os.str());
    }
  }

  Evaluation ev;
  if (!omega.any()) {
    std::cerr << "warning: empty omega, functional is 0\n";
    ev.empty_omega = true;
    return ev;
  }

  const double p = family.p();
  const PowerFn pw{p};
  const BallMeasure mu(space, options.ball_domain == BallDomain::omega ? &omega : nullptr);
  const bool diagonal = options.diagonal_correction.value_or(space.is_interval()) &&
                        space.is_interval();
  const GridFunction slope = diagonal ? slope_magnitude(space, f) : GridFunction();

  double reach = std::numeric_limits<double>::infinity();
  bool closed = true;
  if (options.prune) {
    if (auto sup = family.support(i)) {
      reach = sup->radius;
      closed = sup->closed;
    } else if ((ev.cutoff = majorant_cutoff(family, space, i, options.cutoff_tol, options.workers))) {
      reach = *ev.cutoff;
      closed = false;
    }
  }

  const Index block = 64;
  const Index n_blocks = (n + block - 1) / block;
  std::vector<Index> pair_counts(static_cast<std::size_t>(n_blocks), 0);
  auto row = [&](Index y, Index& count) -> double {
    if (!omega[y]) return 0.0;
    double s = 0.0;
    auto visit = [&](Index x, double d) {
      if (!omega[x]) return;
      ++count;
      const double rho = family(mu, y, d, i);
      if (rho != 0.0) s += pw((f[x] - f[y]) / d) * rho * space.mass(x);
    };
    if (options.prune && std::isfinite(reach)) {
      space.for_each_in_ball(y, reach, closed, visit);
    } else {
      for (Index x = 0; x < n; ++x) {
        if (x != y) visit(x, space.dist(x, y));
      }
    }
    if (diagonal) s += pw(slope[y]) * family.diagonal_mass(mu, y, i);
    return s * space.mass(y);
  };

  std::vector<double> partial(static_cast<std::size_t>(n_blocks), 0.0);
  parallel_blocks(n_blocks, options.workers, [&](Index b) {
    const Index lo = b * block, hi = std::min(n, lo + block);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(hi - lo));
    Index count = 0;
    for (Index y = lo; y < hi; ++y) terms.push_back(row(y, count));
    partial[static_cast<std::size_t>(b)] = pairwise_sum(terms);
    pair_counts[static_cast<std::size_t>(b)] = count;
  });
  ev.value = pairwise_sum(partial);
  for (Index c : pair_counts) ev.pairs += c;
  if (std::isnan(ev.value)) throw ValidationError("functional evaluated to NaN");
  ev.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return ev;
}

SweepResult sweep(const MetricMeasureSpace& space, const GridFunction& f,
                  const MollifierFamily& family, const DomainMask& omega, int window,
                  const EvaluateOptions& options) {
  if (window < 1) throw ValidationError("sweep window must be at least 1");
  if (family.size() < static_cast<std::size_t>(window)) {
    std::ostringstream os;
    os << "sweep needs at least " << window << " family indices, got " << family.size();
    throw ValidationError(os.str());
  }
  SweepResult res;
  res.window = window;
  res.index_params = family.params();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto ev = evaluate(space, f, family, i, omega, options);
    res.values.push_back(ev.value);
    res.pairs.push_back(ev.pairs);
    res.seconds.push_back(ev.seconds);
    res.cutoffs.push_back(ev.cutoff);
  }
  const auto tail = std::span(res.values).last(static_cast<std::size_t>(window));
  res.tail_lo = *std::min_element(tail.begin(), tail.end());
  res.tail_hi = *std::max_element(tail.begin(), tail.end());
  return res;
}

ConstantEstimate estimate_constants(const SweepResult& sweep, const EnergyReport& energy) {
  ConstantEstimate est;
  est.energy_ref = energy;
  if (!(energy.value > 0.0)) {
    if (sweep.tail_hi > 0.0) {
      std::ostringstream os;
      os << "energy is zero but the functional tail reaches " << sweep.tail_hi
         << "; check the energy oracle and the omega mask";
      throw InconsistencyError(os.str());
    }
    est.degenerate = true;
    return est;
  }
  est.c1_hat = sweep.tail_lo / energy.value;
  est.c2_hat = sweep.tail_hi / energy.value;
  return est;
}

}  // namespace nonlocal
