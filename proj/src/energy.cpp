#include "nonlocal/energy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "nonlocal/summation.hpp"

namespace nonlocal {

namespace {

void require_interval(const MetricMeasureSpace& space, const char* op) {
  if (!space.is_interval()) {
    std::ostringstream os;
    os << op << " needs a 1D interval space; matrix spaces have no adjacent-cell structure"
       << " (the relaxed energy tv_relax is likewise 1D only)";
    throw ValidationError(os.str());
  }
}

void require_function(const GridFunction& f, const MetricMeasureSpace& space) {
  if (f.size() != space.size()) throw ValidationError("function length does not match the space");
  if (!f.allFinite()) throw ValidationError("function has non-finite values");
}

double sum_of(const Vector& v) { return pairwise_sum({v.data(), static_cast<std::size_t>(v.size())}); }

Vector edge_terms(const GridFunction& h, const Vector& a) {
  const Index n = h.size();
  return (h.tail(n - 1) - h.head(n - 1)).cwiseAbs().cwiseProduct(a);
}

// Binary level problem: min sum_k a_k |x_{k+1} - x_k| + lam * sum_k |x_k - b_k|.
struct LevelSolver {
  const Vector& a;
  std::vector<unsigned char> from0, from1;

  explicit LevelSolver(const Vector& edge) : a(edge) {}

  double solve(const std::vector<unsigned char>& b, double lam, std::vector<unsigned char>& x) {
    const std::size_t n = b.size();
    from0.assign(n, 0);
    from1.assign(n, 0);
    double c0 = b[0] ? lam : 0.0;
    double c1 = b[0] ? 0.0 : lam;
    for (std::size_t k = 1; k < n; ++k) {
      const double e = a[static_cast<Index>(k - 1)];
      const double stay0 = c0, jump0 = c1 + e;
      const double stay1 = c1, jump1 = c0 + e;
      from0[k] = jump0 < stay0;
      from1[k] = jump1 < stay1;
      const double n0 = std::min(stay0, jump0) + (b[k] ? lam : 0.0);
      const double n1 = std::min(stay1, jump1) + (b[k] ? 0.0 : lam);
      c0 = n0;
      c1 = n1;
    }
    x.assign(n, 0);
    unsigned char s = c1 < c0 ? 1 : 0;
    const double best = std::min(c0, c1);
    for (std::size_t k = n; k-- > 0;) {
      x[k] = s;
      const bool switched = s ? from1[k] : from0[k];
      if (switched) s = 1 - s;
    }
    return best;
  }
};

struct LagrangianPoint {
  double lambda = 0.0;
  GridFunction h;
  double tv = 0.0;
  double fidelity = 0.0;
  double lagrangian = 0.0;  // exact minimum of tv + lambda * fidelity
};

class Relaxation {
 public:
  Relaxation(const GridFunction& f, const MetricMeasureSpace& space, int workers)
      : f_(f), a_(tv_edge_weights(space, 0.0)), c_(space.cell_length()), workers_(workers) {
    std::vector<double> v(f.data(), f.data() + f.size());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    levels_ = std::move(v);
  }

  double lambda_max() const { return 2.0 * a_.maxCoeff() / c_ * (1.0 + 1e-9) + 1e-300; }

  LagrangianPoint solve(double lambda) const {
    const Index n = f_.size();
    const Index n_levels = static_cast<Index>(levels_.size()) - 1;
    const Index block = 64;
    const Index n_blocks = (n_levels + block - 1) / block;
    std::vector<Vector> partial_h(static_cast<std::size_t>(n_blocks));
    std::vector<double> partial_obj(static_cast<std::size_t>(n_blocks), 0.0);
    parallel_blocks(n_blocks, workers_, [&](Index blk) {
      LevelSolver solver(a_);
      std::vector<unsigned char> b(static_cast<std::size_t>(n)), x;
      Vector h = Vector::Zero(n);
      std::vector<double> obj;
      for (Index l = blk * block + 1; l <= std::min(n_levels, (blk + 1) * block); ++l) {
        const double level = levels_[static_cast<std::size_t>(l)];
        const double gap = level - levels_[static_cast<std::size_t>(l - 1)];
        for (Index k = 0; k < n; ++k) b[static_cast<std::size_t>(k)] = f_[k] >= level;
        obj.push_back(gap * solver.solve(b, lambda * c_, x));
        for (Index k = 0; k < n; ++k) {
          if (x[static_cast<std::size_t>(k)]) h[k] += gap;
        }
      }
      partial_h[static_cast<std::size_t>(blk)] = std::move(h);
      partial_obj[static_cast<std::size_t>(blk)] = pairwise_sum(obj);
    });
    LagrangianPoint pt;
    pt.lambda = lambda;
    pt.h = Vector::Constant(n, levels_.front());
    for (const auto& h : partial_h) pt.h += h;
    pt.lagrangian = pairwise_sum(partial_obj);
    measure(pt);
    return pt;
  }

  void measure(LagrangianPoint& pt) const {
    pt.tv = sum_of(edge_terms(pt.h, a_));
    pt.fidelity = c_ * sum_of((pt.h - f_).cwiseAbs());
  }

  const Vector& edges() const { return a_; }

 private:
  const GridFunction& f_;
  Vector a_;
  double c_;
  int workers_;
  std::vector<double> levels_;
};

struct RelaxedValue {
  double value;
  double lambda;
  GridFunction h;
};

RelaxedValue relax_at(const Relaxation& rel, double eps, double rel_tol) {
  LagrangianPoint hi = rel.solve(rel.lambda_max());
  if (hi.fidelity > 0.0) throw ConvergenceError("relaxation: exact fit not recovered at lambda_max", hi.fidelity);
  LagrangianPoint lo = rel.solve(rel.lambda_max() * 1e-12);
  if (lo.fidelity <= eps) return {lo.tv, lo.lambda, lo.h};

  double dual = std::max(lo.lagrangian - lo.lambda * eps, hi.lagrangian - hi.lambda * eps);
  double primal = hi.tv;
  GridFunction best = hi.h;
  double gap = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    // Convex combination of the bracketing solutions; its fidelity is at most
    // eps by convexity, so only rounding can push the measured value above.
    const double theta = (eps - hi.fidelity) / (lo.fidelity - hi.fidelity);
    LagrangianPoint mix;
    mix.h = theta * lo.h + (1.0 - theta) * hi.h;
    rel.measure(mix);
    if (mix.tv < primal) {
      primal = mix.tv;
      best = mix.h;
    }
    gap = primal - dual;
    if (gap <= rel_tol * std::max(primal, 1e-300) || gap <= 0.0) return {primal, hi.lambda, best};
    if (hi.lambda / lo.lambda < 1.0 + 1e-14) break;
    LagrangianPoint mid = rel.solve(std::sqrt(lo.lambda * hi.lambda));
    dual = std::max(dual, mid.lagrangian - mid.lambda * eps);
    if (mid.fidelity <= eps) {
      if (mid.tv < primal) {
        primal = mid.tv;
        best = mid.h;
      }
      hi = std::move(mid);
    } else {
      lo = std::move(mid);
    }
  }
  std::ostringstream os;
  os << "tv_relax did not reach relative accuracy " << rel_tol << " at eps=" << eps;
  throw ConvergenceError(os.str(), gap / std::max(primal, 1e-300));
}

}  // namespace

Vector tv_edge_weights(const MetricMeasureSpace& space, double delta) {
  require_interval(space, "tv");
  if (!(delta >= 0.0)) throw ValidationError("envelope radius must be nonnegative");
  const Index n = space.size();
  const Vector& w = space.weights();
  // Cell k - t has its center at distance (t + 1/2)/n from the edge point (k+1)/n.
  const double scaled = delta * static_cast<double>(n) - 0.5;
  const Index t = scaled < 0.0 ? 0 : std::min<Index>(n, static_cast<Index>(std::floor(scaled + 1e-9)));
  // Sliding minimum of width 2t + 1 centered at each cell.
  Vector around(n);
  std::deque<Index> q;
  Index next = 0;
  for (Index k = 0; k < n; ++k) {
    const Index hi = std::min(n - 1, k + t);
    for (; next <= hi; ++next) {
      while (!q.empty() && w[q.back()] >= w[next]) q.pop_back();
      q.push_back(next);
    }
    while (q.front() < k - t) q.pop_front();
    around[k] = w[q.front()];
  }
  return around.head(n - 1).cwiseMin(around.tail(n - 1));
}

EnergyReport tv(const GridFunction& f, const MetricMeasureSpace& space, double delta) {
  require_interval(space, "tv");
  require_function(f, space);
  EnergyReport rep;
  rep.p = 1.0;
  rep.variant = delta > 0.0 ? "lsc" : "raw";
  rep.delta = delta;
  rep.per_edge = edge_terms(f, tv_edge_weights(space, delta));
  rep.value = sum_of(rep.per_edge);
  return rep;
}

EnergyReport tv_relax(const GridFunction& f, const MetricMeasureSpace& space,
                      const std::vector<double>& eps_schedule, double rel_tol, int workers) {
  require_interval(space, "tv_relax");
  require_function(f, space);
  if (eps_schedule.empty()) throw ValidationError("eps schedule must not be empty");
  for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
    if (!(eps_schedule[k] > 0.0)) throw ValidationError("eps schedule entries must be positive");
    if (k > 0 && !(eps_schedule[k] < eps_schedule[k - 1])) {
      throw ValidationError("eps schedule must be strictly decreasing");
    }
  }
  const Relaxation rel(f, space, workers);
  EnergyReport rep;
  rep.p = 1.0;
  rep.variant = "relaxed";
  GridFunction last;
  for (double eps : eps_schedule) {
    auto r = relax_at(rel, eps, rel_tol);
    rep.curve.push_back({eps, r.value, r.lambda});
    last = std::move(r.h);
  }
  rep.value = rep.curve.back().value;
  rep.per_edge = edge_terms(last, rel.edges());
  return rep;
}

EnergyReport sobolev_energy(const GridFunction& f, const MetricMeasureSpace& space, double p) {
  require_interval(space, "sobolev_energy");
  require_function(f, space);
  if (!(p > 1.0)) throw ValidationError("sobolev_energy needs p > 1; use tv for p = 1");
  const GridFunction g = slope_magnitude(space, f);
  EnergyReport rep;
  rep.p = p;
  rep.variant = "sobolev";
  rep.per_edge = g.array().pow(p).matrix().cwiseProduct(space.mass());
  rep.value = sum_of(rep.per_edge);
  return rep;
}

EnergyReport energy(const GridFunction& f, const MetricMeasureSpace& space, double p,
                    double delta) {
  if (!(p >= 1.0)) throw ValidationError("energy needs p >= 1");
  if (p == 1.0) return tv(f, space, delta);
  return sobolev_energy(f, space, p);
}

}  // namespace nonlocal
