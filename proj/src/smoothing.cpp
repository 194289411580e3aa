#include "nonlocal/smoothing.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nonlocal/summation.hpp"

namespace nonlocal {

namespace {

double set_distance(const MetricMeasureSpace& space, const DomainMask& a, const DomainMask& b) {
  double best = std::numeric_limits<double>::infinity();
  for (Index x = 0; x < space.size(); ++x) {
    if (!a[x]) continue;
    for (Index y = 0; y < space.size(); ++y) {
      if (b[y]) best = std::min(best, space.dist(x, y));
    }
  }
  return best;
}

}  // namespace

Covering cover(const MetricMeasureSpace& space, const DomainMask& u_mask, double R,
               const DomainMask* omega, double c_d_assumed) {
  const Index n = space.size();
  if (u_mask.size() != n) throw ValidationError("cover: mask length does not match the space");
  if (!(R > 0.0)) throw ValidationError("cover: R must be positive");
  if (!u_mask.any()) throw ValidationError("cover: U is empty");
  if (omega) {
    if (omega->size() != n) throw ValidationError("cover: omega length does not match the space");
    if ((u_mask && !*omega).any()) throw ValidationError("cover: U must lie inside omega");
    const double gap = set_distance(space, u_mask, !*omega);
    if (!(R < gap / 10.0)) {
      std::ostringstream os;
      os << "cover: scale constraint R < dist(U, X \\ Omega)/10 violated (R=" << R
         << ", dist/10=" << gap / 10.0 << ")";
      throw ValidationError(os.str());
    }
  } else if (!(R < space.diam())) {
    throw ValidationError("cover: scale constraint R < diam violated");
  }

  Covering cov;
  cov.radius = R;
  cov.seed_radius = R / 5.0;
  cov.c_d_assumed = c_d_assumed;
  cov.c0_bound = 3.0 * std::pow(c_d_assumed, 8);
  cov.target = morph_mask(space, u_mask, 5.0 * R, MorphMode::dilate);

  // A candidate is blocked once it lies closer than 2R/5 to a chosen center.
  std::vector<char> blocked(static_cast<std::size_t>(n), 0);
  for (Index x = 0; x < n; ++x) {
    if (!cov.target[x] || blocked[static_cast<std::size_t>(x)]) continue;
    cov.centers.push_back(x);
    blocked[static_cast<std::size_t>(x)] = 1;
    space.for_each_in_ball(x, 2.0 * cov.seed_radius, false,
                           [&](Index y, double) { blocked[static_cast<std::size_t>(y)] = 1; });
  }

  // Overlap classes: first class whose balls 5B_k are all disjoint from 5B_j.
  const std::size_t J = cov.centers.size();
  std::vector<std::vector<std::size_t>> classes;
  cov.overlap_class.assign(J, -1);
  for (std::size_t j = 0; j < J; ++j) {
    std::size_t c = 0;
    for (; c < classes.size(); ++c) {
      bool disjoint = true;
      for (std::size_t k : classes[c]) {
        if (space.dist(cov.centers[j], cov.centers[k]) < 10.0 * R) {
          disjoint = false;
          break;
        }
      }
      if (disjoint) break;
    }
    if (c == classes.size()) classes.emplace_back();
    classes[c].push_back(j);
    cov.overlap_class[j] = static_cast<int>(c);
  }
  cov.n_classes = static_cast<int>(classes.size());

  std::vector<int> hits(static_cast<std::size_t>(n), 0);
  for (Index c : cov.centers) {
    ++hits[static_cast<std::size_t>(c)];
    space.for_each_in_ball(c, 2.0 * R, false, [&](Index y, double) { ++hits[static_cast<std::size_t>(y)]; });
  }
  for (Index x = 0; x < n; ++x) {
    if (cov.target[x]) cov.max_multiplicity = std::max(cov.max_multiplicity, hits[static_cast<std::size_t>(x)]);
  }
  return cov;
}

PartitionOfUnity partition_of_unity(const MetricMeasureSpace& space, const Covering& covering) {
  const Index n = space.size();
  const Index J = static_cast<Index>(covering.centers.size());
  const double R = covering.radius;
  PartitionOfUnity pou;
  pou.phi = Matrix::Zero(n, J);
  for (Index j = 0; j < J; ++j) {
    const Index c = covering.centers[static_cast<std::size_t>(j)];
    pou.phi(c, j) = 1.0;
    space.for_each_in_ball(c, 2.0 * R, false, [&](Index x, double d) {
      pou.phi(x, j) = std::clamp(2.0 - d / R, 0.0, 1.0);
    });
  }
  for (Index x = 0; x < n; ++x) {
    if (!covering.target[x]) {
      pou.phi.row(x).setZero();
      continue;
    }
    const double total = pou.phi.row(x).sum();
    if (!(total > 0.0)) {
      std::ostringstream os;
      os << "partition_of_unity: covering defect, point " << x << " lies in no ball 2B_j";
      throw InconsistencyError(os.str());
    }
    pou.phi.row(x) /= total;
  }
  pou.lipschitz_bound = covering.c0_bound / R;

  // Lipschitz constants over the target: consecutive points on intervals, all pairs otherwise.
  pou.measured_lipschitz = Vector::Zero(J);
  std::vector<Index> pts;
  for (Index x = 0; x < n; ++x) {
    if (covering.target[x]) pts.push_back(x);
  }
  for (Index j = 0; j < J; ++j) {
    double best = 0.0;
    if (space.is_interval()) {
      for (std::size_t k = 1; k < pts.size(); ++k) {
        const Index a = pts[k - 1], b = pts[k];
        best = std::max(best, std::abs(pou.phi(b, j) - pou.phi(a, j)) / space.dist(a, b));
      }
    } else {
      for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
          best = std::max(best, std::abs(pou.phi(pts[b], j) - pou.phi(pts[a], j)) /
                                    space.dist(pts[a], pts[b]));
        }
      }
    }
    pou.measured_lipschitz[j] = best;
  }
  return pou;
}

GridFunction discrete_convolve(const MetricMeasureSpace& space, const GridFunction& f,
                               const Covering& covering, const PartitionOfUnity& pou) {
  const Index n = space.size();
  if (f.size() != n) throw ValidationError("discrete_convolve: function length does not match the space");
  if (!f.allFinite()) throw ValidationError("discrete_convolve: function has non-finite values");
  const Index J = static_cast<Index>(covering.centers.size());
  Vector averages(J);
  for (Index j = 0; j < J; ++j) {
    const Index c = covering.centers[static_cast<std::size_t>(j)];
    double s = f[c] * space.mass(c);
    double m = space.mass(c);
    space.for_each_in_ball(c, covering.radius, false, [&](Index x, double) {
      s += f[x] * space.mass(x);
      m += space.mass(x);
    });
    averages[j] = s / m;
  }
  return pou.phi * averages;
}

GridFunction lip_number(const MetricMeasureSpace& space, const GridFunction& h) {
  if (!space.is_interval()) throw ValidationError("lip_number needs a 1D interval space");
  const Index n = space.size();
  if (h.size() != n) throw ValidationError("lip_number: function length does not match the space");
  const double cell = space.cell_length();
  GridFunction out = GridFunction::Zero(n);
  for (Index k = 0; k + 1 < n; ++k) {
    const double q = std::abs(h[k + 1] - h[k]) / cell;
    out[k] = std::max(out[k], q);
    out[k + 1] = std::max(out[k + 1], q);
  }
  return out;
}

LipBoundReport verify_lip_bound(const MetricMeasureSpace& space, const GridFunction& f,
                                const DomainMask& u_mask, const Covering& covering,
                                const PartitionOfUnity& pou, double p, const DomainMask* omega,
                                int workers) {
  if (!(p >= 1.0)) throw ValidationError("verify_lip_bound needs p >= 1");
  const Index n = space.size();
  const DomainMask all = full_mask(n);
  const DomainMask& om = omega ? *omega : all;
  const double R = covering.radius;
  const double t = 10.0 * R;

  const GridFunction h = discrete_convolve(space, f, covering, pou);
  GridFunction lip = lip_number(space, h);
  // Differences of a few ulps come from normalizing phi, not from f.
  const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                       h.cwiseAbs().maxCoeff() / space.cell_length();
  lip = (lip.array() <= noise).select(0.0, lip);

  LipBoundReport rep;
  rep.R = R;
  rep.p = p;
  rep.lhs = deterministic_sum(n, workers, [&](Index x) {
    return u_mask[x] ? std::pow(lip[x], p) * space.mass(x) : 0.0;
  });
  rep.rhs = deterministic_sum(n, workers, [&](Index y) {
    if (!om[y]) return 0.0;
    double s = 0.0;
    space.for_each_in_ball(y, t, false, [&](Index x, double) {
      if (om[x]) s += std::pow(std::abs(f[x] - f[y]), p) * space.mass(x);
    });
    return s * space.mass(y) / space.ball_mass(y, t);
  }) / std::pow(t, p);

  const double cd = covering.c_d_assumed;
  const double c0 = covering.c0_bound;
  rep.theoretical_constant = std::pow(2.0 * c0 * c0 * cd * cd * cd, p) *
                             std::pow(10.0 * c0, p) * cd * cd * c0;
  if (rep.rhs == 0.0) {
    if (rep.lhs > 0.0) {
      throw InconsistencyError("verify_lip_bound: right-hand side vanishes but (lip h)^p has positive integral");
    }
    rep.measured_constant = 0.0;
    rep.pass = true;
    return rep;
  }
  rep.measured_constant = rep.lhs / rep.rhs;
  rep.pass = rep.measured_constant <= rep.theoretical_constant;
  return rep;
}

}  // namespace nonlocal
