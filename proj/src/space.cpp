#include "nonlocal/space.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace nonlocal {

namespace {

std::string triple(Index i, Index j, Index k) {
  std::ostringstream os;
  os << "(" << i << "," << j << "," << k << ")";
  return os.str();
}

void validate_triangle(const Matrix& d, Index i, Index j, Index k) {
  const double lhs = d(i, k);
  const double rhs = d(i, j) + d(j, k);
  if (lhs > rhs * (1.0 + 1e-12) + 1e-300) {
    std::ostringstream os;
    os << "triangle inequality violated at " << triple(i, j, k) << ": d(" << i << ","
       << k << ")=" << lhs << " > d(" << i << "," << j << ")+d(" << j << "," << k
       << ")=" << rhs;
    throw ValidationError(os.str());
  }
}

}  // namespace

MetricMeasureSpace MetricMeasureSpace::weighted_interval(Index n_cells, const Vector& weights) {
  if (n_cells < 2) throw ValidationError("interval space needs n_cells >= 2");
  if (weights.size() != n_cells) {
    throw ValidationError("weights must have one entry per cell");
  }
  for (Index k = 0; k < n_cells; ++k) {
    if (!(weights[k] > 0.0) || !std::isfinite(weights[k])) {
      std::ostringstream os;
      os << "cell weight must be positive and finite (cell " << k << ", weight "
         << weights[k] << ")";
      throw ValidationError(os.str());
    }
  }
  MetricMeasureSpace s;
  s.n_ = n_cells;
  s.interval_ = true;
  s.weights_ = weights;
  const double n = static_cast<double>(n_cells);
  s.coords_ = (Vector::LinSpaced(n_cells, 0.0, n - 1.0).array() + 0.5) / n;
  s.mass_ = weights / n;
  s.finalize();
  return s;
}

MetricMeasureSpace MetricMeasureSpace::uniform_interval(Index n_cells) {
  return weighted_interval(n_cells, Vector::Ones(std::max<Index>(n_cells, 0)));
}

MetricMeasureSpace MetricMeasureSpace::from_matrix(const Matrix& dist, const Vector& mass,
                                                   std::uint64_t seed) {
  const Index n = dist.rows();
  if (n < 2) throw ValidationError("space needs at least 2 points");
  if (dist.cols() != n) throw ValidationError("distance matrix must be square");
  if (mass.size() != n) throw ValidationError("mass vector length must match the matrix");
  for (Index i = 0; i < n; ++i) {
    if (!(mass[i] > 0.0) || !std::isfinite(mass[i])) {
      std::ostringstream os;
      os << "point mass must be positive and finite (point " << i << ")";
      throw ValidationError(os.str());
    }
    if (dist(i, i) != 0.0) {
      std::ostringstream os;
      os << "nonzero diagonal at (" << i << "," << i << ")";
      throw ValidationError(os.str());
    }
    for (Index j = 0; j < n; ++j) {
      if (!(dist(i, j) >= 0.0) || !std::isfinite(dist(i, j))) {
        std::ostringstream os;
        os << "negative or non-finite distance at (" << i << "," << j << ")";
        throw ValidationError(os.str());
      }
      if (dist(i, j) != dist(j, i)) {
        std::ostringstream os;
        os << "asymmetric distance at (" << i << "," << j << ")";
        throw ValidationError(os.str());
      }
      if (i != j && dist(i, j) == 0.0) {
        std::ostringstream os;
        os << "distinct points at zero distance (" << i << "," << j << ")";
        throw ValidationError(os.str());
      }
    }
  }
  if (n <= 512) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k) validate_triangle(dist, i, j, k);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (int t = 0; t < 100000; ++t) validate_triangle(dist, pick(rng), pick(rng), pick(rng));
  }

  MetricMeasureSpace s;
  s.n_ = n;
  s.interval_ = false;
  s.dist_ = dist;
  s.mass_ = mass;
  s.row_dist_.resize(static_cast<std::size_t>(n * n));
  s.row_order_.resize(static_cast<std::size_t>(n * n));
  s.row_cum_.resize(static_cast<std::size_t>(n * (n + 1)));
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return dist(i, a) < dist(i, b); });
    double cum = 0.0;
    s.row_cum_[static_cast<std::size_t>(i * (n + 1))] = 0.0;
    for (Index k = 0; k < n; ++k) {
      const auto at = static_cast<std::size_t>(i * n + k);
      s.row_order_[at] = order[static_cast<std::size_t>(k)];
      s.row_dist_[at] = dist(i, order[static_cast<std::size_t>(k)]);
      cum += mass[order[static_cast<std::size_t>(k)]];
      s.row_cum_[static_cast<std::size_t>(i * (n + 1) + k + 1)] = cum;
    }
  }
  s.finalize();
  return s;
}

void MetricMeasureSpace::finalize() {
  total_mass_ = mass_.sum();
  if (interval_) {
    prefix_.resize(n_ + 1);
    prefix_[0] = 0.0;
    for (Index k = 0; k < n_; ++k) prefix_[k + 1] = prefix_[k] + mass_[k];
    diam_ = dist(0, n_ - 1);
    min_positive_ = 1.0 / static_cast<double>(n_);
  } else {
    diam_ = dist_.maxCoeff();
    min_positive_ = diam_;
    for (Index i = 0; i < n_; ++i)
      for (Index j = 0; j < n_; ++j)
        if (i != j) min_positive_ = std::min(min_positive_, dist_(i, j));
  }
}

const Vector& MetricMeasureSpace::coords() const {
  if (!interval_) throw ValidationError("coords() requires an interval space");
  return coords_;
}

const Vector& MetricMeasureSpace::weights() const {
  if (!interval_) throw ValidationError("weights() requires an interval space");
  return weights_;
}

double MetricMeasureSpace::cell_length() const {
  if (!interval_) throw ValidationError("cell_length() requires an interval space");
  return 1.0 / static_cast<double>(n_);
}

Index MetricMeasureSpace::offset_bound(double r, bool closed) const {
  const double n = static_cast<double>(n_);
  auto inside = [&](Index t) {
    const double d = static_cast<double>(t) / n;
    return closed ? d <= r : d < r;
  };
  if (!inside(0)) return 0;
  if (!(r < n)) return n_;
  Index t = std::clamp<Index>(static_cast<Index>(std::ceil(r * n)), 0, n_);
  while (t > 0 && !inside(t - 1)) --t;
  while (t < n_ && inside(t)) ++t;
  return t;
}

std::span<const double> MetricMeasureSpace::sorted_row(Index i) const {
  return {row_dist_.data() + i * n_, static_cast<std::size_t>(n_)};
}

std::span<const Index> MetricMeasureSpace::sorted_order(Index i) const {
  return {row_order_.data() + i * n_, static_cast<std::size_t>(n_)};
}

double MetricMeasureSpace::ball_mass(Index center, double r, bool closed) const {
  if (!(closed ? r >= 0.0 : r > 0.0)) throw ValidationError("ball radius must be positive");
  if (interval_) {
    const Index t = offset_bound(r, closed);
    if (t == 0) return 0.0;
    const Index lo = std::max<Index>(0, center - t + 1);
    const Index hi = std::min<Index>(n_ - 1, center + t - 1);
    return prefix_[hi + 1] - prefix_[lo];
  }
  const auto row = sorted_row(center);
  const auto it = closed ? std::upper_bound(row.begin(), row.end(), r)
                         : std::lower_bound(row.begin(), row.end(), r);
  const auto k = static_cast<std::size_t>(it - row.begin());
  return row_cum_[static_cast<std::size_t>(center * (n_ + 1)) + k];
}

BallMeasure::BallMeasure(const MetricMeasureSpace& space, const DomainMask* restrict_to)
    : space_(&space) {
  if (restrict_to == nullptr) return;
  if (restrict_to->size() != space.size()) {
    throw ValidationError("mask length does not match the space");
  }
  mask_ = *restrict_to;
  if (space.is_interval()) {
    prefix_.resize(space.size() + 1);
    prefix_[0] = 0.0;
    for (Index k = 0; k < space.size(); ++k) {
      prefix_[k + 1] = prefix_[k] + ((*mask_)[k] ? space.mass(k) : 0.0);
    }
  }
}

double BallMeasure::operator()(Index center, double r, bool closed) const {
  if (!mask_) return space_->ball_mass(center, r, closed);
  if (space_->is_interval()) {
    const Index t = space_->offset_bound(r, closed);
    if (t == 0) return 0.0;
    const Index lo = std::max<Index>(0, center - t + 1);
    const Index hi = std::min<Index>(space_->size() - 1, center + t - 1);
    return prefix_[hi + 1] - prefix_[lo];
  }
  double m = (*mask_)[center] && (closed ? r >= 0.0 : r > 0.0) ? space_->mass(center) : 0.0;
  space_->for_each_in_ball(center, r, closed, [&](Index j, double) {
    if ((*mask_)[j]) m += space_->mass(j);
  });
  return m;
}

DomainMask interval_mask(const MetricMeasureSpace& space, double lo, double hi) {
  const Vector& x = space.coords();
  return (x.array() >= lo) && (x.array() <= hi);
}

DomainMask morph_mask(const MetricMeasureSpace& space, const DomainMask& mask,
                      double delta, MorphMode mode) {
  if (!(delta > 0.0)) throw ValidationError("morph_mask needs delta > 0");
  if (mask.size() != space.size()) throw ValidationError("mask length does not match the space");
  const Index n = space.size();
  DomainMask out = DomainMask::Constant(n, false);
  for (Index x = 0; x < n; ++x) {
    if (mode == MorphMode::erode) {
      if (!mask[x]) continue;
      bool keep = true;
      space.for_each_in_ball(x, delta, /*closed=*/true, [&](Index j, double) {
        if (!mask[j]) keep = false;
      });
      out[x] = keep;
    } else {
      bool hit = mask[x];
      if (!hit) {
        space.for_each_in_ball(x, delta, /*closed=*/false, [&](Index j, double) {
          if (mask[j]) hit = true;
        });
      }
      out[x] = hit;
    }
  }
  return out;
}

namespace {

std::vector<Index> strided_centers(Index n, Index max_centers) {
  std::vector<Index> c;
  if (max_centers <= 0 || max_centers >= n) {
    c.resize(static_cast<std::size_t>(n));
    std::iota(c.begin(), c.end(), Index{0});
    return c;
  }
  for (Index k = 0; k < max_centers; ++k) c.push_back(k * (n - 1) / std::max<Index>(1, max_centers - 1));
  return c;
}

}  // namespace

double estimate_doubling(const MetricMeasureSpace& space, std::span<const double> scales,
                         Index max_centers) {
  if (scales.empty()) throw ValidationError("estimate_doubling needs at least one scale");
  double worst = 1.0;
  for (double r : scales) {
    if (!(r > 0.0)) throw ValidationError("doubling scales must be positive");
  }
  for (Index x : strided_centers(space.size(), max_centers)) {
    for (double r : scales) {
      worst = std::max(worst, space.ball_mass(x, 2.0 * r) / space.ball_mass(x, r));
    }
  }
  return worst;
}

GridFunction slope_magnitude(const MetricMeasureSpace& space, const GridFunction& f) {
  const Index n = space.size();
  if (f.size() != n) throw ValidationError("function length does not match the space");
  const double h = space.cell_length();
  GridFunction g(n);
  g[0] = std::abs(f[1] - f[0]) / h;
  g[n - 1] = std::abs(f[n - 1] - f[n - 2]) / h;
  for (Index k = 1; k + 1 < n; ++k) g[k] = std::abs(f[k + 1] - f[k - 1]) / (2.0 * h);
  return g;
}

std::vector<PoincareTest> standard_poincare_tests(const MetricMeasureSpace& space,
                                                  std::uint64_t seed, int n_random) {
  const Vector& x = space.coords();
  const double h = space.cell_length();
  std::vector<GridFunction> fs;
  fs.push_back(x);
  fs.push_back(Vector::Ones(x.size()) - x);
  for (double a : {0.25, 0.5, 0.75}) {
    fs.push_back(((x.array() - a) / h + 0.5).min(1.0).max(0.0).matrix());
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int r = 0; r < n_random; ++r) {
    const int knots = 6;
    std::vector<double> kx(knots + 1), ky(knots + 1);
    for (int k = 0; k <= knots; ++k) {
      kx[k] = static_cast<double>(k) / knots;
      ky[k] = unit(rng);
    }
    GridFunction f(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      const int seg = std::min(knots - 1, static_cast<int>(x[i] * knots));
      const double t = (x[i] - kx[seg]) * knots;
      f[i] = ky[seg] + t * (ky[seg + 1] - ky[seg]);
    }
    fs.push_back(f);
  }
  std::vector<PoincareTest> tests;
  for (auto& f : fs) tests.push_back({f, slope_magnitude(space, f)});
  return tests;
}

PoincareEstimate estimate_poincare(const MetricMeasureSpace& space, double p,
                                   std::span<const PoincareTest> tests,
                                   std::span<const double> radii, double lambda,
                                   Index max_centers) {
  if (!(p >= 1.0)) throw ValidationError("Poincare exponent must satisfy p >= 1");
  if (!(lambda >= 1.0)) throw ValidationError("Poincare dilation must satisfy lambda >= 1");
  PoincareEstimate est;
  est.p = p;
  est.lambda = lambda;
  est.n_tests = static_cast<Index>(tests.size());
  const auto centers = strided_centers(space.size(), max_centers);
  for (const auto& test : tests) {
    if (!test.gradient) throw ValidationError("Poincare test function lacks a gradient surrogate");
    const GridFunction& f = test.f;
    const GridFunction& g = *test.gradient;
    if (f.size() != space.size() || g.size() != space.size()) {
      throw ValidationError("Poincare test length does not match the space");
    }
    for (Index x : centers) {
      for (double r : radii) {
        if (!(r > 0.0)) throw ValidationError("Poincare radii must be positive");
        double mb = space.mass(x), fb = f[x] * space.mass(x);
        space.for_each_in_ball(x, r, false, [&](Index j, double) {
          mb += space.mass(j);
          fb += f[j] * space.mass(j);
        });
        fb /= mb;
        // Exactly flat on the ball: no oscillation, whatever the rounding in fb.
        double lo = f[x], hi = f[x];
        space.for_each_in_ball(x, r, false, [&](Index j, double) {
          lo = std::min(lo, f[j]);
          hi = std::max(hi, f[j]);
        });
        if (lo == hi) continue;
        double num = std::pow(std::abs(f[x] - fb), p) * space.mass(x);
        space.for_each_in_ball(x, r, false, [&](Index j, double) {
          num += std::pow(std::abs(f[j] - fb), p) * space.mass(j);
        });
        double grad = std::pow(g[x], p) * space.mass(x);
        space.for_each_in_ball(x, lambda * r, false, [&](Index j, double) {
          grad += std::pow(g[j], p) * space.mass(j);
        });
        const double den = std::pow(r, p) * grad;
        if (den == 0.0) {
          if (num > 0.0) ++est.violations;
          continue;
        }
        est.c_p = std::max(est.c_p, num / den);
      }
    }
  }
  return est;
}

}  // namespace nonlocal
