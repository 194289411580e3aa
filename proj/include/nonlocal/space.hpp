#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nonlocal/core.hpp"

namespace nonlocal {

/// Finite metric measure space with atomic masses.
///
/// Two layouts exist. An *interval* space is a uniform cell grid on [0, 1]:
/// point k sits at the cell center (k + 1/2)/n, carries mass weight(k)/n, and
/// d(i, j) = |i - j|/n. A *matrix* space wraps an explicit distance matrix.
///
/// Balls are open: B(x, r) = {y : d(x, y) < r}. Spaces are immutable after
/// construction and safe to share between threads.
class MetricMeasureSpace {
 public:
  static MetricMeasureSpace weighted_interval(Index n_cells, const Vector& weights);
  static MetricMeasureSpace uniform_interval(Index n_cells);

  /// Validates symmetry, zero diagonal, nonnegativity and the triangle
  /// inequality (every triple for N <= 512, 1e5 random triples above).
  static MetricMeasureSpace from_matrix(const Matrix& dist, const Vector& mass,
                                        std::uint64_t seed = 0);

  Index size() const { return n_; }
  bool is_interval() const { return interval_; }

  double dist(Index i, Index j) const {
    if (interval_) return static_cast<double>(i > j ? i - j : j - i) / static_cast<double>(n_);
    return dist_(i, j);
  }

  const Vector& mass() const { return mass_; }
  double mass(Index i) const { return mass_[i]; }
  double total_mass() const { return total_mass_; }
  double diam() const { return diam_; }

  /// Interval spaces only.
  const Vector& coords() const;
  const Vector& weights() const;
  double cell_length() const;

  /// Smallest integer offset t with t/n >= r (interval spaces); points at index
  /// offset < t lie in the open ball of radius r.
  Index offset_bound(double r, bool closed) const;

  /// mu(B(center, r)) with the open ball; the closed variant uses d <= r.
  double ball_mass(Index center, double r, bool closed = false) const;

  /// Calls fn(j, d) for every j != center with d(center, j) < r (<= r if closed).
  template <class Fn>
  void for_each_in_ball(Index center, double r, bool closed, Fn&& fn) const {
    if (interval_) {
      const Index t_max = offset_bound(r, closed);
      const Index lo = std::max<Index>(0, center - t_max + 1);
      const Index hi = std::min<Index>(n_ - 1, center + t_max - 1);
      for (Index j = lo; j <= hi; ++j) {
        if (j != center) fn(j, dist(center, j));
      }
      return;
    }
    const auto row = sorted_row(center);
    const auto order = sorted_order(center);
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double d = row[k];
      if (closed ? d > r : d >= r) break;
      const Index j = order[k];
      if (j != center) fn(j, d);
    }
  }

  /// Smallest positive distance between two points.
  double min_positive_distance() const { return min_positive_; }

 private:
  MetricMeasureSpace() = default;
  std::span<const double> sorted_row(Index i) const;
  std::span<const Index> sorted_order(Index i) const;
  void finalize();

  Index n_ = 0;
  bool interval_ = false;
  Matrix dist_;
  Vector mass_;
  Vector coords_;
  Vector weights_;
  Vector prefix_;  // interval: prefix_[k] = sum of mass_[0..k-1]
  std::vector<double> row_dist_;
  std::vector<Index> row_order_;
  std::vector<double> row_cum_;  // N x (N+1)
  double total_mass_ = 0.0;
  double diam_ = 0.0;
  double min_positive_ = 0.0;
};

/// Ball-mass lookups, optionally restricted to a mask (mu restricted to Omega).
class BallMeasure {
 public:
  explicit BallMeasure(const MetricMeasureSpace& space,
                       const DomainMask* restrict_to = nullptr);

  double operator()(Index center, double r, bool closed = false) const;
  const MetricMeasureSpace& space() const { return *space_; }

 private:
  const MetricMeasureSpace* space_;
  std::optional<DomainMask> mask_;
  Vector prefix_;
};

enum class MorphMode { dilate, erode };

/// Interval mask {x : lo <= coord(x) <= hi} on an interval space.
DomainMask interval_mask(const MetricMeasureSpace& space, double lo, double hi);

/// erode: {x in U : d(x, X \ U) > delta};  dilate: {x : d(x, U) < delta}.
DomainMask morph_mask(const MetricMeasureSpace& space, const DomainMask& mask,
                      double delta, MorphMode mode);

/// Largest observed mu(B(x, 2r)) / mu(B(x, r)) over centers and radii.
/// With max_centers > 0 the centers are an evenly strided subset.
double estimate_doubling(const MetricMeasureSpace& space, std::span<const double> scales,
                         Index max_centers = 0);

/// A test function for the Poincare estimator together with its
/// upper-gradient surrogate.
struct PoincareTest {
  GridFunction f;
  std::optional<GridFunction> gradient;
};

struct PoincareEstimate {
  double c_p = 0.0;   // lower bound on C_P
  double lambda = 1.0;
  double p = 1.0;
  Index n_tests = 0;
  Index violations = 0;  // balls with positive oscillation but zero gradient energy
};

/// |discrete slope|: symmetric differences inside, one-sided at the ends.
GridFunction slope_magnitude(const MetricMeasureSpace& space, const GridFunction& f);

/// Ramps, one-cell-smoothed steps and random piecewise-linear functions, each
/// with its slope surrogate.
std::vector<PoincareTest> standard_poincare_tests(const MetricMeasureSpace& space,
                                                  std::uint64_t seed = 0,
                                                  int n_random = 4);

PoincareEstimate estimate_poincare(const MetricMeasureSpace& space, double p,
                                   std::span<const PoincareTest> tests,
                                   std::span<const double> radii, double lambda = 1.0,
                                   Index max_centers = 0);

}  // namespace nonlocal
