#pragma once

#include <cstdint>
#include <vector>

#include "nonlocal/core.hpp"
#include "nonlocal/space.hpp"

namespace nonlocal {

/// Closed or open interval [lo, hi] / (lo, hi) with endpoints lo/2^e, hi/2^e.
struct DyadicInterval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

/// Fat Cantor construction truncated at depth m: A_0 = [0, 1] and A_i is A_{i-1}
/// with the open middle gaps D_i (2^{i-1} intervals of length 2^{-2i}) removed.
struct FatCantorSpec {
  int depth = 0;
  int exponent = 0;  // every endpoint is an integer multiple of 2^-exponent
  std::vector<std::vector<DyadicInterval>> components;  // [i] components of A_i, i = 0..m
  std::vector<std::vector<DyadicInterval>> gaps;        // [i] intervals of D_i, i = 1..m; [0] empty
  std::vector<double> lengths;                          // L_0 .. L_m
  double limit = 0.5;

  double scale() const { return std::ldexp(1.0, -exponent); }
  /// Whether x = num/den lies in the closed set A_m.
  bool in_set(std::int64_t num, std::int64_t den) const;
  /// Whether x = num/den lies in the open gaps D_i.
  bool in_gap(int i, std::int64_t num, std::int64_t den) const;
};

FatCantorSpec fat_cantor(int m);

/// Weighted interval with w = 2 on cells whose center lies in A_m, 1 elsewhere.
MetricMeasureSpace cantor_space(const FatCantorSpec& spec, Index n_cells);

struct CantorFunctions {
  GridFunction f;                       // cumulative integral of 2 chi_{A_m}
  std::vector<GridFunction> approximants;  // [i] for i = 1..m; [0] empty
  std::vector<GridFunction> densities;     // g_i on cells, same indexing
};

/// Midpoint cumulative sums against the cell length.
CantorFunctions cantor_function(const FatCantorSpec& spec, const MetricMeasureSpace& space);

/// Tent of height `height` on (a, b), evaluated at cell centers.
GridFunction tent_function(const MetricMeasureSpace& space, double a, double b, double height = 1.0);

struct CounterexampleReport {
  int depth = 0;
  Index n_cells = 0;
  std::vector<double> radii;
  std::vector<double> functional_values;
  std::vector<bool> resolved;  // r < 2^{-2m}
  double tv_reference = 1.0;
  double tv_discrete_delta0 = 0.0;
  double tv_discrete_gapscale = 0.0;
  double gap_scale = 0.0;
  double predicted_limit = 0.0;  // 8 L_m
  double epsilon = 0.05;
  bool lower_bound_check = false;
  double bump_functional = 0.0;
  double bump_tv = 0.0;
  double bump_ratio = 0.0;
  double seconds = 0.0;
};

CounterexampleReport run_counterexample(int m, Index n_cells, const std::vector<double>& radii,
                                        double epsilon = 0.05, int workers = 1);

}  // namespace nonlocal
