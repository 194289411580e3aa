#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nonlocal/core.hpp"
#include "nonlocal/space.hpp"

namespace nonlocal {

struct EnergyReport {
  double p = 1.0;
  double value = 0.0;
  std::string variant;            // "raw", "lsc", "relaxed" or "sobolev"
  std::optional<double> delta;    // envelope radius for tv
  Vector per_edge;                // tv: N-1 edge terms; sobolev: N cell terms

  struct CurvePoint {
    double eps;
    double value;
    double lambda;
  };
  std::vector<CurvePoint> curve;  // tv_relax only, in schedule order
};

/// Edge weights min{w_j : cell j within distance delta of the edge point}.
/// delta = 0 gives min(w_k, w_{k+1}).
Vector tv_edge_weights(const MetricMeasureSpace& space, double delta);

/// Sum over adjacent cells of |f_{k+1} - f_k| times the enveloped edge weight.
EnergyReport tv(const GridFunction& f, const MetricMeasureSpace& space, double delta = 0.0);

/// For each eps: min sum_k |h_{k+1} - h_k| min(w_k, w_{k+1}) subject to
/// sum_k |h_k - f_k| h <= eps. Solved through the Lagrangian dual; every
/// Lagrangian subproblem splits into binary level-set problems that are solved
/// exactly by dynamic programming.
EnergyReport tv_relax(const GridFunction& f, const MetricMeasureSpace& space,
                      const std::vector<double>& eps_schedule, double rel_tol = 1e-4,
                      int workers = 1);

/// Sum of |slope_k|^p times the cell mass; central differences inside, one-sided at the ends.
EnergyReport sobolev_energy(const GridFunction& f, const MetricMeasureSpace& space, double p);

/// p = 1: tv with envelope delta; p > 1: sobolev_energy.
EnergyReport energy(const GridFunction& f, const MetricMeasureSpace& space, double p,
                    double delta = 0.0);

}  // namespace nonlocal
