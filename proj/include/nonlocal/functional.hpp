#pragma once

#include <optional>
#include <vector>

#include "nonlocal/core.hpp"
#include "nonlocal/energy.hpp"
#include "nonlocal/mollifier.hpp"
#include "nonlocal/space.hpp"

namespace nonlocal {

/// Where kernels take their ball masses mu(B(y, .)).
enum class BallDomain { full, omega };

struct EvaluateOptions {
  int workers = 1;
  /// Enumerate only pairs inside the kernel support (or the majorant cutoff
  /// for unbounded kernels). Off: every pair of Omega x Omega.
  bool prune = true;
  /// Add the kernel mass of each atom's own cell, |slope(y)|^p times
  /// diagonal_mass. Defaults to on for interval spaces.
  std::optional<bool> diagonal_correction;
  BallDomain ball_domain = BallDomain::full;
  double cutoff_tol = 1e-6;
};

struct Evaluation {
  double value = 0.0;
  Index pairs = 0;               // off-diagonal pairs enumerated
  std::optional<double> cutoff;  // distance cutoff for unbounded kernels
  double seconds = 0.0;
  bool empty_omega = false;
};

/// sum over x != y in Omega of |f(x) - f(y)|^p / d^p rho_i(x, y) m_x m_y, with p = family.p().
Evaluation evaluate(const MetricMeasureSpace& space, const GridFunction& f,
                    const MollifierFamily& family, std::size_t i, const DomainMask& omega,
                    const EvaluateOptions& options = {});

/// Distance beyond which the dyadic majorant of an unbounded kernel carries
/// less than `tol` of the retained coefficient mass; nullopt keeps every pair.
std::optional<double> majorant_cutoff(const MollifierFamily& family,
                                      const MetricMeasureSpace& space, std::size_t i,
                                      double tol, int workers = 1);

struct SweepResult {
  std::vector<double> index_params;
  std::vector<double> values;
  std::vector<Index> pairs;
  std::vector<double> seconds;
  std::vector<std::optional<double>> cutoffs;
  double tail_lo = 0.0;
  double tail_hi = 0.0;
  int window = 3;
};

SweepResult sweep(const MetricMeasureSpace& space, const GridFunction& f,
                  const MollifierFamily& family, const DomainMask& omega, int window = 3,
                  const EvaluateOptions& options = {});

struct ConstantEstimate {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  bool degenerate = false;  // zero energy and zero functional
  EnergyReport energy_ref;
};

ConstantEstimate estimate_constants(const SweepResult& sweep, const EnergyReport& energy);

}  // namespace nonlocal
