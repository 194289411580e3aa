#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nonlocal/core.hpp"
#include "nonlocal/space.hpp"

namespace nonlocal {

enum class KernelKind { fractional, window, indicator, custom };
enum class Normalization { mu_ball, lebesgue_1d };

std::string to_string(KernelKind kind);
std::string to_string(Normalization norm);

/// Positive Radon measure nu on [0, inf), given either by a density or by atoms.
///
/// Densities are supplied in logarithmic form, lambda -> log(t * dnu/dt) at
/// t = exp(lambda), so that measures concentrating at extremely small t (the
/// fractional family as s -> 1) stay representable in double precision.
class NuMeasure {
 public:
  static NuMeasure from_log_density(std::function<double(double)> log_density);
  static NuMeasure atomic(std::vector<std::pair<double, double>> atoms);

  /// int_{[0, delta]} t^p dnu, by quadrature for densities.
  double moment(double p, double delta) const;
  /// nu((d, inf)).
  double tail(double d) const;

 private:
  std::function<double(double)> log_density_;
  std::vector<std::pair<double, double>> atoms_;
};

/// A sequence of kernels rho_i(x, y), i = 0 .. size()-1.
///
/// Kernels depend on (d(x, y), ball masses around y) only. Evaluation is pure
/// and thread-safe.
class MollifierFamily {
 public:
  struct Support {
    double radius;
    bool closed;  // rho vanishes for d > radius (closed) or d >= radius (open)
  };

  /// Custom kernel: (ball measure, y, d, i) -> rho_i.
  using KernelFn = std::function<double(const BallMeasure&, Index, double, std::size_t)>;

  struct TableEntry {
    std::size_t index;
    int shell;  // j >= 1: 2^-j <= d < 2^-j+1
    double value;
  };

  /// rho_i = (1 - s_i) d^{p(1 - s_i)} / mu(B(y, d)); zero on the diagonal.
  static MollifierFamily fractional(double p, std::vector<double> s);
  /// rho_i = r_i^{-p} d^p 1{d < r_i} / mu(B(y, r_i)).
  static MollifierFamily window(double p, std::vector<double> r);
  /// mu_ball: 1{d < r_i} / mu(B(y, r_i)); lebesgue_1d: 1{d <= r_i} / (2 r_i).
  /// The kernel does not depend on p; p is the exponent of the functional it is used with.
  static MollifierFamily indicator(std::vector<double> r, Normalization norm, double p = 1.0);
  /// rho_i = value(i, j) / mu(B(y, 2^{-j+1})) on dyadic shell j, zero for d >= 1.
  static MollifierFamily tabulated(double p, std::size_t n_indices,
                                   std::vector<TableEntry> table);
  /// rho_i = 1{|d - center| < halfwidth} / mu(annulus around y), the same for every i.
  static MollifierFamily ring(double p, double center, double halfwidth,
                              std::size_t n_indices);
  static MollifierFamily custom(std::string name, double p, std::vector<double> params,
                                KernelFn kernel, std::optional<Support> support = {},
                                std::vector<NuMeasure> nu = {});

  KernelKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double p() const { return p_; }
  Normalization normalization() const { return norm_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t size() const { return size_; }

  double operator()(const BallMeasure& mu, Index y, double d, std::size_t i) const;
  double at(const MetricMeasureSpace& space, Index x, Index y, std::size_t i) const;

  std::optional<Support> support(std::size_t i) const;
  /// r_i of the first lower-bound option, for families that have one.
  std::optional<double> lower_radius(std::size_t i) const;
  /// Declared nu_i for the second lower-bound option, if any.
  const NuMeasure* nu(std::size_t i) const;

  /// Kernel mass that falls inside the cell of an interval space atom y when
  /// the atom is spread uniformly over its cell. Zero on matrix spaces.
  double diagonal_mass(const BallMeasure& mu, Index y, std::size_t i) const;

  /// Throws when the family cannot be used on this space.
  void require_compatible(const MetricMeasureSpace& space) const;

 private:
  MollifierFamily() = default;

  KernelKind kind_ = KernelKind::custom;
  std::string name_;
  double p_ = 1.0;
  Normalization norm_ = Normalization::mu_ball;
  std::vector<double> params_;
  std::size_t size_ = 0;
  KernelFn custom_;
  std::optional<Support> custom_support_;
  std::vector<NuMeasure> nu_;
  std::vector<std::vector<double>> table_;  // [i][j-1]
};

struct DyadicMajorant {
  std::vector<double> coeffs;  // coeffs[j - 1] = d_{i,j}
  double sum = 0.0;
  int truncation_depth = 0;    // finest shell holding a representable pair
};

/// d_{i,j} = sup over pairs in shell j of rho_i(x, y) mu(B(y, 2^{-j+1})).
DyadicMajorant dyadic_majorant(const MollifierFamily& family, const MetricMeasureSpace& space,
                               std::size_t i, int workers = 1);

struct AdmissibilityOptions {
  int workers = 1;
  Index max_pairs = 4'000'000;  // beyond this the lower-bound pairs are sampled
  std::uint64_t seed = 0;
  int tail_window = 3;
};

struct AdmissibilityReport {
  std::vector<std::string> lower_option;  // "A", "B" or "fail" per index
  std::vector<double> lower_constant;     // option A constant, 1 for option B
  std::vector<double> deltas;
  std::vector<std::vector<double>> nu_mass;  // [delta][i]; empty without declared nu
  std::vector<double> nu_liminf;             // per delta, min over the trailing window
  std::vector<DyadicMajorant> majorants;
  std::vector<double> majorant_sums;
  std::vector<std::vector<double>> tail_decay;  // [delta][i]
  bool lower_ok = false;
  bool nu_ok = false;
  bool majorant_ok = false;
  bool tail_ok = false;
  double c_rho = 1.0;
  bool pass = false;
  std::vector<std::string> failures;
};

AdmissibilityReport check_admissibility(const MollifierFamily& family,
                                        const MetricMeasureSpace& space,
                                        const std::vector<double>& deltas,
                                        const DomainMask& tail_domain,
                                        const AdmissibilityOptions& options = {});

}  // namespace nonlocal
