#pragma once

#include <vector>

#include "nonlocal/core.hpp"
#include "nonlocal/space.hpp"

namespace nonlocal {

/// Bounded-overlap covering of U(5R) by balls B_j = B(x_j, R) whose seed
/// balls B(x_j, R/5) are pairwise disjoint.
struct Covering {
  std::vector<Index> centers;
  double radius = 0.0;
  double seed_radius = 0.0;
  DomainMask target;             // U(5R), the set the balls cover
  std::vector<int> overlap_class;  // per ball; balls 5B_j of one class are pairwise disjoint
  int n_classes = 0;
  int max_multiplicity = 0;      // most balls 2B_j containing one target point
  double c_d_assumed = 2.0;
  double c0_bound = 0.0;         // 3 C_d^8 with the assumed C_d
};

/// Greedy maximal selection in ascending point order. With `omega` the scale
/// must satisfy R < dist(U, X \ Omega)/10, otherwise R < diam.
Covering cover(const MetricMeasureSpace& space, const DomainMask& u_mask, double R,
               const DomainMask* omega = nullptr, double c_d_assumed = 2.0);

struct PartitionOfUnity {
  Matrix phi;                   // N x J, column j is phi_j
  double lipschitz_bound = 0.0; // C_0 / R
  Vector measured_lipschitz;    // per ball
};

/// phi_j = psi_j / sum_k psi_k on the target, psi_j = clamp(2 - d(x, x_j)/R, 0, 1).
PartitionOfUnity partition_of_unity(const MetricMeasureSpace& space, const Covering& covering);

/// h = sum_j f_{B_j} phi_j, zero off the covered set.
GridFunction discrete_convolve(const MetricMeasureSpace& space, const GridFunction& f,
                               const Covering& covering, const PartitionOfUnity& pou);

/// Larger of the two one-sided difference quotients at each cell (interval spaces).
GridFunction lip_number(const MetricMeasureSpace& space, const GridFunction& h);

struct LipBoundReport {
  double R = 0.0;
  double p = 1.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double measured_constant = 0.0;
  double theoretical_constant = 0.0;
  bool pass = false;
};

/// lhs = int_U (lip h)^p; rhs = (10R)^-p sum over Omega^2 of |f(x)-f(y)|^p 1{d < 10R}/mu(B(y, 10R)).
LipBoundReport verify_lip_bound(const MetricMeasureSpace& space, const GridFunction& f,
                                const DomainMask& u_mask, const Covering& covering,
                                const PartitionOfUnity& pou, double p,
                                const DomainMask* omega = nullptr, int workers = 1);

}  // namespace nonlocal
