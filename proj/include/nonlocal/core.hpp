#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace nonlocal {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Real values attached to the points of a space, in point-index order.
using GridFunction = Eigen::VectorXd;

/// Boolean membership per point of a space.
using DomainMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: violated precondition, malformed data, out-of-range parameter.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Two quantities that must agree do not (e.g. zero energy but a nonzero functional).
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

inline DomainMask full_mask(Index n) { return DomainMask::Constant(n, true); }

}  // namespace nonlocal
