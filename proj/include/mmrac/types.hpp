#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mmrac {

/// Dense column-major dynamic-size types, templated on the scalar.
/// All public math in this library is expressed over these (or over
/// Eigen expressions that evaluate to them).
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = Matrix<double>;
using Vectord = Vector<double>;

using Index = Eigen::Index;

// Failure conditions surfaced by the library. Solvers and the simulation
// driver throw; callers that can degrade gracefully (e.g. per-sample
// algebraic estimation) catch SingularMatrixError and move on.

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotStableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateBoxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmrac
