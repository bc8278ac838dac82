#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "mmrac/types.hpp"

namespace mmrac {

/// Input vector b = [0, ..., 0, 1]^T paired with every companion matrix.
template <typename Scalar>
Vector<Scalar> input_vector(Index m) {
  Vector<Scalar> b = Vector<Scalar>::Zero(m);
  b(m - 1) = Scalar(1);
  return b;
}

/// Companion matrix of a parameter row: ones on the superdiagonal,
/// theta^T as the last row, zeros elsewhere. For m = 1 this is just
/// [[theta_1]].
template <typename Derived>
Matrix<typename Derived::Scalar> companion(const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  const Index m = theta.size();
  if (m < 1) throw std::invalid_argument("companion: empty parameter vector");
  Matrix<Scalar> a = Matrix<Scalar>::Zero(m, m);
  for (Index i = 0; i + 1 < m; ++i) a(i, i + 1) = Scalar(1);
  a.row(m - 1) = theta.transpose();
  return a;
}

/// Solve A x = rhs by LU with partial pivoting. Throws SingularMatrixError
/// when the smallest pivot falls below 1e-12 relative to the magnitude of A,
/// which in this library typically means a degenerate vertex set or an
/// error matrix evaluated at t0 where all identification errors vanish.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> solve_linear(const Eigen::MatrixBase<DerivedA>& a,
                                               const Eigen::MatrixBase<DerivedB>& rhs) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols()) throw std::invalid_argument("solve_linear: matrix not square");
  if (a.rows() != rhs.size()) throw std::invalid_argument("solve_linear: dimension mismatch");

  const Matrix<Scalar> dense = a;
  const Scalar scale = dense.cwiseAbs().maxCoeff();
  if (!(scale > Scalar(0))) throw SingularMatrixError("solve_linear: zero matrix");

  Eigen::PartialPivLU<Matrix<Scalar>> lu(dense);
  const Scalar min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (min_pivot < Scalar(1e-12) * scale)
    throw SingularMatrixError("solve_linear: pivot below 1e-12 relative threshold");
  return lu.solve(rhs.eval());
}

/// Solve A_m^T P + P A_m = -Q for symmetric positive definite P via the
/// Kronecker-sum vectorization (I (x) A^T + A^T (x) I) vec(P) = -vec(Q).
/// The m^2 x m^2 dense solve is cheap at the dimensions used here.
/// Throws NotStableError when A_m is not Hurwitz: the vectorized system is
/// singular, the residual check fails, or the solution is not positive
/// definite.
template <typename DerivedA, typename DerivedQ>
Matrix<typename DerivedA::Scalar> solve_lyapunov(const Eigen::MatrixBase<DerivedA>& a_m,
                                                 const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedA::Scalar;
  const Index m = a_m.rows();
  if (a_m.cols() != m) throw std::invalid_argument("solve_lyapunov: matrix not square");
  if (q.rows() != m || q.cols() != m) throw std::invalid_argument("solve_lyapunov: Q dimension mismatch");

  const Matrix<Scalar> at = a_m.transpose();
  Matrix<Scalar> kron_sum = Matrix<Scalar>::Zero(m * m, m * m);
  // kron(I, A^T): block-diagonal copies of A^T.
  for (Index j = 0; j < m; ++j) kron_sum.block(j * m, j * m, m, m) = at;
  // kron(A^T, I): scalar A^T(i, j) times identity per block.
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      kron_sum.block(i * m, j * m, m, m).diagonal().array() += at(i, j);

  Matrix<Scalar> neg_q = -q;
  Vector<Scalar> vec_q = Eigen::Map<Vector<Scalar>>(neg_q.data(), m * m);

  Vector<Scalar> vec_p;
  try {
    vec_p = solve_linear(kron_sum, vec_q);
  } catch (const SingularMatrixError&) {
    throw NotStableError("solve_lyapunov: vectorized system singular (matrix not Hurwitz)");
  }

  Matrix<Scalar> p = Eigen::Map<Matrix<Scalar>>(vec_p.data(), m, m);
  p = ((p + p.transpose()) / Scalar(2)).eval();

  const Scalar q_scale = q.cwiseAbs().maxCoeff();
  const Scalar residual = (a_m.transpose() * p + p * a_m + q).cwiseAbs().maxCoeff();
  if (residual > Scalar(1e-10) * q_scale)
    throw NotStableError("solve_lyapunov: residual check failed");

  Eigen::LLT<Matrix<Scalar>> llt(p);
  if (llt.info() != Eigen::Success)
    throw NotStableError("solve_lyapunov: solution not positive definite (matrix not Hurwitz)");
  return p;
}

/// One classical 4th-order Runge-Kutta step for x' = f(t, x).
/// Deterministic for identical inputs; throws NonFiniteStateError when the
/// update leaves the finite range, which signals divergence of the
/// integrated system rather than a fault of the stepper.
template <typename Scalar, typename Rhs>
Vector<Scalar> rk4_step(Rhs&& f, Scalar t, const Vector<Scalar>& x, Scalar h) {
  if (!(h > Scalar(0))) throw std::invalid_argument("rk4_step: step must be positive");
  const Scalar half = h / Scalar(2);
  const Vector<Scalar> k1 = f(t, x);
  const Vector<Scalar> k2 = f(t + half, (x + half * k1).eval());
  const Vector<Scalar> k3 = f(t + half, (x + half * k2).eval());
  const Vector<Scalar> k4 = f(t + h, (x + h * k3).eval());
  Vector<Scalar> next = x + (h / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
  if (!next.allFinite()) throw NonFiniteStateError("rk4_step: non-finite state");
  return next;
}

}  // namespace mmrac
