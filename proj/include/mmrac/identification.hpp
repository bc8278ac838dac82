#pragma once

#include <Eigen/Dense>

#include <vector>

#include "mmrac/numerics.hpp"
#include "mmrac/types.hpp"

namespace mmrac {

enum class ModelMode { Fixed, Adaptive };

/// One identification model: a companion-form system sharing the stable
/// matrix A_m, with parameter row theta (constant in Fixed mode).
struct IdentModel {
  Vectord theta;
  Vectord state;
  ModelMode mode = ModelMode::Fixed;
};

/// N identification models run in parallel against one plant. P is the
/// Lyapunov solution for A_m used by the gradient laws.
struct Ensemble {
  std::vector<IdentModel> models;
  Vectord theta_m;
  Matrixd P;
  double adapt_gain = 10.0;
};

/// Identification-model dynamics
///   x_i' = A_m x_i + (A_i - A_m) x_p + b u.
/// Both matrices are companion, so (A_i - A_m) x_p collapses to
/// b (theta_i - theta_m)^T x_p.
template <typename DerivedXi, typename DerivedTi, typename DerivedXp, typename DerivedTm>
Vector<typename DerivedXi::Scalar> ident_dynamics(const Eigen::MatrixBase<DerivedXi>& x_i,
                                                  const Eigen::MatrixBase<DerivedTi>& theta_i,
                                                  const Eigen::MatrixBase<DerivedXp>& x_p,
                                                  typename DerivedXi::Scalar u,
                                                  const Eigen::MatrixBase<DerivedTm>& theta_m) {
  using Scalar = typename DerivedXi::Scalar;
  const Index m = x_i.size();
  Vector<Scalar> dx(m);
  dx.head(m - 1) = x_i.tail(m - 1);
  dx(m - 1) = theta_m.dot(x_i) + (theta_i - theta_m).dot(x_p) + u;
  return dx;
}

inline Vectord ident_dynamics(const IdentModel& model, const Vectord& x_p, double u,
                              const Vectord& theta_m) {
  return ident_dynamics(model.state, model.theta, x_p, u, theta_m);
}

/// Error dynamics e_i' = A_m e_i + b phi_i^T x_p with phi_i = theta_i - theta_p.
/// The simulator obtains e_i directly as x_i - x_p; this form is kept as the
/// independent route for consistency tests.
template <typename DerivedE, typename DerivedPhi, typename DerivedXp, typename DerivedTm>
Vector<typename DerivedE::Scalar> error_dynamics(const Eigen::MatrixBase<DerivedE>& e_i,
                                                 const Eigen::MatrixBase<DerivedPhi>& phi_i,
                                                 const Eigen::MatrixBase<DerivedXp>& x_p,
                                                 const Eigen::MatrixBase<DerivedTm>& theta_m) {
  using Scalar = typename DerivedE::Scalar;
  const Index m = e_i.size();
  Vector<Scalar> de(m);
  de.head(m - 1) = e_i.tail(m - 1);
  de(m - 1) = theta_m.dot(e_i) + phi_i.dot(x_p);
  return de;
}

/// Gradient adaptive law theta_i' = -gain * (e_i^T P b) x_p. Note e^T P b is
/// just the dot product of e with the last column of P.
template <typename DerivedE, typename DerivedP, typename DerivedXp>
Vector<typename DerivedE::Scalar> adaptive_law(const Eigen::MatrixBase<DerivedE>& e_i,
                                               const Eigen::MatrixBase<DerivedP>& P,
                                               const Eigen::MatrixBase<DerivedXp>& x_p,
                                               typename DerivedE::Scalar gain) {
  const auto scalar = e_i.dot(P.col(P.cols() - 1));
  return (-gain * scalar) * x_p;
}

/// Direct-MRAC gain update k' = -gain * (e_c^T P b) x_p; the same kernel as
/// adaptive_law driven by the control error instead of an identification
/// error.
template <typename DerivedE, typename DerivedP, typename DerivedXp>
Vector<typename DerivedE::Scalar> direct_mrac_update(const Eigen::MatrixBase<DerivedE>& e_c,
                                                     const Eigen::MatrixBase<DerivedP>& P,
                                                     const Eigen::MatrixBase<DerivedXp>& x_p,
                                                     typename DerivedE::Scalar gain) {
  return adaptive_law(e_c, P, x_p, gain);
}

/// Control input u = r + k^T x_p.
template <typename DerivedK, typename DerivedXp>
typename DerivedK::Scalar control_input(const Eigen::MatrixBase<DerivedK>& k,
                                        const Eigen::MatrixBase<DerivedXp>& x_p,
                                        typename DerivedK::Scalar r) {
  return r + k.dot(x_p);
}

/// Certainty-equivalence gain for indirect control: k = theta_m - theta_hat.
template <typename DerivedTm, typename DerivedTh>
Vector<typename DerivedTm::Scalar> indirect_gain(const Eigen::MatrixBase<DerivedTm>& theta_m,
                                                 const Eigen::MatrixBase<DerivedTh>& theta_hat) {
  return theta_m - theta_hat;
}

}  // namespace mmrac
