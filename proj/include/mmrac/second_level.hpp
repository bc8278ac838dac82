#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "mmrac/numerics.hpp"
#include "mmrac/plant.hpp"
#include "mmrac/types.hpp"

namespace mmrac {

/// Convex-combination estimate. The reduced vector holds the first m
/// weights; the last weight is pinned to 1 - sum so the full vector always
/// satisfies the affine constraint by construction. Entries may leave [0, 1]
/// during transients.
struct AlphaEstimate {
  Vectord bar;   // length m
  Vectord full;  // length m + 1
};

/// Appends the affinely-determined last weight. Accumulation is sequential
/// so the constraint can be re-verified bit-for-bit.
inline Vectord complete_alpha(const Vectord& bar) {
  double partial = 0.0;
  for (Index i = 0; i < bar.size(); ++i) partial += bar(i);
  Vectord full(bar.size() + 1);
  full.head(bar.size()) = bar;
  full(bar.size()) = 1.0 - partial;
  return full;
}

inline AlphaEstimate make_alpha(Vectord bar) {
  AlphaEstimate est;
  est.full = complete_alpha(bar);
  est.bar = std::move(bar);
  return est;
}

/// m + 1 simplex vertices in parameter space, stored as the columns of an
/// m x (m+1) matrix. The differences theta_i - theta_{m+1} must be linearly
/// independent.
struct VertexSet {
  Matrixd theta;  // m x N, one vertex per column

  Index dim() const { return theta.rows(); }
  Index count() const { return theta.cols(); }
  Vectord centroid() const { return theta.rowwise().mean(); }
};

/// Builds the error matrix E whose i-th column is x_i - x_{m+1}, together
/// with e_last = x_{m+1} - x_p. E depends only on model states, never on the
/// plant output; the plant enters solely through e_last.
inline std::pair<Matrixd, Vectord> build_error_matrix(const std::vector<Vectord>& model_states,
                                                      const Vectord& x_p) {
  const Index n = static_cast<Index>(model_states.size());
  if (n < 2) throw std::invalid_argument("build_error_matrix: need at least two model states");
  const Index m = model_states.front().size();
  const Vectord& last = model_states.back();
  Matrixd e(m, n - 1);
  for (Index i = 0; i + 1 < n; ++i) e.col(i) = model_states[static_cast<std::size_t>(i)] - last;
  return {std::move(e), last - x_p};
}

/// One-shot estimate alpha_bar = -E^{-1} e_{m+1}. Propagates
/// SingularMatrixError, which occurs at t0 (all errors zero) or with
/// degenerate vertices.
inline AlphaEstimate algebraic_alpha(const Matrixd& e_matrix, const Vectord& e_last) {
  return make_alpha(solve_linear(e_matrix, (-e_last).eval()));
}

/// Right-hand side of the estimator ODE
///   alpha_hat' = gain * (-E^T E alpha_hat - E^T e_{m+1}).
/// The true reduced weights are an equilibrium, and V = |alpha_err|^2 / 2
/// decreases along trajectories at rate |E alpha_err|^2.
inline Vectord alpha_ode_rhs(const Vectord& alpha_hat, const Matrixd& e_matrix,
                             const Vectord& e_last, double gain) {
  return -gain * (e_matrix.transpose() * (e_matrix * alpha_hat + e_last));
}

/// Two-instant solve for adaptive models: the columns of Phi are
/// theta_i(t) - theta_{m+1}(t), and
///   [Phi(t1) - Phi(t2)] alpha_bar = theta_{m+1}(t2) - theta_{m+1}(t1).
/// Throws SingularMatrixError when the snapshots are too close for the
/// parameter trajectories to have moved.
inline AlphaEstimate two_instant_alpha(const Matrixd& phi_t1, const Matrixd& phi_t2,
                                       const Vectord& theta_last_t1, const Vectord& theta_last_t2) {
  return make_alpha(solve_linear(phi_t1 - phi_t2, theta_last_t2 - theta_last_t1));
}

/// theta_hat = Theta * alpha_full, where Theta's columns are the current
/// model parameter vectors (the fixed vertices, in fixed mode).
inline Vectord reconstruct_theta(const Matrixd& theta_columns, const Vectord& alpha_full) {
  return theta_columns * alpha_full;
}

/// Second-level feedback gain k = theta_m - Theta * alpha_full.
inline Vectord second_level_gain(const Vectord& theta_m, const Matrixd& theta_columns,
                                 const Vectord& alpha_full) {
  return theta_m - reconstruct_theta(theta_columns, alpha_full);
}

/// Barycentric coordinates of theta_p with respect to the vertex set: the
/// unique alpha with Theta alpha = theta_p and sum(alpha) = 1. This is the
/// ground-truth oracle for every weight estimate.
inline Vectord barycentric(const VertexSet& vertices, const Vectord& theta_p) {
  const Index m = vertices.dim();
  const Index n = vertices.count();
  if (theta_p.size() != m) throw std::invalid_argument("barycentric: dimension mismatch");
  Matrixd system(m + 1, n);
  system.topRows(m) = vertices.theta;
  system.bottomRows(1).setOnes();
  if (n != m + 1) throw std::invalid_argument("barycentric: need m + 1 vertices");
  Vectord rhs(m + 1);
  rhs.head(m) = theta_p;
  rhs(m) = 1.0;
  return solve_linear(system, rhs);
}

inline bool in_hull(const VertexSet& vertices, const Vectord& theta_p) {
  const Vectord alpha = barycentric(vertices, theta_p);
  return (alpha.array() >= -1e-12).all() && (alpha.array() <= 1.0 + 1e-12).all();
}

/// Simplex with m + 1 vertices containing the whole hypercube: from the
/// lower corner c with side lengths d_i, vertex i is c + m*(1+margin)*d_i*e_i
/// and the final vertex is c - margin*1. Every box corner then has
/// nonnegative barycentric coordinates (strictly positive for margin > 0);
/// this is re-verified over all 2^m corners before returning.
inline VertexSet default_vertices(const Hypercube& box, double margin = 0.1) {
  const Index m = box.lower.size();
  if (m < 1 || box.upper.size() != m) throw std::invalid_argument("default_vertices: bad box");
  const Vectord sides = box.upper - box.lower;
  if ((sides.array() <= 0.0).any())
    throw DegenerateBoxError("default_vertices: box has a non-positive side");

  VertexSet set;
  set.theta.resize(m, m + 1);
  for (Index i = 0; i < m; ++i) {
    Vectord v = box.lower;
    v(i) += static_cast<double>(m) * (1.0 + margin) * sides(i);
    set.theta.col(i) = v;
  }
  set.theta.col(m) = box.lower.array() - margin;

  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << m); ++mask) {
    Vectord corner = box.lower;
    for (Index i = 0; i < m; ++i)
      if (mask & (std::uint64_t(1) << i)) corner(i) = box.upper(i);
    if (!in_hull(set, corner))
      throw DegenerateBoxError("default_vertices: corner containment check failed");
  }
  return set;
}

}  // namespace mmrac
