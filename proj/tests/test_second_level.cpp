#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mmrac/scenario.hpp"
#include "mmrac/second_level.hpp"
#include "oracles.hpp"

using namespace mmrac;

namespace {

Matrixd example1_vertices() {
  Matrixd verts(2, 3);
  verts.col(0) << -10.0, -10.0;
  verts.col(1) << 15.0, -10.0;
  verts.col(2) << 5.0, 15.0;
  return verts;
}

// Independently derived barycentric weights of theta_p = [5, 3] in the
// example-1 triangle: the 3x3 system solved by hand gives exactly
// [0.192, 0.288, 0.520].
const double kAlpha1 = 0.192;
const double kAlpha2 = 0.288;
const double kAlpha3 = 0.520;

ScenarioConfig open_loop_fixed(const Vectord& theta_p, double t_end) {
  ScenarioConfig config;
  config.name = "open_loop_fixed";
  config.plant.profile = ParameterProfile::constant(theta_p);
  config.reference.theta_m = (Vectord(2) << -1.0, -3.0).finished();
  config.controller = ControllerKind::SecondLevelAlgebraic;
  config.t_star = 1e9;  // estimation only, no control hand-off
  config.model_mode = ModelMode::Fixed;
  config.vertices = example1_vertices();
  config.t_end = t_end;
  return config;
}

}  // namespace

TEST_CASE("complete_alpha pins the affine constraint") {
  const Vectord bar = (Vectord(2) << 0.3, 0.45).finished();
  const Vectord full = complete_alpha(bar);
  CHECK(full.size() == 3);
  double partial = 0.0;
  for (Index i = 0; i < 2; ++i) partial += full(i);
  CHECK(full(2) == 1.0 - partial);
  CHECK(std::abs(full.sum() - 1.0) <= 1e-15);
}

TEST_CASE("build_error_matrix examples") {
  const Vectord x_p = (Vectord(2) << 0.4, -0.1).finished();
  std::vector<Vectord> equal(3, (Vectord(2) << 1.0, 2.0).finished());
  const auto [e_zero, e_last_zero] = build_error_matrix(equal, x_p);
  CHECK(e_zero.cwiseAbs().maxCoeff() == 0.0);
  CHECK((e_last_zero - (equal[2] - x_p)).norm() == 0.0);

  std::vector<Vectord> states = {(Vectord(2) << 1.0, 0.0).finished(),
                                 (Vectord(2) << 0.0, 1.0).finished(), Vectord::Zero(2)};
  const auto [e, e_last] = build_error_matrix(states, Vectord::Zero(2));
  CHECK((e - Matrixd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(e_last.norm() == 0.0);

  // E never sees the plant state; e_last shifts by -delta.
  const Vectord shifted = (Vectord(2) << 0.5, 0.5).finished();
  const auto [e2, e_last2] = build_error_matrix(states, shifted);
  CHECK((e2 - e).cwiseAbs().maxCoeff() == 0.0);
  CHECK((e_last2 - (e_last - shifted)).norm() == 0.0);
}

TEST_CASE("algebraic_alpha recovers a vertex plant after any positive time") {
  // Plant sitting exactly on vertex 2 of the example-1 triangle.
  ScenarioConfig config = open_loop_fixed((Vectord(2) << 15.0, -10.0).finished(), 0.5);
  const Trajectory traj = run_scenario(config);
  const Vectord alpha = traj.alpha_hat.back();
  CHECK(std::abs(alpha(0) - 0.0) < 1e-6);
  CHECK(std::abs(alpha(1) - 1.0) < 1e-6);
  CHECK(std::abs(alpha(2) - 0.0) < 1e-6);
}

TEST_CASE("algebraic_alpha matches the example-1 barycentric weights") {
  ScenarioConfig config = open_loop_fixed((Vectord(2) << 5.0, 3.0).finished(), 1.0);
  const Trajectory traj = run_scenario(config);
  const Vectord alpha = traj.alpha_hat.back();
  CHECK(std::abs(alpha(0) - kAlpha1) < 1e-5);
  CHECK(std::abs(alpha(1) - kAlpha2) < 1e-5);
  CHECK(std::abs(alpha(2) - kAlpha3) < 1e-5);
}

TEST_CASE("algebraic_alpha is singular at t0") {
  std::vector<Vectord> states(3, Vectord::Zero(2));
  const auto [e, e_last] = build_error_matrix(states, Vectord::Zero(2));
  CHECK_THROWS_AS(algebraic_alpha(e, e_last), SingularMatrixError);
}

TEST_CASE("alpha_ode_rhs examples") {
  const Matrixd identity = Matrixd::Identity(2, 2);
  const Vectord decay = alpha_ode_rhs((Vectord(2) << 1.0, 1.0).finished(), identity,
                                      Vectord::Zero(2), 1.0);
  CHECK(decay(0) == -1.0);
  CHECK(decay(1) == -1.0);

  const Vectord forced = alpha_ode_rhs(Vectord::Zero(2), identity,
                                       (Vectord(2) << -1.0, 0.0).finished(), 1.0);
  CHECK(forced(0) == 1.0);
  CHECK(forced(1) == 0.0);

  // The true reduced weights are an equilibrium on simulated data.
  ScenarioConfig config = open_loop_fixed((Vectord(2) << 5.0, 3.0).finished(), 1.0);
  const Trajectory traj = run_scenario(config);
  const auto [e, e_last] =
      build_error_matrix({traj.model_states.back().col(0), traj.model_states.back().col(1),
                          traj.model_states.back().col(2)},
                         traj.x_p.back());
  const Vectord alpha_bar = (Vectord(2) << kAlpha1, kAlpha2).finished();
  const double scale = e.cwiseAbs().maxCoeff();
  CHECK(alpha_ode_rhs(alpha_bar, e, e_last, 1.0).norm() <= 1e-9 * (1.0 + scale * scale));
}

TEST_CASE("two_instant_alpha recovers the weights from adaptive snapshots") {
  // Stable plant inside the example-1 triangle; its barycentric weights are
  // [0.68, 0.12, 0.20] by the same hand solve as for [5, 3]. An open-loop
  // unstable plant would blow the parameter drift up over a 2 s horizon.
  ScenarioConfig config = open_loop_fixed((Vectord(2) << -4.0, -5.0).finished(), 2.0);
  config.model_mode = ModelMode::Adaptive;
  const Trajectory traj = run_scenario(config);

  const auto at = [&](double t) -> std::size_t {
    for (std::size_t k = 0; k < traj.times.size(); ++k)
      if (std::abs(traj.times[k] - t) < 1e-9) return k;
    FAIL("sample time not found");
    return 0;
  };
  const std::size_t k1 = at(1.0), k2 = at(2.0);
  const auto phi_of = [&](std::size_t k) -> Matrixd {
    const Matrixd& th = traj.model_thetas[k];
    Matrixd phi(2, 2);
    phi.col(0) = th.col(0) - th.col(2);
    phi.col(1) = th.col(1) - th.col(2);
    return phi;
  };

  const AlphaEstimate est = two_instant_alpha(phi_of(k1), phi_of(k2),
                                              traj.model_thetas[k1].col(2),
                                              traj.model_thetas[k2].col(2));
  CHECK(std::abs(est.full(0) - 0.68) < 1e-6);
  CHECK(std::abs(est.full(1) - 0.12) < 1e-6);
  CHECK(std::abs(est.full(2) - 0.20) < 1e-6);

  // Identical snapshots carry no information.
  CHECK_THROWS_AS(two_instant_alpha(phi_of(k1), phi_of(k1), traj.model_thetas[k1].col(2),
                                    traj.model_thetas[k1].col(2)),
                  SingularMatrixError);
}

TEST_CASE("two_instant_alpha fails when adaptation is frozen") {
  ScenarioConfig config = open_loop_fixed((Vectord(2) << 5.0, 3.0).finished(), 2.0);
  config.model_mode = ModelMode::Adaptive;
  config.gains.first_level = 0.0;  // parameters never move
  const Trajectory traj = run_scenario(config);

  const Matrixd& th1 = traj.model_thetas[100];
  const Matrixd& th2 = traj.model_thetas[200];
  Matrixd phi1(2, 2), phi2(2, 2);
  phi1.col(0) = th1.col(0) - th1.col(2);
  phi1.col(1) = th1.col(1) - th1.col(2);
  phi2.col(0) = th2.col(0) - th2.col(2);
  phi2.col(1) = th2.col(1) - th2.col(2);
  CHECK_THROWS_AS(two_instant_alpha(phi1, phi2, th1.col(2), th2.col(2)), SingularMatrixError);
}

TEST_CASE("reconstruct_theta and second_level_gain examples") {
  const Matrixd verts = example1_vertices();

  const Vectord unit = (Vectord(3) << 0.0, 1.0, 0.0).finished();
  CHECK((reconstruct_theta(verts, unit) - verts.col(1)).norm() == 0.0);

  const Vectord alpha = (Vectord(3) << kAlpha1, kAlpha2, kAlpha3).finished();
  const Vectord theta_hat = reconstruct_theta(verts, alpha);
  CHECK(theta_hat(0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(theta_hat(1) == doctest::Approx(3.0).epsilon(1e-12));

  const Vectord centroid = reconstruct_theta(verts, Vectord::Constant(3, 1.0 / 3.0));
  CHECK(centroid(0) == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
  CHECK(centroid(1) == doctest::Approx(-5.0 / 3.0).epsilon(1e-12));

  const Vectord theta_m = (Vectord(2) << -24.0, -8.0).finished();
  const Vectord k = second_level_gain(theta_m, verts, alpha);
  CHECK(k(0) == doctest::Approx(-29.0).epsilon(1e-12));
  CHECK(k(1) == doctest::Approx(-11.0).epsilon(1e-12));

  // Exact weights cancel the plant exactly: k = theta_m - theta_p.
  CHECK((second_level_gain(theta_m, verts, unit) - (theta_m - verts.col(1))).norm() == 0.0);
}

TEST_CASE("barycentric examples and round-trip") {
  const VertexSet set{example1_vertices()};

  const Vectord at_vertex = barycentric(set, (Vectord(2) << -10.0, -10.0).finished());
  CHECK(std::abs(at_vertex(0) - 1.0) < 1e-12);
  CHECK(std::abs(at_vertex(1)) < 1e-12);
  CHECK(std::abs(at_vertex(2)) < 1e-12);

  const Vectord at_centroid = barycentric(set, set.centroid());
  CHECK((at_centroid - Vectord::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff() < 1e-12);

  const Vectord alpha = barycentric(set, (Vectord(2) << 5.0, 3.0).finished());
  CHECK(alpha(0) == doctest::Approx(kAlpha1).epsilon(1e-12));
  CHECK(alpha(1) == doctest::Approx(kAlpha2).epsilon(1e-12));
  CHECK(alpha(2) == doctest::Approx(kAlpha3).epsilon(1e-12));

  // reconstruct_theta after barycentric is the identity on hull points.
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const Vectord w = oracles::interior_simplex_point(rng, 3, 0.0);
    const Vectord point = set.theta * w;
    CHECK((reconstruct_theta(set.theta, barycentric(set, point)) - point).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("in_hull examples") {
  const VertexSet set{example1_vertices()};
  CHECK(in_hull(set, (Vectord(2) << -10.0, -10.0).finished()));
  CHECK(in_hull(set, (Vectord(2) << 5.0, 3.0).finished()));
  CHECK_FALSE(in_hull(set, (Vectord(2) << 100.0, 100.0).finished()));
}

TEST_CASE("default_vertices contains every box corner") {
  Hypercube unit{Vectord::Zero(2), Vectord::Ones(2)};
  const VertexSet tri = default_vertices(unit, 0.0);
  for (int mask = 0; mask < 4; ++mask) {
    Vectord corner(2);
    corner << (mask & 1 ? 1.0 : 0.0), (mask & 2 ? 1.0 : 0.0);
    CHECK(in_hull(tri, corner));
  }

  Hypercube point{Vectord::Zero(2), Vectord::Zero(2)};
  CHECK_THROWS_AS(default_vertices(point), DegenerateBoxError);

  Hypercube wide{(Vectord(2) << -5.0, -5.0).finished(), (Vectord(2) << 10.0, 10.0).finished()};
  const VertexSet set = default_vertices(wide);
  CHECK(in_hull(set, (Vectord(2) << 5.0, 3.0).finished()));
  for (int mask = 0; mask < 4; ++mask) {
    Vectord corner(2);
    corner << (mask & 1 ? 10.0 : -5.0), (mask & 2 ? 10.0 : -5.0);
    CHECK(in_hull(set, corner));
  }
}

TEST_CASE("default_vertices handles higher dimensions") {
  Hypercube box{(Vectord(4) << -1.0, 0.0, 2.0, -3.0).finished(),
                (Vectord(4) << 1.0, 0.5, 5.0, -2.0).finished()};
  const VertexSet set = default_vertices(box);
  CHECK(set.count() == 5);
  CHECK(in_hull(set, (Vectord(4) << 0.0, 0.25, 3.0, -2.5).finished()));
}

TEST_CASE("measurement noise never reaches the model states") {
  // Open loop (u = r), fixed models: the noisy run and the noiseless run
  // produce bit-identical model states, so E is bit-identical too; only the
  // weight estimates jitter.
  ScenarioConfig clean = open_loop_fixed((Vectord(2) << 5.0, 3.0).finished(), 1.0);
  ScenarioConfig noisy = clean;
  noisy.noise = NoiseModel{NoiseKind::Gaussian, 0.05, 42};
  const Trajectory tc = run_scenario(clean);
  const Trajectory tn = run_scenario(noisy);
  REQUIRE(tc.times.size() == tn.times.size());
  bool alpha_differs = false;
  for (std::size_t k = 0; k < tc.times.size(); ++k) {
    CHECK((tc.model_states[k].array() == tn.model_states[k].array()).all());
    CHECK((tc.x_p[k].array() == tn.x_p[k].array()).all());
    if ((tc.alpha_hat[k] - tn.alpha_hat[k]).norm() > 0.0) alpha_differs = true;
  }
  CHECK(alpha_differs);
}
