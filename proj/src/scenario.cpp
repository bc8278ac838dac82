#include "mmrac/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace mmrac {

namespace {

Index plant_dim(const ScenarioConfig& config) { return config.plant.profile.base.size(); }

bool is_second_level(ControllerKind kind) {
  return kind == ControllerKind::SecondLevelAlgebraic || kind == ControllerKind::SecondLevelOde;
}

Index model_count(const ScenarioConfig& config) {
  switch (config.controller) {
    case ControllerKind::DirectFirstLevel:
      return 0;
    case ControllerKind::IndirectFirstLevel:
      return 1;
    default:
      return plant_dim(config) + 1;
  }
}

// Offsets of each block inside the packed integration state.
struct Layout {
  Index m = 0;
  Index n_models = 0;
  bool adaptive = false;
  bool has_alpha = false;
  bool has_gain = false;
  Index off_x_p = 0;
  Index off_x_m = 0;
  Index off_models = 0;
  Index off_thetas = 0;
  Index off_alpha = 0;
  Index off_gain = 0;
  Index size = 0;
};

Layout make_layout(const ScenarioConfig& config) {
  Layout lay;
  lay.m = plant_dim(config);
  lay.n_models = model_count(config);
  lay.adaptive = config.model_mode == ModelMode::Adaptive && lay.n_models > 0;
  lay.has_alpha = config.controller == ControllerKind::SecondLevelOde;
  lay.has_gain = config.controller == ControllerKind::DirectFirstLevel;
  Index off = 0;
  lay.off_x_p = off;
  off += lay.m;
  lay.off_x_m = off;
  off += lay.m;
  lay.off_models = off;
  off += lay.m * lay.n_models;
  lay.off_thetas = off;
  if (lay.adaptive) off += lay.m * lay.n_models;
  lay.off_alpha = off;
  if (lay.has_alpha) off += lay.m;
  lay.off_gain = off;
  if (lay.has_gain) off += lay.m;
  lay.size = off;
  return lay;
}

Vectord zero_or(const Vectord& v, Index m, const char* what) {
  if (v.size() == 0) return Vectord::Zero(m);
  if (v.size() != m) throw ConfigError(std::string(what) + ": dimension mismatch");
  return v;
}

Vectord uniform_alpha(Index n) { return Vectord::Constant(n, 1.0 / static_cast<double>(n)); }

}  // namespace

Matrixd resolve_vertices(const ScenarioConfig& config) {
  if (config.vertices) return *config.vertices;
  if (config.box) return default_vertices(*config.box).theta;
  return Matrixd(plant_dim(config), 0);
}

void validate_config(const ScenarioConfig& config) {
  const Index m = plant_dim(config);
  if (m < 1) throw ConfigError("plant profile has no parameters");
  if (!(config.step > 0.0)) throw ConfigError("step must be positive");
  if (!(config.t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (config.sample_every < 1) throw ConfigError("sample_every must be at least 1");
  if (config.gains.first_level < 0.0 || config.gains.alpha < 0.0)
    throw ConfigError("gains must be nonnegative");
  if (config.noise.std_dev < 0.0) throw ConfigError("noise std_dev must be nonnegative");

  const auto& profile = config.plant.profile;
  auto check_len = [&](const Vectord& v, const char* what) {
    if (v.size() != 0 && v.size() != m) throw ConfigError(std::string(what) + ": expected length m or empty");
  };
  check_len(profile.amplitude, "profile.amplitude");
  check_len(profile.phase_offsets, "profile.phase_offsets");
  if (profile.kind == ProfileKind::SquareWave && !(profile.period > 0.0))
    throw ConfigError("square-wave profile requires a positive period");
  if (!eval_profile(profile, 0.0).allFinite()) throw ConfigError("profile evaluates non-finite");

  zero_or(config.plant.initial_state, m, "plant.initial_state");
  zero_or(config.reference.initial_state, m, "reference.initial_state");

  if (config.reference.theta_m.size() != m) throw ConfigError("reference.theta_m: dimension mismatch");
  try {
    solve_lyapunov(companion(config.reference.theta_m), Matrixd::Identity(m, m));
  } catch (const NotStableError&) {
    throw ConfigError("reference.theta_m is not Hurwitz");
  }

  Matrixd verts;
  try {
    verts = resolve_vertices(config);
  } catch (const DegenerateBoxError& e) {
    throw ConfigError(std::string("vertex box: ") + e.what());
  }
  if (verts.cols() > 0 && verts.rows() != m) throw ConfigError("vertices: dimension mismatch");

  if (config.controller == ControllerKind::IndirectFirstLevel &&
      config.model_mode != ModelMode::Adaptive)
    throw ConfigError("indirect first-level control requires an adaptive model");

  if (is_second_level(config.controller)) {
    if (verts.cols() != m + 1)
      throw ConfigError("second-level control requires exactly m + 1 model vertices");
    const VertexSet set{verts};
    try {
      // Hull membership of theta_p(t), sampled across the horizon and just
      // around profile discontinuities.
      std::vector<double> probes;
      const int coarse = 1000;
      probes.reserve(coarse + 9);
      for (int i = 0; i <= coarse; ++i)
        probes.push_back(config.t_end * static_cast<double>(i) / coarse);
      for (double s : profile_discontinuities(profile, config.t_end)) {
        probes.push_back(std::nextafter(s, 0.0));
        probes.push_back(s);
      }
      for (double t : probes)
        if (!in_hull(set, eval_profile(profile, t)))
          throw ConfigError("plant parameters leave the convex hull of the vertices");
    } catch (const SingularMatrixError&) {
      throw ConfigError("vertices are not affinely independent");
    }
    if (config.controller == ControllerKind::SecondLevelAlgebraic && !(config.t_star > 0.0))
      throw ConfigError("t_star must be positive for the algebraic controller");
  }

  if (config.alpha_init) {
    if (!is_second_level(config.controller))
      throw ConfigError("alpha_init is only meaningful for second-level controllers");
    if (config.alpha_init->size() != m + 1) throw ConfigError("alpha_init: expected length m + 1");
    if (std::abs(config.alpha_init->sum() - 1.0) > 1e-9)
      throw ConfigError("alpha_init must sum to one");
  }
}

Trajectory run_scenario(const ScenarioConfig& config) {
  validate_config(config);

  const Layout lay = make_layout(config);
  const Index m = lay.m;
  const Index n = lay.n_models;
  const Vectord theta_m = config.reference.theta_m;
  const Matrixd P = solve_lyapunov(companion(theta_m), Matrixd::Identity(m, m));
  const Matrixd verts = resolve_vertices(config);

  // Initial model parameters. Indirect control with a single explicit column
  // starts from that estimate; with a full vertex set it starts from the
  // centroid, which carries the same prior information the second level gets.
  Matrixd theta0(m, n);
  if (is_second_level(config.controller)) {
    theta0 = verts;
  } else if (config.controller == ControllerKind::IndirectFirstLevel) {
    if (verts.cols() == 1)
      theta0.col(0) = verts.col(0);
    else if (verts.cols() > 1)
      theta0.col(0) = verts.rowwise().mean();
    else
      theta0.col(0) = theta_m;
  }

  Vectord state = Vectord::Zero(lay.size);
  const Vectord x_p0 = zero_or(config.plant.initial_state, m, "plant.initial_state");
  state.segment(lay.off_x_p, m) = x_p0;
  state.segment(lay.off_x_m, m) = zero_or(config.reference.initial_state, m, "reference.initial_state");
  for (Index i = 0; i < n; ++i) state.segment(lay.off_models + i * m, m) = x_p0;
  if (lay.adaptive)
    Eigen::Map<Matrixd>(state.data() + lay.off_thetas, m, n) = theta0;
  const Vectord alpha0_full = config.alpha_init ? *config.alpha_init : uniform_alpha(m + 1);
  if (lay.has_alpha) state.segment(lay.off_alpha, m) = alpha0_full.head(m);
  if (lay.has_gain && verts.cols() > 0)
    state.segment(lay.off_gain, m) = theta_m - verts.rowwise().mean();

  // Per-step context shared with the RHS lambda.
  Vectord noise_vec = Vectord::Zero(m);
  bool switched = false;
  Vectord frozen_gain = Vectord::Zero(m);
  Vectord alpha_alg_full = alpha0_full;
  double profile_cap = std::numeric_limits<double>::infinity();

  auto current_thetas = [&](const Vectord& s) -> Matrixd {
    if (lay.adaptive) return Eigen::Map<const Matrixd>(s.data() + lay.off_thetas, m, n);
    return theta0;
  };

  auto rhs = [&](double t, const Vectord& s) -> Vectord {
    const auto x_p = s.segment(lay.off_x_p, m);
    const auto x_m = s.segment(lay.off_x_m, m);
    const Eigen::Map<const Matrixd> models(s.data() + lay.off_models, m, n);
    const Matrixd thetas = current_thetas(s);

    const Vectord theta_p = eval_profile(config.plant.profile, std::min(t, profile_cap));
    const double r = reference_input(config.reference.input, t);
    const Vectord x_meas = x_p + noise_vec;

    double u = r;
    switch (config.controller) {
      case ControllerKind::DirectFirstLevel:
        u = control_input(s.segment(lay.off_gain, m), x_meas, r);
        break;
      case ControllerKind::IndirectFirstLevel:
        u = control_input(indirect_gain(theta_m, thetas.col(0)), x_meas, r);
        break;
      case ControllerKind::SecondLevelOde: {
        const Vectord alpha_full = complete_alpha(s.segment(lay.off_alpha, m));
        u = control_input(second_level_gain(theta_m, thetas, alpha_full), x_meas, r);
        break;
      }
      case ControllerKind::SecondLevelAlgebraic:
        if (switched) u = control_input(frozen_gain, x_meas, r);
        break;
    }

    Vectord ds(lay.size);
    ds.segment(lay.off_x_p, m) = plant_dynamics(x_p, u, theta_p);
    ds.segment(lay.off_x_m, m) = reference_dynamics(x_m, r, theta_m);
    // The models consume the true plant state; measurement noise enters the
    // loop only through the error signals and the feedback term above.
    for (Index i = 0; i < n; ++i)
      ds.segment(lay.off_models + i * m, m) = ident_dynamics(models.col(i), thetas.col(i), x_p, u, theta_m);
    if (lay.adaptive)
      for (Index i = 0; i < n; ++i)
        ds.segment(lay.off_thetas + i * m, m) =
            adaptive_law((models.col(i) - x_meas).eval(), P, x_meas, config.gains.first_level);
    if (lay.has_alpha) {
      const Matrixd e_matrix = models.leftCols(n - 1).colwise() - models.col(n - 1);
      const Vectord e_last = models.col(n - 1) - x_meas;
      ds.segment(lay.off_alpha, m) =
          alpha_ode_rhs(s.segment(lay.off_alpha, m), e_matrix, e_last, config.gains.alpha);
    }
    if (lay.has_gain)
      ds.segment(lay.off_gain, m) =
          direct_mrac_update((x_meas - x_m).eval(), P, x_meas, config.gains.first_level);
    return ds;
  };

  // Refresh the held algebraic estimate from the current model states;
  // ill-conditioned E skips the sample and keeps the previous value.
  auto refresh_algebraic = [&](const Vectord& s, const Vectord& x_meas) {
    const Eigen::Map<const Matrixd> models(s.data() + lay.off_models, m, n);
    const Matrixd e_matrix = models.leftCols(n - 1).colwise() - models.col(n - 1);
    const Vectord e_last = models.col(n - 1) - x_meas;
    try {
      alpha_alg_full = algebraic_alpha(e_matrix, e_last).full;
    } catch (const SingularMatrixError&) {
      // hold previous estimate
    }
  };

  Trajectory traj;
  auto record = [&](double t, const Vectord& s, const Vectord& x_meas) {
    const Vectord x_p = s.segment(lay.off_x_p, m);
    const Vectord x_m = s.segment(lay.off_x_m, m);
    const Matrixd thetas = current_thetas(s);
    const double r = reference_input(config.reference.input, t);

    Vectord alpha_full;
    Vectord theta_hat;
    double u = r;
    switch (config.controller) {
      case ControllerKind::DirectFirstLevel: {
        const Vectord k = s.segment(lay.off_gain, m);
        theta_hat = theta_m - k;
        u = control_input(k, x_meas, r);
        break;
      }
      case ControllerKind::IndirectFirstLevel:
        theta_hat = thetas.col(0);
        u = control_input(indirect_gain(theta_m, theta_hat), x_meas, r);
        break;
      case ControllerKind::SecondLevelOde:
        alpha_full = complete_alpha(s.segment(lay.off_alpha, m));
        theta_hat = reconstruct_theta(thetas, alpha_full);
        u = control_input(second_level_gain(theta_m, thetas, alpha_full), x_meas, r);
        break;
      case ControllerKind::SecondLevelAlgebraic:
        alpha_full = alpha_alg_full;
        theta_hat = reconstruct_theta(thetas, alpha_full);
        u = switched ? control_input(frozen_gain, x_meas, r) : r;
        break;
    }

    traj.times.push_back(t);
    traj.x_p.push_back(x_p);
    traj.x_m.push_back(x_m);
    traj.e_c.push_back(x_p - x_m);
    traj.u.push_back(u);
    traj.r.push_back(r);
    traj.theta_true.push_back(eval_profile(config.plant.profile, t));
    traj.theta_hat.push_back(theta_hat);
    if (alpha_full.size() > 0) traj.alpha_hat.push_back(alpha_full);
    traj.model_states.push_back(Eigen::Map<const Matrixd>(s.data() + lay.off_models, m, n));
    if (lay.adaptive) traj.model_thetas.push_back(thetas);
  };

  const double h = config.step;
  const double t_end = config.t_end;
  const auto total_steps = static_cast<long long>(std::ceil(t_end / h - 1e-12));
  std::vector<double> events = profile_discontinuities(config.plant.profile, t_end);

  for (long long k = 0; k <= total_steps; ++k) {
    const double t_k = std::min(static_cast<double>(k) * h, t_end);
    noise_vec = noise_draw(config.noise, m, static_cast<std::uint64_t>(k));
    const Vectord x_meas = Vectord(state.segment(lay.off_x_p, m)) + noise_vec;

    if (config.controller == ControllerKind::SecondLevelAlgebraic && !switched &&
        t_k + 1e-9 >= config.t_star && t_k > 0.0) {
      // One-shot estimate and control hand-off. A singular E here is a real
      // failure of the method, so it propagates.
      const Eigen::Map<const Matrixd> models(state.data() + lay.off_models, m, n);
      const Matrixd e_matrix = models.leftCols(n - 1).colwise() - models.col(n - 1);
      const Vectord e_last = models.col(n - 1) - x_meas;
      alpha_alg_full = algebraic_alpha(e_matrix, e_last).full;
      frozen_gain = second_level_gain(theta_m, current_thetas(state), alpha_alg_full);
      switched = true;
    }

    const bool sample_now = (k % config.sample_every == 0) || k == total_steps;
    if (sample_now) {
      if (config.controller == ControllerKind::SecondLevelAlgebraic && t_k > 0.0)
        refresh_algebraic(state, x_meas);
      record(t_k, state, x_meas);
    }
    if (k == total_steps) break;

    const double t_next = std::min(static_cast<double>(k + 1) * h, t_end);
    double a = t_k;
    auto it = std::upper_bound(events.begin(), events.end(), t_k);
    for (; it != events.end() && *it < t_next; ++it) {
      // Split exactly at the jump; the left piece evaluates the profile at
      // the left limit so each RK4 sub-step sees a smooth right-hand side.
      profile_cap = std::nextafter(*it, a);
      state = rk4_step(rhs, a, state, *it - a);
      profile_cap = std::numeric_limits<double>::infinity();
      a = *it;
    }
    if (t_next > a) {
      // A jump exactly on the step boundary still needs the left limit for
      // the stage evaluated at t_next.
      if (it != events.end() && *it == t_next) profile_cap = std::nextafter(t_next, a);
      state = rk4_step(rhs, a, state, t_next - a);
      profile_cap = std::numeric_limits<double>::infinity();
    }
  }

  return traj;
}

std::optional<double> convergence_time(std::span<const double> times,
                                       std::span<const double> values, double threshold) {
  if (times.empty() || times.size() != values.size()) return std::nullopt;
  const double peak = *std::max_element(values.begin(), values.end());
  return time_below(times, values, threshold * peak);
}

std::optional<double> time_below(std::span<const double> times, std::span<const double> values,
                                 double threshold) {
  if (times.empty() || times.size() != values.size()) return std::nullopt;
  std::size_t last_violation = values.size();  // sentinel: none
  for (std::size_t i = values.size(); i-- > 0;) {
    if (values[i] > threshold) {
      last_violation = i;
      break;
    }
  }
  if (last_violation == values.size()) return times.front();
  if (last_violation + 1 >= times.size()) return std::nullopt;
  return times[last_violation + 1];
}

MetricsReport compute_metrics(const Trajectory& traj, double t_from, double t_to,
                              const std::optional<Vectord>& alpha_oracle) {
  MetricsReport report;
  std::vector<double> times, tracking_first, tracking_norm, param_err, alpha_err;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    if (t < t_from - 1e-12 || t > t_to + 1e-12) continue;
    times.push_back(t);
    tracking_first.push_back(std::abs(traj.e_c[i](0)));
    tracking_norm.push_back(traj.e_c[i].norm());
    param_err.push_back((traj.theta_hat[i] - traj.theta_true[i]).norm());
    if (alpha_oracle && i < traj.alpha_hat.size())
      alpha_err.push_back((traj.alpha_hat[i] - *alpha_oracle).norm());
  }
  if (times.empty()) return report;

  report.tracking_convergence_time = convergence_time(times, tracking_first, 0.01);
  const double initial_param = param_err.front();
  report.parameter_convergence_time =
      initial_param > 0.0 ? time_below(times, param_err, 0.05 * initial_param)
                          : std::optional<double>(times.front());
  report.final_parameter_error = param_err.back();
  double acc = 0.0;
  for (double v : tracking_norm) acc += v;
  report.mean_abs_tracking_error = acc / static_cast<double>(tracking_norm.size());
  if (!alpha_err.empty()) {
    double asum = 0.0;
    for (double v : alpha_err) asum += v;
    report.alpha_error_mean = asum / static_cast<double>(alpha_err.size());
    report.alpha_error_final = alpha_err.back();
  }
  return report;
}

LevelComparison compare_levels(const ScenarioConfig& base) {
  LevelComparison cmp;
  cmp.first_config = base;
  cmp.first_config.name = base.name + "_first_level";
  cmp.first_config.controller = ControllerKind::IndirectFirstLevel;
  cmp.first_config.model_mode = ModelMode::Adaptive;
  cmp.first_config.alpha_init.reset();  // meaningless without a weight estimator
  cmp.second_config = base;
  cmp.second_config.name = base.name + "_second_level";
  cmp.second_config.controller = ControllerKind::SecondLevelOde;

  cmp.first = run_scenario(cmp.first_config);
  cmp.second = run_scenario(cmp.second_config);

  std::optional<Vectord> oracle;
  if (base.plant.profile.kind == ProfileKind::Constant) {
    try {
      oracle = barycentric(VertexSet{resolve_vertices(cmp.second_config)},
                           base.plant.profile.base);
    } catch (const std::exception&) {
      oracle.reset();
    }
  }
  cmp.first_metrics = compute_metrics(cmp.first);
  cmp.second_metrics = compute_metrics(cmp.second, 0.0,
                                       std::numeric_limits<double>::infinity(), oracle);
  return cmp;
}

ScenarioConfig builtin(const std::string& name) {
  ScenarioConfig config;
  config.name = name;
  if (name == "simulation1") {
    config.plant.profile = ParameterProfile::constant((Vectord(2) << 2.0, 1.0).finished());
    config.reference.theta_m = (Vectord(2) << -1.0, -3.0).finished();
    config.controller = ControllerKind::SecondLevelAlgebraic;
    config.t_star = 0.5;
    config.model_mode = ModelMode::Fixed;
    config.box = Hypercube{(Vectord(2) << -5.0, -5.0).finished(),
                           (Vectord(2) << 5.0, 5.0).finished()};
    config.t_end = 10.0;
    config.notes =
        "theta_m, theta_p from the source simulation; vertices auto-placed over the "
        "[-5,5]^2 box; reference input, gains and zero initial states are library defaults";
  } else if (name == "example1") {
    config.plant.profile = ParameterProfile::constant((Vectord(2) << 5.0, 3.0).finished());
    config.reference.theta_m = (Vectord(2) << -24.0, -8.0).finished();
    config.controller = ControllerKind::SecondLevelOde;
    config.model_mode = ModelMode::Fixed;
    Matrixd verts(2, 3);
    verts.col(0) << -10.0, -10.0;
    verts.col(1) << 15.0, -10.0;
    verts.col(2) << 5.0, 15.0;
    config.vertices = verts;
    config.t_end = 20.0;
    config.notes =
        "theta_m, theta_p and the three vertices from the source example; reference "
        "input, gains and zero initial states are library defaults";
  } else if (name == "experiment1" || name == "experiment2") {
    ParameterProfile profile;
    profile.base = (Vectord(3) << 3.0, 4.0, 3.0).finished();
    profile.amplitude = (Vectord(3) << 1.0, 1.0, 0.0).finished();
    if (name == "experiment1") {
      profile.kind = ProfileKind::Sinusoidal;
      profile.frequency = 0.5;
      profile.phase_offsets = (Vectord(3) << 0.0, std::numbers::pi / 2.0, 0.0).finished();
    } else {
      profile.kind = ProfileKind::SquareWave;
      profile.period = 40.0;
    }
    config.plant.profile = profile;
    config.reference.theta_m = (Vectord(3) << -15.0, -23.0, -9.0).finished();
    config.controller = ControllerKind::SecondLevelOde;
    config.model_mode = ModelMode::Fixed;
    // Parameter path plus a unit margin on every side.
    config.box = Hypercube{(Vectord(3) << 1.0, 2.0, 2.0).finished(),
                           (Vectord(3) << 5.0, 6.0, 4.0).finished()};
    config.t_end = 120.0;
    config.notes =
        "theta_m and the time-varying parameter profile from the source experiment; "
        "vertex box, reference input, gains and zero initial states are library defaults";
  } else {
    throw UnknownScenarioError("unknown builtin scenario: " + name);
  }
  return config;
}

std::vector<std::string> builtin_names() {
  return {"simulation1", "example1", "experiment1", "experiment2"};
}

}  // namespace mmrac
