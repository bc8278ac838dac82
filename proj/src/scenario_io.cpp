#include "mmrac/scenario_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace mmrac {

namespace {

using nlohmann::json;

Vectord vector_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw ConfigError(std::string(what) + ": expected an array");
  Vectord v(arr.size());
  Index i = 0;
  for (const auto& x : arr) {
    if (!x.is_number()) throw ConfigError(std::string(what) + ": expected numbers");
    v(i++) = x.get<double>();
  }
  return v;
}

json vector_to_json(const Vectord& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "constant") return ProfileKind::Constant;
  if (s == "sinusoidal") return ProfileKind::Sinusoidal;
  if (s == "square_wave") return ProfileKind::SquareWave;
  throw ConfigError("profile.kind: unknown value '" + s + "'");
}

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Constant: return "constant";
    case ProfileKind::Sinusoidal: return "sinusoidal";
    case ProfileKind::SquareWave: return "square_wave";
  }
  return "constant";
}

ControllerKind controller_from_string(const std::string& s) {
  if (s == "direct_first_level") return ControllerKind::DirectFirstLevel;
  if (s == "indirect_first_level") return ControllerKind::IndirectFirstLevel;
  if (s == "second_level_algebraic") return ControllerKind::SecondLevelAlgebraic;
  if (s == "second_level_ode") return ControllerKind::SecondLevelOde;
  throw ConfigError("controller: unknown value '" + s + "'");
}

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::DirectFirstLevel: return "direct_first_level";
    case ControllerKind::IndirectFirstLevel: return "indirect_first_level";
    case ControllerKind::SecondLevelAlgebraic: return "second_level_algebraic";
    case ControllerKind::SecondLevelOde: return "second_level_ode";
  }
  return "second_level_ode";
}

}  // namespace

ScenarioConfig scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("scenario document must be a JSON object");
  ScenarioConfig config;
  config.name = doc.value("name", std::string("scenario"));

  if (!doc.contains("plant") || !doc["plant"].contains("profile"))
    throw ConfigError("scenario requires plant.profile");
  const json& prof = doc["plant"]["profile"];
  config.plant.profile.kind = profile_kind_from_string(prof.value("kind", std::string("constant")));
  config.plant.profile.base = vector_from_json(prof.at("base"), "plant.profile.base");
  if (prof.contains("amplitude"))
    config.plant.profile.amplitude = vector_from_json(prof["amplitude"], "plant.profile.amplitude");
  config.plant.profile.frequency = prof.value("frequency", 0.0);
  if (prof.contains("phase_offsets"))
    config.plant.profile.phase_offsets =
        vector_from_json(prof["phase_offsets"], "plant.profile.phase_offsets");
  config.plant.profile.period = prof.value("period", 0.0);
  if (doc["plant"].contains("initial_state"))
    config.plant.initial_state = vector_from_json(doc["plant"]["initial_state"], "plant.initial_state");

  if (!doc.contains("reference") || !doc["reference"].contains("theta_m"))
    throw ConfigError("scenario requires reference.theta_m");
  config.reference.theta_m = vector_from_json(doc["reference"]["theta_m"], "reference.theta_m");
  if (doc["reference"].contains("initial_state"))
    config.reference.initial_state =
        vector_from_json(doc["reference"]["initial_state"], "reference.initial_state");
  if (doc["reference"].contains("input")) {
    const json& input = doc["reference"]["input"];
    ReferenceInputSpec spec;
    spec.offset = input.value("offset", 0.0);
    if (input.contains("components")) {
      for (const auto& c : input["components"]) {
        ReferenceInputSpec::Component comp;
        comp.amplitude = c.value("amplitude", 0.0);
        comp.frequency = c.value("frequency", 0.0);
        comp.phase = c.value("phase", 0.0);
        spec.components.push_back(comp);
      }
    }
    config.reference.input = spec;
  }

  config.controller = controller_from_string(doc.value("controller", std::string("second_level_ode")));
  config.t_star = doc.value("t_star", 0.5);
  const std::string mode = doc.value("model_mode", std::string("fixed"));
  if (mode == "fixed")
    config.model_mode = ModelMode::Fixed;
  else if (mode == "adaptive")
    config.model_mode = ModelMode::Adaptive;
  else
    throw ConfigError("model_mode: unknown value '" + mode + "'");

  if (doc.contains("vertices")) {
    const json& arr = doc["vertices"];
    if (!arr.is_array() || arr.empty()) throw ConfigError("vertices: expected a non-empty array");
    const Index m = config.plant.profile.base.size();
    Matrixd verts(m, static_cast<Index>(arr.size()));
    Index col = 0;
    for (const auto& v : arr) {
      const Vectord vertex = vector_from_json(v, "vertices");
      if (vertex.size() != m) throw ConfigError("vertices: dimension mismatch");
      verts.col(col++) = vertex;
    }
    config.vertices = verts;
  }
  if (doc.contains("hypercube")) {
    Hypercube box;
    box.lower = vector_from_json(doc["hypercube"].at("lower"), "hypercube.lower");
    box.upper = vector_from_json(doc["hypercube"].at("upper"), "hypercube.upper");
    config.box = box;
  }

  if (doc.contains("gains")) {
    config.gains.first_level = doc["gains"].value("first_level", config.gains.first_level);
    config.gains.alpha = doc["gains"].value("alpha", config.gains.alpha);
  }

  if (doc.contains("noise")) {
    const std::string kind = doc["noise"].value("kind", std::string("none"));
    if (kind == "none")
      config.noise.kind = NoiseKind::None;
    else if (kind == "gaussian")
      config.noise.kind = NoiseKind::Gaussian;
    else
      throw ConfigError("noise.kind: unknown value '" + kind + "'");
    config.noise.std_dev = doc["noise"].value("std_dev", 0.0);
    config.noise.seed = doc["noise"].value("seed", std::uint64_t{0});
  }

  config.t_end = doc.value("t_end", config.t_end);
  config.step = doc.value("step", config.step);
  config.sample_every = doc.value("sample_every", config.sample_every);
  if (doc.contains("alpha_init"))
    config.alpha_init = vector_from_json(doc["alpha_init"], "alpha_init");
  return config;
}

json scenario_to_json(const ScenarioConfig& config) {
  json doc;
  doc["name"] = config.name;
  json prof;
  prof["kind"] = to_string(config.plant.profile.kind);
  prof["base"] = vector_to_json(config.plant.profile.base);
  if (config.plant.profile.amplitude.size() > 0)
    prof["amplitude"] = vector_to_json(config.plant.profile.amplitude);
  if (config.plant.profile.kind == ProfileKind::Sinusoidal) {
    prof["frequency"] = config.plant.profile.frequency;
    if (config.plant.profile.phase_offsets.size() > 0)
      prof["phase_offsets"] = vector_to_json(config.plant.profile.phase_offsets);
  }
  if (config.plant.profile.kind == ProfileKind::SquareWave)
    prof["period"] = config.plant.profile.period;
  doc["plant"]["profile"] = prof;
  if (config.plant.initial_state.size() > 0)
    doc["plant"]["initial_state"] = vector_to_json(config.plant.initial_state);

  doc["reference"]["theta_m"] = vector_to_json(config.reference.theta_m);
  if (config.reference.initial_state.size() > 0)
    doc["reference"]["initial_state"] = vector_to_json(config.reference.initial_state);
  json input;
  input["offset"] = config.reference.input.offset;
  input["components"] = json::array();
  for (const auto& c : config.reference.input.components)
    input["components"].push_back({{"amplitude", c.amplitude},
                                   {"frequency", c.frequency},
                                   {"phase", c.phase}});
  doc["reference"]["input"] = input;

  doc["controller"] = to_string(config.controller);
  if (config.controller == ControllerKind::SecondLevelAlgebraic) doc["t_star"] = config.t_star;
  doc["model_mode"] = config.model_mode == ModelMode::Fixed ? "fixed" : "adaptive";
  if (config.vertices) {
    json arr = json::array();
    for (Index j = 0; j < config.vertices->cols(); ++j)
      arr.push_back(vector_to_json(config.vertices->col(j)));
    doc["vertices"] = arr;
  }
  if (config.box) {
    doc["hypercube"]["lower"] = vector_to_json(config.box->lower);
    doc["hypercube"]["upper"] = vector_to_json(config.box->upper);
  }
  doc["gains"]["first_level"] = config.gains.first_level;
  doc["gains"]["alpha"] = config.gains.alpha;
  doc["noise"]["kind"] = config.noise.kind == NoiseKind::None ? "none" : "gaussian";
  doc["noise"]["std_dev"] = config.noise.std_dev;
  doc["noise"]["seed"] = config.noise.seed;
  doc["t_end"] = config.t_end;
  doc["step"] = config.step;
  doc["sample_every"] = config.sample_every;
  if (config.alpha_init) doc["alpha_init"] = vector_to_json(*config.alpha_init);
  if (!config.notes.empty()) doc["notes"] = config.notes;
  return doc;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario file is not valid JSON: " + std::string(e.what()));
  }
  return scenario_from_json(doc);
}

void export_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << std::setprecision(17);

  if (traj.times.empty()) {
    out << "t\n";
    if (!out) throw IoError("write failed: " + path);
    return;
  }

  const Index m = traj.x_p.front().size();
  const Index n_alpha = traj.alpha_hat.empty() ? 0 : traj.alpha_hat.front().size();
  const Index n_models = traj.model_states.front().cols();

  out << "t";
  for (Index i = 0; i < m; ++i) out << ",xp" << i;
  for (Index i = 0; i < m; ++i) out << ",xm" << i;
  for (Index i = 0; i < m; ++i) out << ",ec" << i;
  out << ",u";
  for (Index i = 0; i < m; ++i) out << ",theta_true" << i;
  for (Index i = 0; i < m; ++i) out << ",theta_hat" << i;
  for (Index i = 0; i < n_alpha; ++i) out << ",alpha" << i;
  for (Index j = 0; j < n_models; ++j)
    for (Index i = 0; i < m; ++i) out << ",model" << j << "_x" << i;
  out << "\n";

  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out << traj.times[k];
    for (Index i = 0; i < m; ++i) out << "," << traj.x_p[k](i);
    for (Index i = 0; i < m; ++i) out << "," << traj.x_m[k](i);
    for (Index i = 0; i < m; ++i) out << "," << traj.e_c[k](i);
    out << "," << traj.u[k];
    for (Index i = 0; i < m; ++i) out << "," << traj.theta_true[k](i);
    for (Index i = 0; i < m; ++i) out << "," << traj.theta_hat[k](i);
    for (Index i = 0; i < n_alpha; ++i) out << "," << traj.alpha_hat[k](i);
    for (Index j = 0; j < n_models; ++j)
      for (Index i = 0; i < m; ++i) out << "," << traj.model_states[k](i, j);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace {

std::string format_time(const std::optional<double>& t) {
  if (!t) return "not_converged";
  std::ostringstream os;
  os << std::setprecision(17) << *t;
  return os.str();
}

}  // namespace

void write_metrics_report(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << std::setprecision(17);
  out << "tracking_convergence_time = " << format_time(report.tracking_convergence_time) << "\n";
  out << "parameter_convergence_time = " << format_time(report.parameter_convergence_time) << "\n";
  out << "final_parameter_error = " << report.final_parameter_error << "\n";
  out << "mean_abs_tracking_error = " << report.mean_abs_tracking_error << "\n";
  if (report.alpha_error_mean) out << "alpha_error_mean = " << *report.alpha_error_mean << "\n";
  if (report.alpha_error_final) out << "alpha_error_final = " << *report.alpha_error_final << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void write_gnuplot_script(const Trajectory& traj, const std::string& csv_path,
                          const std::string& script_path) {
  std::ofstream out(script_path);
  if (!out) throw IoError("cannot open for writing: " + script_path);
  const Index m = traj.x_p.empty() ? 0 : traj.x_p.front().size();
  out << "set datafile separator ','\n";
  out << "set key autotitle columnhead\n";
  out << "set xlabel 't [s]'\n";
  out << "set terminal pngcairo size 1000,600\n";
  out << "set output 'tracking_error.png'\n";
  out << "plot '" << csv_path << "' using 1:" << (2 + 2 * m) << " with lines title 'e_c[0]'\n";
  out << "set output 'parameter_estimates.png'\n";
  out << "plot";
  for (Index i = 0; i < m; ++i) {
    out << " '" << csv_path << "' using 1:" << (3 + 4 * m + i) << " with lines title 'theta_hat"
        << i << "',";
    out << " '" << csv_path << "' using 1:" << (3 + 3 * m + i) << " with lines dashtype 2 title 'theta_true"
        << i << "'" << (i + 1 < m ? "," : "\n");
  }
  if (!out) throw IoError("write failed: " + script_path);
}

}  // namespace mmrac
