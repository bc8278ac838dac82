#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmrac/identification.hpp"
#include "mmrac/plant.hpp"
#include "mmrac/second_level.hpp"
#include "mmrac/types.hpp"

namespace mmrac {

enum class ControllerKind {
  DirectFirstLevel,
  IndirectFirstLevel,
  SecondLevelAlgebraic,
  SecondLevelOde,
};

struct GainConfig {
  double first_level = 10.0;  // gamma for the gradient laws
  double alpha = 150.0;       // gamma_alpha for the weight estimator ODE
};

/// Declarative description of one experiment. Model initial states are
/// always set equal to the plant initial state; that equality is what makes
/// the convex-combination identities hold.
struct ScenarioConfig {
  std::string name = "scenario";
  PlantSpec plant;
  ReferenceSpec reference;
  ControllerKind controller = ControllerKind::SecondLevelOde;
  double t_star = 0.5;  // SecondLevelAlgebraic: estimate-and-switch instant
  ModelMode model_mode = ModelMode::Fixed;
  std::optional<Matrixd> vertices;  // explicit model parameters, one per column
  std::optional<Hypercube> box;     // or auto-placed via default_vertices
  GainConfig gains;
  NoiseModel noise;
  double t_end = 20.0;
  double step = 1e-3;
  int sample_every = 10;
  // Optional override of the weight estimate's initial value (full length
  // m+1, summing to one). Defaults to the uniform centroid.
  std::optional<Vectord> alpha_init;
  // Free-form provenance: which values come from the source experiment and
  // which were filled from library defaults.
  std::string notes;
};

/// Time-sampled record of one run. All series share the same length; the
/// alpha and model-theta series are empty when the controller has no use
/// for them.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vectord> x_p;
  std::vector<Vectord> x_m;
  std::vector<Vectord> e_c;  // x_p - x_m
  std::vector<double> u;
  std::vector<double> r;
  std::vector<Vectord> theta_true;
  std::vector<Vectord> theta_hat;
  std::vector<Vectord> alpha_hat;      // full weights, length m+1
  std::vector<Matrixd> model_states;   // m x N per sample
  std::vector<Matrixd> model_thetas;   // m x N per sample (adaptive runs)
};

struct MetricsReport {
  std::optional<double> tracking_convergence_time;
  std::optional<double> parameter_convergence_time;
  double final_parameter_error = 0.0;
  double mean_abs_tracking_error = 0.0;
  std::optional<double> alpha_error_mean;
  std::optional<double> alpha_error_final;
};

struct LevelComparison {
  ScenarioConfig first_config;
  ScenarioConfig second_config;
  Trajectory first;
  Trajectory second;
  MetricsReport first_metrics;
  MetricsReport second_metrics;
};

/// Throws ConfigError when the scenario violates its contract (bad
/// dimensions, non-Hurwitz reference, vertex count, plant parameters leaving
/// the hull, ...).
void validate_config(const ScenarioConfig& config);

/// Model parameter columns the run will start from: the explicit vertices,
/// or default_vertices over the box. Second-level controllers require
/// exactly m+1 columns.
Matrixd resolve_vertices(const ScenarioConfig& config);

Trajectory run_scenario(const ScenarioConfig& config);

/// First time after which the series stays below threshold * peak for the
/// rest of the horizon; nullopt when it never settles.
std::optional<double> convergence_time(std::span<const double> times,
                                       std::span<const double> values, double threshold);

/// Same suffix rule against an absolute threshold.
std::optional<double> time_below(std::span<const double> times, std::span<const double> values,
                                 double threshold);

MetricsReport compute_metrics(const Trajectory& traj, double t_from = 0.0,
                              double t_to = std::numeric_limits<double>::infinity(),
                              const std::optional<Vectord>& alpha_oracle = std::nullopt);

/// Runs the same plant under first-level indirect control and second-level
/// ODE control with identical input, step and gain policy.
LevelComparison compare_levels(const ScenarioConfig& base);

ScenarioConfig builtin(const std::string& name);
std::vector<std::string> builtin_names();

/// FNV-1a over the raw bytes of a double series; used to assert that paired
/// runs consumed identical reference-input samples.
inline std::uint64_t hash_series(std::span<const double> values) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : values) {
    const auto bytes = std::bit_cast<std::array<unsigned char, 8>>(v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace mmrac
