#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "mmrac/numerics.hpp"
#include "mmrac/types.hpp"

namespace mmrac {

enum class ProfileKind { Constant, Sinusoidal, SquareWave };

/// Time profile of the plant parameter row theta_p(t).
///
/// Sinusoidal entries evaluate to base + amplitude * sin(frequency*t + phase)
/// per entry, so a cosine entry is expressed with a phase offset of pi/2.
/// A square wave evaluates to base + amplitude * f(t) with f switching
/// between +1 and -1 every period/2, f(0) = +1, zero mean over a period.
struct ParameterProfile {
  ProfileKind kind = ProfileKind::Constant;
  Vectord base;
  Vectord amplitude;  // per entry; ignored for Constant
  double frequency = 0.0;  // rad/s, Sinusoidal only
  Vectord phase_offsets;   // rad per entry, Sinusoidal only
  double period = 0.0;     // seconds, SquareWave only

  static ParameterProfile constant(Vectord base_value) {
    ParameterProfile p;
    p.base = std::move(base_value);
    return p;
  }
};

struct PlantSpec {
  ParameterProfile profile;
  Vectord initial_state;  // defaults to zero when empty
};

/// Reference input r(t) = offset + sum_k amplitude_k * sin(frequency_k*t + phase_k).
struct ReferenceInputSpec {
  struct Component {
    double amplitude = 0.0;
    double frequency = 0.0;  // rad/s
    double phase = 0.0;      // rad
  };
  std::vector<Component> components;
  double offset = 0.0;
};

/// Persistently exciting default used by every built-in scenario:
/// r(t) = 3 sin(1.1 t) + 2 sin(2.3 t) + 1.
inline ReferenceInputSpec default_reference_input() {
  ReferenceInputSpec spec;
  spec.components = {{3.0, 1.1, 0.0}, {2.0, 2.3, 0.0}};
  spec.offset = 1.0;
  return spec;
}

struct ReferenceSpec {
  Vectord theta_m;        // last row of A_m; must be Hurwitz
  Vectord initial_state;  // defaults to zero when empty
  ReferenceInputSpec input = default_reference_input();
};

enum class NoiseKind { None, Gaussian };

/// Measurement noise on the plant output. Sampling is a pure function of
/// (seed, draw_index), so identical seeds reproduce identical sample paths
/// and draws can be made in any order.
struct NoiseModel {
  NoiseKind kind = NoiseKind::None;
  double std_dev = 0.0;  // applied to every state entry
  std::uint64_t seed = 0;
};

/// Axis-aligned box of admissible plant parameters.
struct Hypercube {
  Vectord lower;
  Vectord upper;
};

inline Vectord eval_profile(const ParameterProfile& profile, double t) {
  switch (profile.kind) {
    case ProfileKind::Constant:
      return profile.base;
    case ProfileKind::Sinusoidal: {
      Vectord value = profile.base;
      for (Index i = 0; i < value.size(); ++i) {
        const double phase = profile.phase_offsets.size() > i ? profile.phase_offsets(i) : 0.0;
        const double amp = profile.amplitude.size() > i ? profile.amplitude(i) : 0.0;
        value(i) += amp * std::sin(profile.frequency * t + phase);
      }
      return value;
    }
    case ProfileKind::SquareWave: {
      const double local = std::fmod(t, profile.period);
      const double f = (local < profile.period / 2.0) ? 1.0 : -1.0;
      Vectord value = profile.base;
      for (Index i = 0; i < value.size(); ++i) {
        const double amp = profile.amplitude.size() > i ? profile.amplitude(i) : 0.0;
        value(i) += amp * f;
      }
      return value;
    }
  }
  return profile.base;
}

/// Instants in (0, t_end) where the profile is discontinuous. The simulation
/// driver splits integration steps exactly at these times so the stepper
/// never straddles a jump.
inline std::vector<double> profile_discontinuities(const ParameterProfile& profile, double t_end) {
  std::vector<double> times;
  if (profile.kind != ProfileKind::SquareWave || profile.period <= 0.0) return times;
  const double half = profile.period / 2.0;
  for (double s = half; s < t_end; s += half) times.push_back(s);
  return times;
}

/// x_p' = A_p x_p + b u with A_p = companion(theta_p). Uses the companion
/// structure directly instead of materializing the matrix.
template <typename DerivedX, typename DerivedTheta>
Vector<typename DerivedX::Scalar> plant_dynamics(const Eigen::MatrixBase<DerivedX>& x_p,
                                                 typename DerivedX::Scalar u,
                                                 const Eigen::MatrixBase<DerivedTheta>& theta_p) {
  using Scalar = typename DerivedX::Scalar;
  const Index m = x_p.size();
  if (theta_p.size() != m) throw std::invalid_argument("plant_dynamics: dimension mismatch");
  Vector<Scalar> dx(m);
  dx.head(m - 1) = x_p.tail(m - 1);
  dx(m - 1) = theta_p.dot(x_p) + u;
  return dx;
}

/// x_m' = A_m x_m + b r; the reference model is the same companion-form
/// system driven by the reference input.
template <typename DerivedX, typename DerivedTheta>
Vector<typename DerivedX::Scalar> reference_dynamics(const Eigen::MatrixBase<DerivedX>& x_m,
                                                     typename DerivedX::Scalar r,
                                                     const Eigen::MatrixBase<DerivedTheta>& theta_m) {
  return plant_dynamics(x_m, r, theta_m);
}

inline double reference_input(const ReferenceInputSpec& spec, double t) {
  double r = spec.offset;
  for (const auto& c : spec.components) r += c.amplitude * std::sin(c.frequency * t + c.phase);
  return r;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline double uniform01(std::uint64_t& state) {
  // 53 mantissa bits; result lies in (0, 1].
  return (static_cast<double>(splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace detail

/// Standard-normal vector derived from (seed, draw_index) via Box-Muller on
/// splitmix64 streams. Implemented directly rather than through
/// std::normal_distribution so sample paths are identical across toolchains.
inline Vectord noise_draw(const NoiseModel& noise, Index dim, std::uint64_t draw_index) {
  Vectord sample = Vectord::Zero(dim);
  if (noise.kind != NoiseKind::Gaussian || noise.std_dev == 0.0) return sample;
  std::uint64_t state = noise.seed;
  state ^= 0xD1B54A32D192ED03ull * (draw_index + 1);
  for (Index i = 0; i < dim; ++i) {
    const double u1 = detail::uniform01(state);
    const double u2 = detail::uniform01(state);
    sample(i) = noise.std_dev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  return sample;
}

/// Measured plant output: exact pass-through for NoiseKind::None, otherwise
/// the state plus an i.i.d. zero-mean Gaussian perturbation per entry.
inline Vectord measure(const Vectord& x_p, const NoiseModel& noise, std::uint64_t draw_index) {
  if (noise.kind == NoiseKind::None) return x_p;
  return x_p + noise_draw(noise, x_p.size(), draw_index);
}

}  // namespace mmrac
