#pragma once

#include "kdpc/trajectory.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace kdpc {

namespace plant {

/// x1' = x2,  x2' = -(2g/l) sin x1 - mu x2^3 + (1/l) |cos x1| u,  y = x1.
struct Pendulum {
  double g = 9.8;
  double l = 0.5;
  double mu = 0.1;
  bool operator==(const Pendulum&) const = default;
};

/// x1' = -(Ra/La) x1 + (km/La) x2 u + ua/La,
/// x2' = -(B/J) x2 + (km/J) x1 u - tau/J,  y = x2.
struct BilinearMotor {
  double La = 0.314;
  double Ra = 12.345;
  double km = 0.253;
  double J = 0.00441;
  double B = 0.00732;
  double tau = 1.47;
  double ua = 60.0;
  bool operator==(const BilinearMotor&) const = default;
};

/// x+ = A x + B u,  y = C x + D u, applied exactly once per sample.
struct Lti {
  Mat A, B, C, D;
  bool operator==(const Lti& o) const {
    return A == o.A && B == o.B && C == o.C && D == o.D;
  }
};

}  // namespace plant

struct PlantModel {
  std::variant<plant::Pendulum, plant::BilinearMotor, plant::Lti> kind;
  double dt = 0.04;
  int substeps = 10;  ///< RK4 sub-intervals per sample (ignored by Lti)

  Eigen::Index state_dim() const;
  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;

  /// Throws ArgumentError on non-positive dt, substeps < 1, non-physical
  /// parameters or inconsistent LTI matrices.
  void validate() const;
};

PlantModel pendulum_plant(double dt = 0.04, int substeps = 10);
PlantModel motor_plant(double dt = 0.01, int substeps = 10);
PlantModel lti_plant(plant::Lti sys, double dt = 1.0);

/// Measured output at state x under input u (feedthrough only for Lti).
Vec plant_output(const PlantModel& plant, const Vec& x, const Vec& u);

struct StepResult {
  Vec x_next;
  Vec y;  ///< output at the current state, y_k = h(x_k, u_k)
};

/// One sampling interval with u held constant. Throws DivergenceError when the
/// next state is not finite.
StepResult step(const PlantModel& plant, const Vec& x, const Vec& u);

/// Default initial state: pendulum at rest, motor at its u = 0 equilibrium,
/// LTI at the origin.
Vec default_initial_state(const PlantModel& plant);

/// State equilibrium of the motor under constant input u (linear in x for
/// fixed u).
Vec motor_equilibrium(const plant::BilinearMotor& m, double u);

namespace excitation {

struct UniformRandom {
  double lo = -1.0;
  double hi = 1.0;
  bool operator==(const UniformRandom&) const = default;
};

/// N(mu_k, sigma^2) with mu_k moving linearly from mu_start to mu_end.
struct DriftingGaussian {
  double mu_start = -0.5;
  double mu_end = 0.5;
  double sigma = 1.0;
  bool operator==(const DriftingGaussian&) const = default;
};

/// Each sample drawn uniformly from a finite set of levels.
struct Prbs {
  std::vector<double> levels{-1.0, 1.0};
  bool operator==(const Prbs&) const = default;
};

/// i.i.d. N(0, sigma^2).
struct WhiteGaussian {
  double sigma = 1.0;
  bool operator==(const WhiteGaussian&) const = default;
};

}  // namespace excitation

struct ExcitationSpec {
  std::variant<excitation::UniformRandom, excitation::DriftingGaussian, excitation::Prbs,
               excitation::WhiteGaussian>
      kind;
  Eigen::Index length = 1;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ExcitationSpec&) const = default;
};

/// n_u x T input signal; deterministic in the spec's seed.
Mat excitation_signal(const ExcitationSpec& spec, Eigen::Index n_u);

/// Simulates spec.length samples from x0. Optional additive Gaussian output
/// noise (std `output_noise`, seeded by `noise_seed`) is applied to the
/// recorded outputs only.
TrajectoryData generate(const PlantModel& plant, const Vec& x0, const ExcitationSpec& spec,
                        double output_noise = 0.0, std::uint64_t noise_seed = 0);

/// Simulates a given input sequence (n_u x T) from x0; returns the outputs
/// and writes the final state to `x_final` when non-null.
Mat simulate(const PlantModel& plant, const Vec& x0, const Mat& inputs, Vec* x_final = nullptr);

}  // namespace kdpc
