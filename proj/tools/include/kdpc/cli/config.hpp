#pragma once

#include "kdpc/controller.hpp"
#include "kdpc/kernels.hpp"
#include "kdpc/plants.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace kdpc::cli {

struct PlantSection {
  PlantModel model = pendulum_plant();
  ExcitationSpec excitation{excitation::UniformRandom{}, 500, 0};
  std::optional<Vec> x0;  ///< plant default when absent
  double output_noise = 0.0;

  Vec initial_state() const { return x0 ? *x0 : default_initial_state(model); }
  bool operator==(const PlantSection& o) const {
    return model.kind == o.model.kind && model.dt == o.model.dt &&
           model.substeps == o.model.substeps && excitation == o.excitation && x0 == o.x0 &&
           output_noise == o.output_noise;
  }
};

struct KernelSection {
  KernelSpec k_u = KernelSpec::linear();
  KernelSpec k_y = KernelSpec::linear();
  bool operator==(const KernelSection&) const = default;
};

/// Piecewise-constant reference: each level held for `hold` samples.
struct Setpoint {
  Vec value;
  long hold = 1;
  bool operator==(const Setpoint& o) const { return value == o.value && hold == o.hold; }
};

enum class Normalization { None, ZScore };

struct ProblemSection {
  Eigen::Index t_m = 10;  ///< T_m for prediction, T_ini for control
  Eigen::Index t_p = 10;  ///< T_p for prediction, N_h for control
  std::optional<Mat> Q;   ///< identity when absent
  std::optional<Mat> R;   ///< zero when absent
  std::vector<Setpoint> y_ref;
  std::string y_ref_path;  ///< CSV with columns t,yref1..; used when y_ref is empty
  std::optional<InputBox> u_box;
  std::optional<OutputBox> y_box;
  long steps = 0;
  Normalization normalize = Normalization::None;

  bool operator==(const ProblemSection& o) const {
    return t_m == o.t_m && t_p == o.t_p && Q == o.Q && R == o.R && y_ref == o.y_ref &&
           y_ref_path == o.y_ref_path && u_box == o.u_box && y_box == o.y_box &&
           steps == o.steps && normalize == o.normalize;
  }
};

struct SolverSection {
  SolverSettings settings;
  std::vector<double> penalties{1e2, 1e3, 1e4, 1e5};
  double bilevel_tol = 1e-6;
  double output_penalty = 1e3;
  bool lower_level_stage = true;
  int lower_level_iters = 60;
  bool operator==(const SolverSection&) const = default;
};

struct IoSection {
  std::string data;
  std::string query;
  std::string out;
  std::uint64_t seed = 0;
  bool operator==(const IoSection&) const = default;
};

struct ExperimentConfig {
  PlantSection plant;
  KernelSection kernel;
  ProblemSection problem;
  SolverSection solver;
  NoiseModel noise;
  IoSection io;

  bool operator==(const ExperimentConfig&) const = default;

  /// Cross-section checks; throws ArgumentError.
  void validate() const;
  /// Solver settings with the run seed applied.
  SolverSettings solver_settings() const;
  MpcSettings mpc_settings() const;
  /// Reference matrix for `steps` closed-loop samples; loads y_ref_path if set.
  Mat reference(long steps) const;
  /// Applies the io seed to every randomized section.
  void set_seed(std::uint64_t seed);
};

/// Parse from JSON text. Throws ArgumentError with the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

/// Named kernel presets accepted in place of a term list.
KernelSpec kernel_preset(const std::string& name);

}  // namespace kdpc::cli
