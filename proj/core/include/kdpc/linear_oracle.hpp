#pragma once

#include "kdpc/plants.hpp"
#include "kdpc/trajectory.hpp"

#include <cstdint>
#include <optional>

namespace kdpc {

/// x+ = A x + B u, y = C x + D u.
struct LtiSystem {
  Mat A, B, C, D;

  Eigen::Index n_x() const noexcept { return A.rows(); }
  Eigen::Index n_u() const noexcept { return B.cols(); }
  Eigen::Index n_y() const noexcept { return C.rows(); }

  plant::Lti as_plant() const { return {A, B, C, D}; }
};

/// Rank of [B, AB, ..., A^{n-1}B].
Eigen::Index controllability_rank(const LtiSystem& sys);
double spectral_radius(const Mat& a);

/// Random controllable strictly proper system with spectral radius of A at
/// most `radius_bound`. Resamples until the rank test passes; throws
/// GenerationError after 100 attempts.
LtiSystem random_controllable(Eigen::Index n_x, Eigen::Index n_u, Eigen::Index n_y,
                              std::uint64_t seed, double radius_bound);

/// State-space response to `inputs` (n_u x T) from x0.
Mat simulate_lti(const LtiSystem& sys, const Vec& x0, const Mat& inputs, Vec* x_final = nullptr);

/// Classical data-driven prediction: minimum-norm g solving
/// [H_u; H_y,past] g = [u_init; u_future; y_init], then y_pred = H_y,future g.
/// Throws NotInBehaviorError when the relative residual exceeds 1e-6.
Mat deepc_predict(const TrajectoryData& data, Eigen::Index t_m, Eigen::Index t_p,
                  const Mat& u_init, const Mat& y_init, const Mat& u_future);

struct InputBox {
  Vec lower;
  Vec upper;
  bool operator==(const InputBox& o) const { return lower == o.lower && upper == o.upper; }
};

struct DeepcPlan {
  Mat u;  ///< n_u x N_h
  Mat y;  ///< n_y x N_h
};

/// Convex data-driven control: minimizes
///   sum_{i=1..N_h} (y_i - r_i)' Q (y_i - r_i) + u_i' R u_i
/// over trajectories [context; plan] in the column span of the Hankel matrix,
/// with optional input box handled by an active-set loop. `y_ref` has N_h
/// columns or a single column (held). Throws InfeasibleError when the context
/// is not in the data span or the box cannot be met.
DeepcPlan deepc_control(const TrajectoryData& data, Eigen::Index t_ini, Eigen::Index n_h,
                        const Mat& Q, const Mat& R, const Mat& y_ref, const Mat& u_ini,
                        const Mat& y_ini, const std::optional<InputBox>& u_box = std::nullopt);

}  // namespace kdpc
