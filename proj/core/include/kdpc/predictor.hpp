#pragma once

#include "kdpc/residual.hpp"

#include <cstdint>
#include <memory>

namespace kdpc {

struct SolverSettings {
  int restarts = 5;
  int max_iters = 500;
  double grad_tol = 1e-8;
  /// Optional ridge lambda |g|^2 added to the residual; 0 keeps the objective
  /// unregularized.
  double ridge = 0.0;
  std::uint64_t seed = 0;
  /// Adds one start taken from the Hankel column whose known samples are
  /// closest to the query.
  bool window_scan = true;

  bool operator==(const SolverSettings&) const = default;
};

/// Open-loop prediction query: measured prefix (u_init, y_init) of length T_m
/// and planned inputs u_future of length T_p, against a Gram problem of depth
/// T_m + T_p. The prefix is treated as exact; only the future outputs are free.
class PredictionProblem {
 public:
  PredictionProblem(std::shared_ptr<const GramProblem> gram, Mat u_init, Mat y_init,
                    Mat u_future);

  const GramProblem& gram() const noexcept { return model_.gram(); }
  const ResidualModel& model() const noexcept { return model_; }
  Eigen::Index t_m() const noexcept { return u_init_.cols(); }
  Eigen::Index t_p() const noexcept { return u_future_.cols(); }
  const Mat& u_init() const noexcept { return u_init_; }
  const Mat& y_init() const noexcept { return y_init_; }
  const Mat& u_future() const noexcept { return u_future_; }

  /// Full query input sequence [u_init, u_future].
  const Mat& query_u() const noexcept { return query_u_; }
  /// Full query output sequence [y_init, y_future].
  Mat query_y(const Mat& y_future) const;

 private:
  ResidualModel model_;
  Mat u_init_;
  Mat y_init_;
  Mat u_future_;
  Mat query_u_;
};

struct SolverReport {
  int iterations = 0;     ///< summed over all starts
  int restarts_used = 0;  ///< starts actually run
  int failed_starts = 0;  ///< starts aborted on a non-finite objective
  bool converged = false; ///< the returned start met the gradient tolerance
  double grad_norm = 0.0; ///< reduced-gradient infinity norm at exit
};

struct PredictionResult {
  Mat y_pred;  ///< n_y x T_p
  Vec g;
  double residual = 0.0;     ///< g'Kg + k(v,v) - 2 sum g_i k(v, v_i) at the solution
  double self_kernel = 0.0;  ///< k(v,v) at the solution, for relative tolerances
  SolverReport report;
};

/// Residual at (g, y_future).
double residual(const PredictionProblem& problem, const Vec& g, const Mat& y_future);

struct ResidualGradient {
  Vec g;  ///< n
  Mat y;  ///< n_y x T_p
};
ResidualGradient residual_grad(const PredictionProblem& problem, const Vec& g,
                               const Mat& y_future);

/// Minimizes the residual jointly over (g, y_future).
///
/// g is eliminated exactly through the Gram eigendecomposition, and the
/// remaining function of y_future is minimized with L-BFGS from several
/// deterministic starts: the last measured output held constant, the nearest
/// Hankel column (when enabled), and Gaussian perturbations of the hold start
/// with std 0.1 * (training output std). Returns the best local minimizer.
/// Throws SolverFailure when every start hits a non-finite objective.
PredictionResult predict(const PredictionProblem& problem, const SolverSettings& settings = {});

/// Zero-order-hold baseline: the last measured output repeated T_p times.
Mat hold_prediction(const PredictionProblem& problem);

}  // namespace kdpc
