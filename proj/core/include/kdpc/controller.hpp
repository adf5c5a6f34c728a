#pragma once

#include "kdpc/linear_oracle.hpp"
#include "kdpc/plants.hpp"
#include "kdpc/predictor.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace kdpc {

/// Soft output limits, penalized by a quadratic hinge.
struct OutputBox {
  Vec lower;
  Vec upper;
  bool operator==(const OutputBox& o) const { return lower == o.lower && upper == o.upper; }
};

struct MpcSettings {
  /// Penalty weights on the lower-level residual, strictly increasing.
  std::vector<double> penalties{1e2, 1e3, 1e4, 1e5};
  /// Inner quasi-Newton settings (max_iters, grad_tol and ridge are used).
  SolverSettings inner;
  /// Certification threshold, relative to k(v, v).
  double bilevel_tol = 1e-6;
  /// Weight of the soft output-box penalty.
  double output_penalty = 1e3;
  /// After the penalty stages, re-solve over u_p with y_p held at the
  /// lower-level minimizer (implicit differentiation through the inner
  /// problem).
  bool lower_level_stage = true;
  /// Iteration cap of that stage.
  int lower_level_iters = 60;
};

/// Receding-horizon problem: Gram problem of depth T_ini + N_h, stage cost
///   l(u, y) = (y - r)' Q (y - r) + u' R u
/// summed over the N_h planned samples, input box (hard, by projection) and
/// optional soft output box. `y_ref` holds one column per closed-loop time
/// step; the last column is held beyond its end.
class MpcProblem {
 public:
  MpcProblem(std::shared_ptr<const GramProblem> gram, Eigen::Index t_ini, Eigen::Index n_h,
             Mat Q, Mat R, Mat y_ref, std::optional<InputBox> u_box = std::nullopt,
             std::optional<OutputBox> y_box = std::nullopt, MpcSettings settings = {});

  const GramProblem& gram() const noexcept { return model_.gram(); }
  const ResidualModel& model() const noexcept { return model_; }
  Eigen::Index t_ini() const noexcept { return t_ini_; }
  Eigen::Index n_h() const noexcept { return n_h_; }
  Eigen::Index n_u() const noexcept { return gram().data().n_u(); }
  Eigen::Index n_y() const noexcept { return gram().data().n_y(); }
  const Mat& Q() const noexcept { return Q_; }
  const Mat& R() const noexcept { return R_; }
  const Mat& y_ref() const noexcept { return y_ref_; }
  const std::optional<InputBox>& u_box() const noexcept { return u_box_; }
  const std::optional<OutputBox>& y_box() const noexcept { return y_box_; }
  const MpcSettings& settings() const noexcept { return settings_; }

  /// Reference for the N_h planned outputs starting at closed-loop time `offset`.
  Mat reference_window(Eigen::Index offset) const;

  /// Stage cost of a plan against reference_window(offset), without penalties.
  double upper_cost(const Mat& u_plan, const Mat& y_plan, Eigen::Index offset) const;

 private:
  ResidualModel model_;
  Eigen::Index t_ini_;
  Eigen::Index n_h_;
  Mat Q_;
  Mat R_;
  Mat y_ref_;
  std::optional<InputBox> u_box_;
  std::optional<OutputBox> y_box_;
  MpcSettings settings_;
};

struct StageDiagnostics {
  double penalty = 0.0;
  double residual = 0.0;    ///< reduced lower-level residual at stage exit
  double upper_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false;      ///< non-finite objective; stage result discarded
};

struct MpcStepResult {
  Mat u_plan;  ///< n_u x N_h
  Mat y_plan;  ///< n_y x N_h
  Vec g;
  double residual = 0.0;
  double self_kernel = 0.0;
  double upper_cost = 0.0;
  /// Lower-level optimality gap: the residual itself when ridge == 0,
  /// otherwise the regularized value at y_plan minus its minimum over y_p.
  double lower_gap = 0.0;
  /// lower_gap <= bilevel_tol * k(v, v)
  bool certified = false;
  /// The plan is the initial data-window candidate, which the homotopy could
  /// not improve on.
  bool from_candidate = false;
  std::vector<StageDiagnostics> stages;
  /// Lower-level stage (penalty field unused); `failed` also marks a skipped stage.
  StageDiagnostics lower_level;
};

struct WarmStart {
  Mat u;  ///< n_u x N_h
  Mat y;  ///< n_y x N_h
};

/// One bi-level solve by penalty homotopy over (u_p, y_p), with g eliminated
/// exactly at every evaluation. Initialized from the best data window (stage
/// cost plus first-stage penalty on its residual) or from `warm` when that
/// scores better. When `lower_level_stage` is set, the homotopy result seeds
/// a solve over u_p alone with y_p pinned to the lower-level minimizer, which
/// removes the penalty's slack in the residual. Throws SolverFailure when
/// every stage fails.
MpcStepResult solve_step(const MpcProblem& problem, const Mat& u_ini, const Mat& y_ini,
                         Eigen::Index ref_offset = 0,
                         const std::optional<WarmStart>& warm = std::nullopt);

struct ClosedLoopEntry {
  long step = 0;
  double t = 0.0;
  Vec u;      ///< applied input (normalized units)
  Vec y;      ///< measured output (normalized units)
  Vec y_ref;  ///< reference at this step
  double residual = 0.0;
  double solve_ms = 0.0;
  bool certified = false;
};

struct ClosedLoopLog {
  Eigen::Index n_u = 0;
  Eigen::Index n_y = 0;
  std::vector<ClosedLoopEntry> entries;
};

/// Receding-horizon simulation. The initial context is T_ini samples of the
/// plant under zero (physical) input from x0; each step solves, applies the
/// first planned input for one sample and shifts the context. `scaling` maps
/// plant units to the normalized units of the Gram data. Throws
/// DivergenceError carrying the failing step index.
ClosedLoopLog run_closed_loop(const MpcProblem& problem, const PlantModel& plant, const Vec& x0,
                              long steps, const std::optional<Scaling>& scaling = std::nullopt);

/// `step,t,u1..,y1..,yref1..,residual,solve_ms`
void write_closed_loop_csv(std::ostream& out, const ClosedLoopLog& log);
void write_closed_loop_csv(const std::string& path, const ClosedLoopLog& log);

struct TrackingSummary {
  double final_quarter_error = 0.0;  ///< mean |y - y_ref| over the last quarter of the run
  double max_overshoot = 0.0;
  double mean_solve_ms = 0.0;
};
TrackingSummary summarize(const ClosedLoopLog& log);

/// Mean |y - y_ref| over the final quarter of every constant-reference
/// interval, one value per interval.
std::vector<double> setpoint_errors(const ClosedLoopLog& log);

}  // namespace kdpc
