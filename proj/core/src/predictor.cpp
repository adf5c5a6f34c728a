#include "kdpc/predictor.hpp"

#include "kdpc/errors.hpp"
#include "kdpc/lbfgs.hpp"
#include "kdpc/random.hpp"
#include "parallel.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace kdpc {

PredictionProblem::PredictionProblem(std::shared_ptr<const GramProblem> gram, Mat u_init,
                                     Mat y_init, Mat u_future)
    : model_(std::move(gram)),
      u_init_(std::move(u_init)),
      y_init_(std::move(y_init)),
      u_future_(std::move(u_future)) {
  const auto& g = model_.gram();
  if (u_init_.cols() < 1 || u_future_.cols() < 1) {
    throw ArgumentError("prediction needs T_m >= 1 and T_p >= 1");
  }
  if (y_init_.cols() != u_init_.cols()) {
    throw ArgumentError("measured inputs and outputs differ in length");
  }
  if (u_init_.cols() + u_future_.cols() != g.depth()) {
    throw ArgumentError("T_m + T_p = " + std::to_string(u_init_.cols() + u_future_.cols()) +
                        " does not match the Gram depth " + std::to_string(g.depth()));
  }
  if (u_init_.rows() != g.data().n_u() || u_future_.rows() != g.data().n_u() ||
      y_init_.rows() != g.data().n_y()) {
    throw ArgumentError("query dimensions do not match the training data");
  }
  query_u_.resize(u_init_.rows(), g.depth());
  query_u_ << u_init_, u_future_;
}

Mat PredictionProblem::query_y(const Mat& y_future) const {
  if (y_future.rows() != y_init_.rows() || y_future.cols() != t_p()) {
    throw ArgumentError("y_future must be n_y x T_p");
  }
  Mat y(y_init_.rows(), gram().depth());
  y << y_init_, y_future;
  return y;
}

double residual(const PredictionProblem& problem, const Vec& g, const Mat& y_future) {
  const Mat qy = problem.query_y(y_future);
  return problem.model().residual(g, Window{problem.query_u(), qy});
}

ResidualGradient residual_grad(const PredictionProblem& problem, const Vec& g,
                               const Mat& y_future) {
  const Mat qy = problem.query_y(y_future);
  ResidualModel::Gradient full;
  problem.model().residual_grad(g, Window{problem.query_u(), qy}, full);
  return {std::move(full.g), full.y.rightCols(problem.t_p())};
}

Mat hold_prediction(const PredictionProblem& problem) {
  return problem.y_init().col(problem.t_m() - 1).replicate(1, problem.t_p());
}

namespace {

Mat nearest_window_outputs(const PredictionProblem& p) {
  const auto& data = p.gram().data();
  const Eigen::Index n = p.gram().columns();
  const Eigen::Index depth = p.gram().depth();
  Eigen::Index best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double d = (data.u().middleCols(j, depth) - p.query_u()).squaredNorm() +
                     (data.y().middleCols(j, p.t_m()) - p.y_init()).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = j;
    }
  }
  return data.y().middleCols(best + p.t_m(), p.t_p());
}

struct StartOutcome {
  LbfgsResult run;
  bool ok = false;
};

}  // namespace

PredictionResult predict(const PredictionProblem& problem, const SolverSettings& settings) {
  if (settings.restarts < 1) throw ArgumentError("restarts must be >= 1");
  if (settings.max_iters < 0) throw ArgumentError("max_iters must be >= 0");

  const auto& model = problem.model();
  const Eigen::Index n_y = problem.y_init().rows();
  const Eigen::Index t_m = problem.t_m();
  const Eigen::Index t_p = problem.t_p();

  std::vector<Mat> starts;
  const Mat hold = hold_prediction(problem);
  starts.push_back(hold);
  if (settings.window_scan) starts.push_back(nearest_window_outputs(problem));
  {
    auto rng = make_stream(settings.seed, "restarts");
    const Mat& ty = problem.gram().data().y();
    Vec spread(n_y);
    for (Eigen::Index i = 0; i < n_y; ++i) {
      const double mean = ty.row(i).mean();
      const double sd = std::sqrt((ty.row(i).array() - mean).square().mean());
      spread(i) = 0.1 * (sd > 0.0 ? sd : 1.0);
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int r = 1; r < settings.restarts; ++r) {
      Mat s = hold;
      for (Eigen::Index k = 0; k < t_p; ++k) {
        for (Eigen::Index i = 0; i < n_y; ++i) s(i, k) += spread(i) * normal(rng);
      }
      starts.push_back(std::move(s));
    }
  }

  const Mat& qu = problem.query_u();
  // Inputs and the measured outputs never move; their kernel terms are shared.
  const auto fixed = model.fixed_part(Window{qu, problem.query_y(hold)}, t_m + t_p, t_m);
  const Objective objective = [&](const Vec& x, Vec& grad) {
    Mat qy(n_y, t_m + t_p);
    qy << problem.y_init(), Eigen::Map<const Mat>(x.data(), n_y, t_p);
    const auto red = model.reduced(Window{qu, qy}, settings.ridge, fixed, true);
    grad = Eigen::Map<const Vec>(red.grad_y.rightCols(t_p).eval().data(), n_y * t_p);
    return red.value;
  };

  LbfgsOptions opts;
  opts.max_iters = settings.max_iters;
  opts.grad_tol = settings.grad_tol;
  opts.f_noise = kValueNoise * model.reduced(Window{qu, problem.query_y(hold)}, settings.ridge, fixed, false).self;

  std::vector<StartOutcome> outcomes(starts.size());
  detail::parallel_for(starts.size(), [&](std::size_t s) {
    const Vec x0 = Eigen::Map<const Vec>(starts[s].data(), n_y * t_p);
    outcomes[s].run = minimize_lbfgs(objective, x0, opts);
    outcomes[s].ok = outcomes[s].run.status != LbfgsStatus::NonFinite;
  });

  PredictionResult result;
  result.report.restarts_used = static_cast<int>(starts.size());
  const StartOutcome* best = nullptr;
  for (const auto& o : outcomes) {
    result.report.iterations += o.run.iterations;
    if (!o.ok) {
      ++result.report.failed_starts;
      continue;
    }
    if (best == nullptr || better_run(o.run, best->run, opts.f_noise)) best = &o;
  }
  if (best == nullptr) {
    throw SolverFailure("predict: all " + std::to_string(starts.size()) +
                        " starts hit a non-finite objective");
  }

  result.y_pred = Eigen::Map<const Mat>(best->run.x.data(), n_y, t_p);
  const Mat qy = problem.query_y(result.y_pred);
  const Window q{qu, qy};
  const auto red = model.reduced(q, settings.ridge, t_m + t_p, false);
  result.g = red.g;
  result.self_kernel = red.self;
  result.residual = model.residual(result.g, q);
  result.report.converged = best->run.converged();
  result.report.grad_norm = best->run.grad_inf;
  return result;
}

}  // namespace kdpc
