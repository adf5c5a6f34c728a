#include "kdpc/controller.hpp"

#include "kdpc/errors.hpp"
#include "kdpc/lbfgs.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

namespace kdpc {

namespace {

bool is_symmetric_psd(const Mat& m) {
  if (m.rows() != m.cols()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-12 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace

MpcProblem::MpcProblem(std::shared_ptr<const GramProblem> gram, Eigen::Index t_ini,
                       Eigen::Index n_h, Mat Q, Mat R, Mat y_ref, std::optional<InputBox> u_box,
                       std::optional<OutputBox> y_box, MpcSettings settings)
    : model_(std::move(gram)),
      t_ini_(t_ini),
      n_h_(n_h),
      Q_(std::move(Q)),
      R_(std::move(R)),
      y_ref_(std::move(y_ref)),
      u_box_(std::move(u_box)),
      y_box_(std::move(y_box)),
      settings_(std::move(settings)) {
  if (t_ini_ < 1 || n_h_ < 1) throw ArgumentError("MPC needs T_ini >= 1 and N_h >= 1");
  if (t_ini_ + n_h_ != model_.gram().depth()) {
    throw ArgumentError("T_ini + N_h must equal the Gram depth " +
                        std::to_string(model_.gram().depth()));
  }
  if (Q_.rows() != n_y() || R_.rows() != n_u() || !is_symmetric_psd(Q_) || !is_symmetric_psd(R_)) {
    throw ArgumentError("Q and R must be symmetric PSD of size n_y and n_u");
  }
  if (y_ref_.rows() != n_y() || y_ref_.cols() < 1) {
    throw ArgumentError("reference must have n_y rows and at least one column");
  }
  if (u_box_) {
    if (u_box_->lower.size() != n_u() || u_box_->upper.size() != n_u() ||
        (u_box_->lower.array() > u_box_->upper.array()).any()) {
      throw ArgumentError("input box must be n_u-dimensional with lower <= upper");
    }
  }
  if (y_box_ && (y_box_->lower.size() != n_y() || y_box_->upper.size() != n_y())) {
    throw ArgumentError("output box must be n_y-dimensional");
  }
  const auto& p = settings_.penalties;
  if (p.empty() || !(p.front() > 0.0)) throw ArgumentError("penalty schedule must be positive");
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (!(p[i] > p[i - 1])) throw ArgumentError("penalty schedule must be strictly increasing");
  }
}

Mat MpcProblem::reference_window(Eigen::Index offset) const {
  Mat r(n_y(), n_h_);
  for (Eigen::Index i = 0; i < n_h_; ++i) {
    r.col(i) = y_ref_.col(std::min(offset + i, y_ref_.cols() - 1));
  }
  return r;
}

double MpcProblem::upper_cost(const Mat& u_plan, const Mat& y_plan, Eigen::Index offset) const {
  const Mat e = y_plan - reference_window(offset);
  return (e.transpose() * Q_ * e).trace() + (u_plan.transpose() * R_ * u_plan).trace();
}

namespace {

struct Layout {
  Eigen::Index n_u, n_y, n_h;
  Eigen::Index size() const { return (n_u + n_y) * n_h; }
  Mat u(const Vec& x) const { return Eigen::Map<const Mat>(x.data(), n_u, n_h); }
  Mat y(const Vec& x) const { return Eigen::Map<const Mat>(x.data() + n_u * n_h, n_y, n_h); }
  Vec pack(const Mat& u, const Mat& y) const {
    Vec x(size());
    x.head(n_u * n_h) = Eigen::Map<const Vec>(u.data(), n_u * n_h);
    x.tail(n_y * n_h) = Eigen::Map<const Vec>(y.data(), n_y * n_h);
    return x;
  }
};

Vec flat(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

struct Candidate {
  Mat u, y;
  Eigen::Index column = -1;
  double residual = std::numeric_limits<double>::infinity();
  double self = 0.0;
  double cost = std::numeric_limits<double>::infinity();
};

// Lower level for fixed planned inputs: y*(u) = argmin_y r(u, y), warm-started
// from the previous minimizer.
class LowerLevel {
 public:
  LowerLevel(const ResidualModel& model, double ridge, Mat& qu, Mat& qy, Eigen::Index t_ini,
             Eigen::Index n_h, int max_iters)
      : model_(model), ridge_(ridge), qu_(qu), qy_(qy), t_ini_(t_ini), n_h_(n_h) {
    opts_.max_iters = max_iters;
    opts_.grad_tol = 1e-7;
  }

  // Sets the planned inputs and re-solves; returns the minimal residual.
  double solve(const Mat& u_plan, const std::vector<Mat>& starts) {
    qu_.rightCols(n_h_) = u_plan;
    fixed_ = model_.fixed_part(Window{qu_, qy_}, qu_.cols(), t_ini_);
    opts_.f_noise = kValueNoise * model_.reduced(Window{qu_, qy_}, ridge_, fixed_, false).self;
    std::optional<LbfgsResult> best;
    for (const Mat& y0 : starts) {
      auto run = minimize_lbfgs(objective(), flat(y0), opts_);
      iterations_ += run.iterations;
      if (run.status == LbfgsStatus::NonFinite) continue;
      if (!best || better_run(run, *best, opts_.f_noise)) best = std::move(run);
    }
    if (!best) throw SolverFailure("lower-level solve hit a non-finite residual");
    qy_.rightCols(n_h_) = Eigen::Map<const Mat>(best->x.data(), qy_.rows(), n_h_);
    return best->f;
  }

  double solve(const Mat& u_plan) { return solve(u_plan, {Mat(qy_.rightCols(n_h_))}); }

  // Central-difference Hessian of the residual in y_p at the current solution.
  Mat hessian(double h) {
    const Vec ys = flat(y());
    const Eigen::Index m = ys.size();
    Mat hyy(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      Vec yp = ys, ym = ys;
      yp(j) += h;
      ym(j) -= h;
      hyy.col(j) = (grad_y(yp) - grad_y(ym)) / (2.0 * h);
    }
    set_y(ys);
    return 0.5 * (hyy + hyy.transpose());
  }

  // One Newton step with the Hessian pseudo-inverse, kept if it shrinks the
  // gradient. Exact when the residual is quadratic in y_p.
  void polish(const std::function<Vec(const Vec&)>& hyy_pinv) {
    const Vec ys = flat(y());
    const Vec g0 = grad_y(ys);
    const Vec y1 = ys - hyy_pinv(g0);
    set_y(grad_y(y1).lpNorm<Eigen::Infinity>() < g0.lpNorm<Eigen::Infinity>() ? y1 : ys);
  }

  Mat y() const { return qy_.rightCols(n_h_); }
  void set_y(const Vec& y) { qy_.rightCols(n_h_) = Eigen::Map<const Mat>(y.data(), qy_.rows(), n_h_); }
  int iterations() const { return iterations_; }

  // d r / d y_p at (u, y) for the current inputs.
  Vec grad_y(const Vec& y) {
    Vec g;
    objective()(y, g);
    return g;
  }

 private:
  Objective objective() {
    return [this](const Vec& x, Vec& grad) {
      qy_.rightCols(n_h_) = Eigen::Map<const Mat>(x.data(), qy_.rows(), n_h_);
      const auto red = model_.reduced(Window{qu_, qy_}, ridge_, fixed_, true);
      grad = flat(red.grad_y.rightCols(n_h_));
      return red.value;
    };
  }

  const ResidualModel& model_;
  double ridge_;
  Mat& qu_;
  Mat& qy_;
  Eigen::Index t_ini_, n_h_;
  LbfgsOptions opts_;
  ResidualModel::FixedPart fixed_;
  int iterations_ = 0;
};

}  // namespace

MpcStepResult solve_step(const MpcProblem& problem, const Mat& u_ini, const Mat& y_ini,
                         Eigen::Index ref_offset, const std::optional<WarmStart>& warm) {
  const Eigen::Index t_ini = problem.t_ini(), n_h = problem.n_h();
  const Eigen::Index n_u = problem.n_u(), n_y = problem.n_y();
  if (u_ini.rows() != n_u || u_ini.cols() != t_ini || y_ini.rows() != n_y ||
      y_ini.cols() != t_ini) {
    throw ArgumentError("solve_step: context must be T_ini samples of u and y");
  }
  const auto& model = problem.model();
  const auto& gram = problem.gram();
  const auto& settings = problem.settings();
  const Layout lay{n_u, n_y, n_h};
  const Mat ref = problem.reference_window(ref_offset);
  const auto& u_box = problem.u_box();
  const auto& y_box = problem.y_box();
  const double ridge = settings.inner.ridge;

  Mat qu(n_u, t_ini + n_h), qy(n_y, t_ini + n_h);
  qu.leftCols(t_ini) = u_ini;
  qy.leftCols(t_ini) = y_ini;
  qu.rightCols(n_h).setZero();
  qy.rightCols(n_h).setZero();
  const auto context = model.fixed_part(Window{qu, qy}, t_ini, t_ini);

  const auto in_box = [&](const Mat& u) {
    if (!u_box) return true;
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
      if ((u.col(k).array() < u_box->lower.array()).any() ||
          (u.col(k).array() > u_box->upper.array()).any()) {
        return false;
      }
    }
    return true;
  };
  const auto clip = [&](Mat u) {
    if (u_box) {
      for (Eigen::Index k = 0; k < u.cols(); ++k) {
        u.col(k) = u.col(k).cwiseMax(u_box->lower).cwiseMin(u_box->upper);
      }
    }
    return u;
  };
  const auto soft_output = [&](const Mat& y, Mat* grad) {
    if (!y_box) return 0.0;
    double s = 0.0;
    for (Eigen::Index k = 0; k < y.cols(); ++k) {
      for (Eigen::Index i = 0; i < n_y; ++i) {
        const double hi = y(i, k) - y_box->upper(i);
        const double lo = y_box->lower(i) - y(i, k);
        if (hi > 0.0) {
          s += hi * hi;
          if (grad) (*grad)(i, k) += 2.0 * settings.output_penalty * hi;
        }
        if (lo > 0.0) {
          s += lo * lo;
          if (grad) (*grad)(i, k) -= 2.0 * settings.output_penalty * lo;
        }
      }
    }
    return settings.output_penalty * s;
  };

  // Data-window scan: residual with g = e_j is |v_j - v|^2 in the product RKHS.
  const double rho0 = settings.penalties.front();
  Candidate scan, zero_res;
  {
    const auto& data = gram.data();
    const Vec& kc = context.cross;
    for (Eigen::Index j = 0; j < gram.columns(); ++j) {
      const Mat uj = data.u().middleCols(j + t_ini, n_h), yj = data.y().middleCols(j + t_ini, n_h);
      double cross = kc(j), self = context.self;
      for (Eigen::Index k = 0; k < n_h; ++k) {
        cross += gram.channel_u().data_eval(data.u().col(j + t_ini + k), uj.col(k));
        cross += gram.channel_y().data_eval(data.y().col(j + t_ini + k), yj.col(k));
        self += eval(gram.k_u(), uj.col(k), uj.col(k)) + eval(gram.k_y(), yj.col(k), yj.col(k));
      }
      const double res = gram.gram()(j, j) + self - 2.0 * cross;
      const double cost = problem.upper_cost(uj, yj, ref_offset) + soft_output(yj, nullptr);
      if (cost + rho0 * res < scan.cost + rho0 * scan.residual) {
        scan = {uj, yj, j, res, self, cost};
      }
      if (res <= settings.bilevel_tol * self && in_box(uj) && cost < zero_res.cost) {
        zero_res = {uj, yj, j, res, self, cost};
      }
    }
  }

  double rho = rho0;
  const Objective objective = [&](const Vec& x, Vec& grad) {
    qu.rightCols(n_h) = lay.u(x);
    qy.rightCols(n_h) = lay.y(x);
    const auto red = model.reduced(Window{qu, qy}, ridge, context, true);
    const Mat up = qu.rightCols(n_h), yp = qy.rightCols(n_h);
    Mat gu = 2.0 * problem.R() * up + rho * red.grad_u.rightCols(n_h);
    Mat gy = 2.0 * problem.Q() * (yp - ref) + rho * red.grad_y.rightCols(n_h);
    const double soft = soft_output(yp, &gy);
    grad = lay.pack(gu, gy);
    return problem.upper_cost(up, yp, ref_offset) + soft + rho * red.value;
  };

  Vec x = lay.pack(clip(scan.u), scan.y);
  if (warm) {
    if (warm->u.rows() != n_u || warm->u.cols() != n_h || warm->y.rows() != n_y ||
        warm->y.cols() != n_h) {
      throw ArgumentError("warm start must be n_u x N_h and n_y x N_h");
    }
    Vec gtmp(lay.size());
    const Vec xw = lay.pack(clip(warm->u), warm->y);
    double fw = std::numeric_limits<double>::infinity(), fs = fw;
    try {
      fw = objective(xw, gtmp);
      fs = objective(x, gtmp);
    } catch (const NumericOverflowError&) {
    }
    if (std::isfinite(fw) && !(fs <= fw)) x = xw;
  }

  LbfgsOptions opts;
  opts.max_iters = settings.inner.max_iters;
  opts.grad_tol = settings.inner.grad_tol;
  std::optional<Bounds> u_bounds;
  if (u_box) {
    Bounds b{Vec::Constant(lay.size(), -std::numeric_limits<double>::infinity()),
             Vec::Constant(lay.size(), std::numeric_limits<double>::infinity())};
    Bounds bu{Vec(n_u * n_h), Vec(n_u * n_h)};
    for (Eigen::Index k = 0; k < n_h; ++k) {
      b.lower.segment(k * n_u, n_u) = u_box->lower;
      b.upper.segment(k * n_u, n_u) = u_box->upper;
      bu.lower.segment(k * n_u, n_u) = u_box->lower;
      bu.upper.segment(k * n_u, n_u) = u_box->upper;
    }
    opts.bounds = std::move(b);
    u_bounds = std::move(bu);
  }

  MpcStepResult result;
  bool any_ok = false;
  for (const double penalty : settings.penalties) {
    rho = penalty;
    const auto run = minimize_lbfgs(objective, x, opts);
    StageDiagnostics d;
    d.penalty = penalty;
    d.iterations = run.iterations;
    d.converged = run.converged();
    d.failed = run.status == LbfgsStatus::NonFinite;
    if (!d.failed) {
      any_ok = true;
      x = run.x;
      qu.rightCols(n_h) = lay.u(x);
      qy.rightCols(n_h) = lay.y(x);
      d.residual = model.reduced(Window{qu, qy}, ridge, context, false).value;
      d.upper_cost = problem.upper_cost(lay.u(x), lay.y(x), ref_offset);
    }
    result.stages.push_back(d);
  }
  if (!any_ok) {
    throw SolverFailure("solve_step: all " + std::to_string(settings.penalties.size()) +
                        " penalty stages hit a non-finite objective");
  }
  Mat u_plan = clip(lay.u(x));
  Mat y_plan = lay.y(x);

  result.lower_level.failed = true;
  if (settings.lower_level_stage) {
    try {
      LowerLevel lower(model, ridge, qu, qy, t_ini, n_h, 200);
      const double h = 1e-4;
      const Mat hold = y_ini.col(t_ini - 1).replicate(1, n_h);
      lower.solve(u_plan, {y_plan, hold, scan.y});

      // Pseudo-inverse of H_yy with eigenvalues below 1e-10 of the largest dropped.
      const auto pinv_of = [](const Mat& hyy) {
        Eigen::SelfAdjointEigenSolver<Mat> es(hyy);
        return [es = std::move(es)](const Vec& v) {
          const Vec& ev = es.eigenvalues();
          const double emax = ev.cwiseAbs().maxCoeff();
          Vec coeff = es.eigenvectors().transpose() * v;
          for (Eigen::Index i = 0; i < coeff.size(); ++i) {
            coeff(i) = ev(i) > 1e-10 * emax ? coeff(i) / ev(i) : 0.0;
          }
          return Vec(es.eigenvectors() * coeff);
        };
      };
      const auto settle = [&](const Mat& up) {
        lower.solve(up);
        auto hyy_pinv = pinv_of(lower.hessian(h));
        lower.polish(hyy_pinv);
        return hyy_pinv;
      };

      // J(u, y*(u)); the gradient uses dy*/du = -H_yy^+ H_yu.
      const Objective implicit = [&](const Vec& xu, Vec& grad) {
        const Mat up = Eigen::Map<const Mat>(xu.data(), n_u, n_h);
        const auto hyy_pinv = settle(up);
        const Mat yp = lower.y();
        Mat gy = 2.0 * problem.Q() * (yp - ref);
        const double cost = problem.upper_cost(up, yp, ref_offset) + soft_output(yp, &gy);
        const Vec ys = flat(yp);
        const Vec lambda = hyy_pinv(flat(gy));

        Vec gu = flat(2.0 * problem.R() * up);
        const double ln = lambda.norm();
        if (ln > 0.0) {
          const double eps = h / ln;
          Vec mixed(n_u * n_h);
          for (const double sgn : {1.0, -1.0}) {
            qy.rightCols(n_h) = Eigen::Map<const Mat>(Vec(ys + sgn * eps * lambda).data(), n_y, n_h);
            const auto red = model.reduced(Window{qu, qy}, ridge, context, true);
            const Vec g = flat(red.grad_u.rightCols(n_h));
            mixed = sgn > 0 ? g : Vec((mixed - g) / (2.0 * eps));
          }
          qy.rightCols(n_h) = yp;
          gu -= mixed;
        }
        grad = gu;
        return cost;
      };

      LbfgsOptions lopts;
      lopts.max_iters = settings.lower_level_iters;
      lopts.grad_tol = settings.inner.grad_tol;
      lopts.bounds = u_bounds;
      const auto run = minimize_lbfgs(implicit, flat(u_plan), lopts);
      if (run.status != LbfgsStatus::NonFinite) {
        u_plan = clip(Eigen::Map<const Mat>(run.x.data(), n_u, n_h));
        settle(u_plan);
        y_plan = lower.y();
        result.lower_level.failed = false;
        result.lower_level.iterations = run.iterations;
        result.lower_level.converged = run.converged();
        result.lower_level.upper_cost = run.f;
      }
    } catch (const SolverFailure&) {
    } catch (const NumericOverflowError&) {
    }
  }

  result.u_plan = u_plan;
  result.y_plan = y_plan;
  qu.rightCols(n_h) = result.u_plan;
  qy.rightCols(n_h) = result.y_plan;
  const Window q{qu, qy};
  const auto red = model.reduced(q, ridge, context, false);
  result.g = red.g;
  result.self_kernel = red.self;
  result.residual = model.residual(result.g, q);
  if (!result.lower_level.failed) result.lower_level.residual = result.residual;
  result.upper_cost = problem.upper_cost(result.u_plan, result.y_plan, ref_offset);
  // With a ridge the lower level has a positive minimum; certify by the gap to it.
  result.lower_gap = result.residual;
  if (ridge > 0.0) {
    double lower_min = red.value;
    try {
      Mat cu = qu, cy = qy;
      LowerLevel check(model, ridge, cu, cy, t_ini, n_h, 200);
      lower_min = std::min(lower_min, check.solve(result.u_plan, {result.y_plan}));
    } catch (const SolverFailure&) {
    } catch (const NumericOverflowError&) {
    }
    result.lower_gap = red.value - lower_min;
  }
  result.certified = result.lower_gap <= settings.bilevel_tol * result.self_kernel;

  // Never return a plan worse than a certified data window.
  if (zero_res.column >= 0 && (zero_res.cost < result.upper_cost || !result.certified)) {
    result.u_plan = zero_res.u;
    result.y_plan = zero_res.y;
    result.g = Vec::Unit(gram.columns(), zero_res.column);
    result.residual = zero_res.residual;
    result.self_kernel = zero_res.self;
    result.upper_cost = zero_res.cost - soft_output(zero_res.y, nullptr);
    result.lower_gap = zero_res.residual;
    result.certified = true;
    result.from_candidate = true;
  }
  return result;
}

ClosedLoopLog run_closed_loop(const MpcProblem& problem, const PlantModel& plant, const Vec& x0,
                              long steps, const std::optional<Scaling>& scaling) {
  plant.validate();
  if (steps < 0) throw ArgumentError("steps must be >= 0");
  if (plant.input_dim() != problem.n_u() || plant.output_dim() != problem.n_y()) {
    throw ArgumentError("plant dimensions do not match the MPC problem");
  }
  const Scaling sc = scaling ? *scaling : Scaling::identity(problem.n_u(), problem.n_y());
  ClosedLoopLog log{problem.n_u(), problem.n_y(), {}};
  if (steps == 0) return log;

  const Eigen::Index t_ini = problem.t_ini();
  Mat u_ctx(problem.n_u(), t_ini), y_ctx(problem.n_y(), t_ini);
  Vec x = x0;
  const Vec zero_u = Vec::Zero(problem.n_u());
  for (Eigen::Index k = 0; k < t_ini; ++k) {
    StepResult r;
    try {
      r = step(plant, x, zero_u);
    } catch (const DivergenceError&) {
      throw DivergenceError("plant diverged during the initial context", -t_ini + k);
    }
    u_ctx.col(k) = sc.u.normalize(zero_u);
    y_ctx.col(k) = sc.y.normalize(r.y);
    x = std::move(r.x_next);
  }

  std::optional<WarmStart> warm;
  for (long s = 0; s < steps; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const MpcStepResult plan = solve_step(problem, u_ctx, y_ctx, s, warm);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    const Vec u_norm = plan.u_plan.col(0);
    const Vec u_phys = sc.u.denormalize(u_norm);
    StepResult r;
    try {
      r = step(plant, x, u_phys);
    } catch (const DivergenceError&) {
      throw DivergenceError("plant diverged at closed-loop step " + std::to_string(s), s);
    }
    x = std::move(r.x_next);
    const Vec y_norm = sc.y.normalize(r.y);

    ClosedLoopEntry e;
    e.step = s;
    e.t = static_cast<double>(s) * plant.dt;
    e.u = u_norm;
    e.y = y_norm;
    e.y_ref = problem.y_ref().col(std::min<Eigen::Index>(s, problem.y_ref().cols() - 1));
    e.residual = plan.residual;
    e.solve_ms = ms;
    e.certified = plan.certified;
    log.entries.push_back(std::move(e));

    // Shift the context and the plan by one sample.
    if (t_ini > 1) {
      u_ctx.leftCols(t_ini - 1) = u_ctx.rightCols(t_ini - 1).eval();
      y_ctx.leftCols(t_ini - 1) = y_ctx.rightCols(t_ini - 1).eval();
    }
    u_ctx.col(t_ini - 1) = u_norm;
    y_ctx.col(t_ini - 1) = y_norm;
    WarmStart w{plan.u_plan, plan.y_plan};
    const Eigen::Index n_h = problem.n_h();
    if (n_h > 1) {
      w.u.leftCols(n_h - 1) = plan.u_plan.rightCols(n_h - 1);
      w.y.leftCols(n_h - 1) = plan.y_plan.rightCols(n_h - 1);
    }
    warm = std::move(w);
  }
  return log;
}

void write_closed_loop_csv(std::ostream& out, const ClosedLoopLog& log) {
  out << "step,t";
  for (Eigen::Index i = 1; i <= log.n_u; ++i) out << ",u" << i;
  for (Eigen::Index i = 1; i <= log.n_y; ++i) out << ",y" << i;
  for (Eigen::Index i = 1; i <= log.n_y; ++i) out << ",yref" << i;
  out << ",residual,solve_ms\n";
  for (const auto& e : log.entries) {
    out << e.step << ',' << format_double(e.t);
    for (Eigen::Index i = 0; i < e.u.size(); ++i) out << ',' << format_double(e.u(i));
    for (Eigen::Index i = 0; i < e.y.size(); ++i) out << ',' << format_double(e.y(i));
    for (Eigen::Index i = 0; i < e.y_ref.size(); ++i) out << ',' << format_double(e.y_ref(i));
    out << ',' << format_double(e.residual) << ',' << format_double(e.solve_ms) << '\n';
  }
}

void write_closed_loop_csv(const std::string& path, const ClosedLoopLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_closed_loop_csv(out, log);
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<double> setpoint_errors(const ClosedLoopLog& log) {
  std::vector<double> errors;
  const auto& es = log.entries;
  std::size_t begin = 0;
  while (begin < es.size()) {
    std::size_t end = begin + 1;
    while (end < es.size() && es[end].y_ref == es[begin].y_ref) ++end;
    const std::size_t len = end - begin;
    const std::size_t quarter = std::max<std::size_t>(1, len / 4);
    double sum = 0.0;
    for (std::size_t k = end - quarter; k < end; ++k) {
      sum += (es[k].y - es[k].y_ref).cwiseAbs().mean();
    }
    errors.push_back(sum / static_cast<double>(quarter));
    begin = end;
  }
  return errors;
}

TrackingSummary summarize(const ClosedLoopLog& log) {
  TrackingSummary s;
  const auto& es = log.entries;
  if (es.empty()) return s;
  const std::size_t quarter = std::max<std::size_t>(1, es.size() / 4);
  double err = 0.0, ms = 0.0;
  for (std::size_t k = es.size() - quarter; k < es.size(); ++k) {
    err += (es[k].y - es[k].y_ref).cwiseAbs().mean();
  }
  for (const auto& e : es) ms += e.solve_ms;
  s.final_quarter_error = err / static_cast<double>(quarter);
  s.mean_solve_ms = ms / static_cast<double>(es.size());

  // Overshoot past each setpoint in the direction of the step into it.
  Vec prev = es.front().y;
  std::size_t begin = 0;
  while (begin < es.size()) {
    std::size_t end = begin + 1;
    while (end < es.size() && es[end].y_ref == es[begin].y_ref) ++end;
    const Vec& r = es[begin].y_ref;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double dir = r(i) >= prev(i) ? 1.0 : -1.0;
      for (std::size_t k = begin; k < end; ++k) {
        s.max_overshoot = std::max(s.max_overshoot, dir * (es[k].y(i) - r(i)));
      }
    }
    prev = r;
    begin = end;
  }
  return s;
}

}  // namespace kdpc
