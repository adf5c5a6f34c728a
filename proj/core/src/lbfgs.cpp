#include "kdpc/lbfgs.hpp"

#include "kdpc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace kdpc {

namespace {

struct Pair {
  Vec s;
  Vec y;
  double rho;
};

double safe_eval(const Objective& objective, const Vec& x, Vec& grad) {
  try {
    const double f = objective(x, grad);
    if (!std::isfinite(f) || !grad.allFinite()) return std::numeric_limits<double>::infinity();
    return f;
  } catch (const NumericOverflowError&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Mask of variables pinned at a bound by the gradient.
Eigen::Array<bool, Eigen::Dynamic, 1> pinned(const std::optional<Bounds>& b, const Vec& x,
                                             const Vec& g) {
  Eigen::Array<bool, Eigen::Dynamic, 1> m = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(x.size(), false);
  if (!b) return m;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    m(i) = (x(i) <= b->lower(i) && g(i) > 0.0) || (x(i) >= b->upper(i) && g(i) < 0.0);
  }
  return m;
}

Vec two_loop(const std::deque<Pair>& memory, const Vec& q_in) {
  Vec q = q_in;
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    alpha[i] = memory[i].rho * memory[i].s.dot(q);
    q -= alpha[i] * memory[i].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double beta = memory[i].rho * memory[i].y.dot(q);
    q += (alpha[i] - beta) * memory[i].s;
  }
  return -q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, const Vec& x0, const LbfgsOptions& options) {
  const auto& bounds = options.bounds;
  if (bounds && (bounds->lower.size() != x0.size() || bounds->upper.size() != x0.size())) {
    throw ArgumentError("minimize_lbfgs: bounds have wrong dimension");
  }

  LbfgsResult r;
  r.x = bounds ? bounds->project(x0) : x0;
  Vec g = Vec::Zero(x0.size());
  r.f = safe_eval(objective, r.x, g);
  r.evaluations = 1;
  if (!std::isfinite(r.f)) {
    r.status = LbfgsStatus::NonFinite;
    r.grad_inf = std::numeric_limits<double>::infinity();
    return r;
  }

  std::deque<Pair> memory;
  Vec trial(x0.size()), g_trial(x0.size());

  for (;;) {
    const auto mask = pinned(bounds, r.x, g);
    const Vec pg = mask.select(Vec::Zero(g.size()), g);
    r.grad_inf = pg.size() > 0 ? pg.lpNorm<Eigen::Infinity>() : 0.0;
    if (r.grad_inf <= options.grad_tol * (1.0 + std::abs(r.f))) {
      r.status = LbfgsStatus::Converged;
      return r;
    }
    if (r.iterations >= options.max_iters) {
      r.status = LbfgsStatus::MaxIterations;
      return r;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Vec d = memory.empty() ? Vec(-pg) : two_loop(memory, pg);
      d = mask.select(Vec::Zero(d.size()), d);
      if (!(g.dot(d) < 0.0)) {
        memory.clear();
        d = -pg;
      }
      double step = memory.empty() ? std::min(1.0, 1.0 / r.grad_inf) : 1.0;
      const auto armijo_ok = [&](double f_trial, const Vec& x) {
        return f_trial <= r.f + options.armijo * g.dot(x - r.x) && f_trial < r.f;
      };
      // Near a minimizer the decrease drops below rounding; accept a point
      // with no meaningful increase, a bounded slope and a smaller gradient.
      const auto approx_ok = [&](double f_trial, const Vec& x) {
        const Vec s = x - r.x;
        const double slope0 = g.dot(s), slope = g_trial.dot(s);
        if (!(f_trial <= r.f + std::max(options.f_noise, 1e-12 * (1.0 + std::abs(r.f))))) return false;
        if (!(slope <= (2.0 * options.armijo - 1.0) * slope0)) return false;
        const Vec pg_trial = pinned(bounds, x, g_trial).select(Vec::Zero(g.size()), g_trial);
        return pg_trial.lpNorm<Eigen::Infinity>() < r.grad_inf;
      };
      for (int bt = 0; bt < options.max_backtracks; ++bt) {
        trial = r.x + step * d;
        if (bounds) trial = bounds->project(trial);
        const double f_trial = safe_eval(objective, trial, g_trial);
        ++r.evaluations;
        if (std::isfinite(f_trial) && (armijo_ok(f_trial, trial) || approx_ok(f_trial, trial))) {
          Pair p{trial - r.x, g_trial - g, 0.0};
          const double sy = p.s.dot(p.y);
          if (sy > 1e-12 * p.s.norm() * p.y.norm() && sy > 0.0) {
            p.rho = 1.0 / sy;
            memory.push_back(std::move(p));
            if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
          }
          r.x = trial;
          r.f = f_trial;
          g = g_trial;
          accepted = true;
          break;
        }
        step *= std::isfinite(f_trial) ? 0.5 : 0.1;
      }
      if (!accepted) {
        if (memory.empty()) break;
        memory.clear();
      }
    }
    ++r.iterations;
    if (!accepted) {
      r.status = LbfgsStatus::LineSearchFailed;
      return r;
    }
  }
}

}  // namespace kdpc
