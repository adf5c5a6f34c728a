#pragma once

#include "kdpc/kernels.hpp"

#include <cmath>
#include <functional>
#include <optional>

namespace kdpc {

struct Bounds {
  Vec lower;
  Vec upper;

  /// Componentwise clamp.
  Vec project(const Vec& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

struct LbfgsOptions {
  int max_iters = 500;
  int memory = 10;
  /// Stop when |projected gradient|_inf <= grad_tol * (1 + |f|).
  double grad_tol = 1e-8;
  int max_backtracks = 50;
  double armijo = 1e-4;
  /// Absolute rounding level of the objective. A step that raises f by no
  /// more than this is still taken when it shrinks the gradient.
  double f_noise = 0.0;
  std::optional<Bounds> bounds;
};

enum class LbfgsStatus { Converged, MaxIterations, LineSearchFailed, NonFinite };

struct LbfgsResult {
  Vec x;
  double f = 0.0;
  double grad_inf = 0.0;  ///< projected-gradient infinity norm at x
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::MaxIterations;

  bool converged() const noexcept { return status == LbfgsStatus::Converged; }
};

/// Orders finished runs by value, treating values within `f_noise` as ties
/// that go to the smaller gradient.
inline bool better_run(const LbfgsResult& a, const LbfgsResult& b, double f_noise) noexcept {
  if (std::abs(a.f - b.f) > f_noise) return a.f < b.f;
  return a.grad_inf < b.grad_inf;
}

/// Objective value; writes the gradient into `grad` (pre-sized to x.size()).
/// Throwing NumericOverflowError is treated as a non-finite value.
using Objective = std::function<double(const Vec& x, Vec& grad)>;

/// Limited-memory BFGS with a backtracking Armijo line search.
///
/// With bounds, each trial point is projected onto the box and variables held
/// at a bound by the gradient are frozen for the direction computation. A
/// non-finite trial value shrinks the step; a non-finite value at the
/// starting point ends the run with LbfgsStatus::NonFinite.
LbfgsResult minimize_lbfgs(const Objective& objective, const Vec& x0,
                           const LbfgsOptions& options = {});

}  // namespace kdpc
