#pragma once

#include "kdpc/hankel.hpp"

#include <memory>

namespace kdpc {

/// Relative rounding level of reduced values. They cancel two terms of size
/// k(v, v) through K+, so values closer than this times k(v, v) are treated
/// as equal.
inline constexpr double kValueNoise = 1e-10;

/// Membership residual of a query window against the Hankel columns v_i:
///
///   r(g, v) = g'Kg + k(v, v) - 2 sum_i g_i k(v, v_i)
///
/// which is the squared product-RKHS distance |sum_i g_i v_i - v|^2. The query
/// side is treated as noise-free; the channels' noise models apply to the
/// data columns.
class ResidualModel {
 public:
  explicit ResidualModel(std::shared_ptr<const GramProblem> gram);

  const GramProblem& gram() const noexcept { return *gram_; }
  const std::shared_ptr<const GramProblem>& gram_ptr() const noexcept { return gram_; }

  /// k(v, v) for the query.
  double self_kernel(const Window& query) const;
  /// c_i = k(v_i, v) for every Hankel column.
  Vec cross_kernel(const Window& query) const;

  double residual(const Vec& g, const Window& query) const;

  struct Gradient {
    Vec g;  ///< d r / d g
    Mat u;  ///< d r / d query.u, n_u x L
    Mat y;  ///< d r / d query.y, n_y x L
  };
  /// Returns r and fills every gradient block.
  double residual_grad(const Vec& g, const Window& query, Gradient& out) const;

  /// min over g of r(g, v) + ridge |g|^2, with the minimizing g.
  ///
  /// Gradients with respect to query samples [grad_from, L) are exact for the
  /// reduced function (envelope theorem); earlier columns are left zero.
  struct Reduced {
    double value = 0.0;
    double self = 0.0;
    Vec g;
    Mat grad_u;
    Mat grad_y;
  };
  Reduced reduced(const Window& query, double ridge, Eigen::Index grad_from,
                  bool want_grad) const;

  /// Kernel contributions of the query positions that stay fixed during a
  /// solve: u columns [0, from_u) and y columns [0, from_y).
  struct FixedPart {
    Eigen::Index from_u = 0;
    Eigen::Index from_y = 0;
    Vec cross;  ///< fixed share of c_i
    double self = 0.0;
  };
  FixedPart fixed_part(const Window& query, Eigen::Index from_u, Eigen::Index from_y) const;

  /// As above, evaluating only the free positions; `query` must agree with
  /// the window `fixed` was computed from on the fixed positions. Gradients
  /// are filled for the free positions only.
  Reduced reduced(const Window& query, double ridge, const FixedPart& fixed, bool want_grad) const;

 private:
  void accumulate_grad(const Vec& weights, const Window& query, Eigen::Index from_u,
                       Eigen::Index from_y, Mat& gu, Mat& gy) const;
  void add_cross(const Window& query, Eigen::Index u_begin, Eigen::Index u_end,
                 Eigen::Index y_begin, Eigen::Index y_end, Vec& c, double& self) const;
  void check_query(const Window& query) const;

  std::shared_ptr<const GramProblem> gram_;
};

}  // namespace kdpc
