#include "kdpc/residual.hpp"

#include "kdpc/errors.hpp"

#include <algorithm>

namespace kdpc {

ResidualModel::ResidualModel(std::shared_ptr<const GramProblem> gram) : gram_(std::move(gram)) {
  if (!gram_) throw ArgumentError("ResidualModel needs a Gram problem");
}

void ResidualModel::check_query(const Window& q) const {
  const auto& d = gram_->data();
  if (q.u.cols() != gram_->depth() || q.y.cols() != gram_->depth() || q.u.rows() != d.n_u() ||
      q.y.rows() != d.n_y()) {
    throw ArgumentError("query window does not match the Gram problem's depth or dimensions");
  }
}

void ResidualModel::add_cross(const Window& q, Eigen::Index u_begin, Eigen::Index u_end,
                              Eigen::Index y_begin, Eigen::Index y_end, Vec& c,
                              double& self) const {
  const Eigen::Index n = gram_->columns();
  const Mat& u = gram_->data().u();
  const Mat& y = gram_->data().y();
  const auto& cu = gram_->channel_u();
  const auto& cy = gram_->channel_y();
  for (Eigen::Index k = u_begin; k < u_end; ++k) self += eval(gram_->k_u(), q.u.col(k), q.u.col(k));
  for (Eigen::Index k = y_begin; k < y_end; ++k) self += eval(gram_->k_y(), q.y.col(k), q.y.col(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index k = u_begin; k < u_end; ++k) s += cu.data_eval(u.col(i + k), q.u.col(k));
    for (Eigen::Index k = y_begin; k < y_end; ++k) s += cy.data_eval(y.col(i + k), q.y.col(k));
    c(i) += s;
  }
}

double ResidualModel::self_kernel(const Window& q) const {
  check_query(q);
  const auto& ku = gram_->k_u();
  const auto& ky = gram_->k_y();
  double s = 0.0;
  for (Eigen::Index k = 0; k < q.u.cols(); ++k) s += eval(ku, q.u.col(k), q.u.col(k));
  for (Eigen::Index k = 0; k < q.y.cols(); ++k) s += eval(ky, q.y.col(k), q.y.col(k));
  return s;
}

Vec ResidualModel::cross_kernel(const Window& q) const {
  check_query(q);
  const Eigen::Index n = gram_->columns();
  const Eigen::Index depth = gram_->depth();
  const Mat& u = gram_->data().u();
  const Mat& y = gram_->data().y();
  const auto& cu = gram_->channel_u();
  const auto& cy = gram_->channel_y();
  Vec c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < depth; ++k) s += cu.data_eval(u.col(i + k), q.u.col(k));
    for (Eigen::Index k = 0; k < depth; ++k) s += cy.data_eval(y.col(i + k), q.y.col(k));
    c(i) = s;
  }
  return c;
}

double ResidualModel::residual(const Vec& g, const Window& q) const {
  if (g.size() != gram_->columns()) throw ArgumentError("g has wrong dimension");
  const Vec c = cross_kernel(q);
  return g.dot(gram_->gram() * g) + self_kernel(q) - 2.0 * g.dot(c);
}

void ResidualModel::accumulate_grad(const Vec& weights, const Window& q, Eigen::Index from_u,
                                    Eigen::Index from_y, Mat& gu, Mat& gy) const {
  const Eigen::Index n = gram_->columns();
  const Eigen::Index depth = gram_->depth();
  const Mat& u = gram_->data().u();
  const Mat& y = gram_->data().y();
  const auto& cu = gram_->channel_u();
  const auto& cy = gram_->channel_y();

  // Self term: d/dq k(q, q) = 2 dk/dy(q, q) for a symmetric kernel.
  for (Eigen::Index k = from_u; k < depth; ++k) {
    eval_and_grad_y(gram_->k_u(), q.u.col(k), q.u.col(k), 2.0, gu.col(k));
  }
  for (Eigen::Index k = from_y; k < depth; ++k) {
    eval_and_grad_y(gram_->k_y(), q.y.col(k), q.y.col(k), 2.0, gy.col(k));
  }
  // Cross terms: -2 sum_i w_i d k(v_i, q) / dq.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = -2.0 * weights(i);
    if (w == 0.0) continue;
    for (Eigen::Index k = from_u; k < depth; ++k) cu.data_eval_grad(u.col(i + k), q.u.col(k), w, gu.col(k));
    for (Eigen::Index k = from_y; k < depth; ++k) cy.data_eval_grad(y.col(i + k), q.y.col(k), w, gy.col(k));
  }
}

double ResidualModel::residual_grad(const Vec& g, const Window& q, Gradient& out) const {
  if (g.size() != gram_->columns()) throw ArgumentError("g has wrong dimension");
  const Vec c = cross_kernel(q);
  const Vec kg = gram_->gram() * g;
  out.g = 2.0 * kg - 2.0 * c;
  out.u = Mat::Zero(q.u.rows(), q.u.cols());
  out.y = Mat::Zero(q.y.rows(), q.y.cols());
  accumulate_grad(g, q, 0, 0, out.u, out.y);
  return g.dot(kg) + self_kernel(q) - 2.0 * g.dot(c);
}

ResidualModel::FixedPart ResidualModel::fixed_part(const Window& q, Eigen::Index from_u,
                                                   Eigen::Index from_y) const {
  check_query(q);
  const Eigen::Index depth = gram_->depth();
  FixedPart f;
  f.from_u = std::clamp<Eigen::Index>(from_u, 0, depth);
  f.from_y = std::clamp<Eigen::Index>(from_y, 0, depth);
  f.cross = Vec::Zero(gram_->columns());
  add_cross(q, 0, f.from_u, 0, f.from_y, f.cross, f.self);
  return f;
}

ResidualModel::Reduced ResidualModel::reduced(const Window& q, double ridge,
                                              const FixedPart& fixed, bool want_grad) const {
  if (ridge < 0.0) throw ArgumentError("ridge must be >= 0");
  check_query(q);
  if (fixed.cross.size() != gram_->columns()) throw ArgumentError("fixed part has wrong size");
  const Eigen::Index depth = gram_->depth();
  Reduced r;
  Vec c = fixed.cross;
  r.self = fixed.self;
  add_cross(q, fixed.from_u, depth, fixed.from_y, depth, c, r.self);
  r.g = gram_->spectrum().solve(c, ridge);
  // At the minimizer, g'Kg + ridge|g|^2 = g'c.
  r.value = r.self - r.g.dot(c);
  if (want_grad) {
    r.grad_u = Mat::Zero(q.u.rows(), q.u.cols());
    r.grad_y = Mat::Zero(q.y.rows(), q.y.cols());
    accumulate_grad(r.g, q, fixed.from_u, fixed.from_y, r.grad_u, r.grad_y);
  }
  return r;
}

ResidualModel::Reduced ResidualModel::reduced(const Window& q, double ridge,
                                              Eigen::Index grad_from, bool want_grad) const {
  const Eigen::Index from = std::clamp<Eigen::Index>(grad_from, 0, gram_->depth());
  return reduced(q, ridge, fixed_part(q, from, from), want_grad);
}

}  // namespace kdpc
