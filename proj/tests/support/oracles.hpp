#pragma once

// Reference implementations used to check the library. Everything here is
// written from the defining formulas with plain loops and shares no code with
// kdpc beyond the data types.

#include "kdpc/kernels.hpp"
#include "kdpc/linear_oracle.hpp"
#include "kdpc/trajectory.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <variant>

namespace kdpc::oracle {

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += x(i) * y(i);
  return s;
}

inline double factor_value(const KernelFactor& f, const Vec& x, const Vec& y) {
  if (const auto* p = std::get_if<factor::Polynomial>(&f)) {
    return std::pow(p->offset + dot(x, y), p->degree);
  }
  if (const auto* r = std::get_if<factor::Rbf>(&f)) {
    double d2 = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) d2 += (x(i) - y(i)) * (x(i) - y(i));
    return std::exp(-d2 / r->denominator);
  }
  if (std::holds_alternative<factor::Exponential>(f)) return std::exp(dot(x, y));
  return dot(x, y);
}

inline double kernel(const KernelSpec& spec, const Vec& x, const Vec& y) {
  double s = 0.0;
  for (const auto& term : spec.terms()) {
    double p = term.weight;
    for (const auto& f : term.factors) p *= factor_value(f, x, y);
    s += p;
  }
  return s;
}

/// Block-Hankel matrix, rows stacked sample by sample.
inline Mat hankel(const Mat& signal, Eigen::Index depth) {
  const Eigen::Index dim = signal.rows(), cols = signal.cols() - depth + 1;
  Mat h(depth * dim, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index k = 0; k < depth; ++k) {
      for (Eigen::Index i = 0; i < dim; ++i) h(k * dim + i, j) = signal(i, j + k);
    }
  }
  return h;
}

/// K(i, j) = sum_k k_u(u_{i+k}, u_{j+k}) + k_y(y_{i+k}, y_{j+k}) by direct summation.
inline Mat gram(const TrajectoryData& data, Eigen::Index depth, const KernelSpec& ku,
                const KernelSpec& ky) {
  const Eigen::Index n = data.length() - depth + 1;
  Mat k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index t = 0; t < depth; ++t) {
        s += kernel(ku, data.u().col(i + t), data.u().col(j + t));
        s += kernel(ky, data.y().col(i + t), data.y().col(j + t));
      }
      k(i, j) = s;
    }
  }
  return k;
}

/// x+ = Ax + Bu, y = Cx + Du.
inline Mat simulate(const LtiSystem& sys, Vec x, const Mat& u, Vec* x_final = nullptr) {
  Mat y(sys.C.rows(), u.cols());
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    y.col(k) = sys.C * x + sys.D * u.col(k);
    x = sys.A * x + sys.B * u.col(k);
  }
  if (x_final) *x_final = x;
  return y;
}

/// Central differences of a scalar function.
inline Vec central_diff(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

/// Monte-Carlo estimate of E[k(x + w, y)], w ~ N(0, sigma^2 I).
inline double monte_carlo_embed(const KernelSpec& spec, double sigma, const Vec& x, const Vec& y,
                                long samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  double s = 0.0;
  Vec z(x.size());
  for (long i = 0; i < samples; ++i) {
    for (Eigen::Index d = 0; d < x.size(); ++d) z(d) = x(d) + sigma * n01(rng);
    s += kernel(spec, z, y);
  }
  return s / static_cast<double>(samples);
}

inline double rmse(const Mat& a, const Mat& b) {
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

/// Random controllable SISO fixture with a Gaussian-excited 200-sample record.
struct LtiFixture {
  LtiSystem sys;
  TrajectoryData data;
  Vec x_end;  ///< state after the record
};

inline LtiFixture lti_fixture(std::uint64_t seed, Eigen::Index length = 200) {
  const Eigen::Index n_x = 1 + static_cast<Eigen::Index>(seed % 4);
  LtiSystem sys = random_controllable(n_x, 1, 1, seed, 0.95);
  std::mt19937_64 rng(seed * 7919 + 13);
  std::normal_distribution<double> n01;
  Mat u(1, length);
  for (Eigen::Index k = 0; k < length; ++k) u(0, k) = n01(rng);
  Vec x_end;
  Mat y = simulate(sys, Vec::Zero(n_x), u, &x_end);
  return {sys, TrajectoryData(u, y, 1.0), x_end};
}

// Model-based reference for the unconstrained plan: recover the state at the
// end of the context from the true system, then solve the finite-horizon
// least-squares problem over the N_h inputs.
inline DeepcPlan lq_plan(const LtiSystem& sys, const Mat& u_ini, const Mat& y_ini, Eigen::Index n_h,
                        double q, double r, double ref) {
  const Eigen::Index n = sys.n_x(), t = u_ini.cols();
  // y_k = C A^k x0 + sum_{j<k} C A^{k-1-j} B u_j
  Mat obs(t, n);
  Vec forced(t);
  for (Eigen::Index k = 0; k < t; ++k) {
    Mat ak = Mat::Identity(n, n);
    for (Eigen::Index i = 0; i < k; ++i) ak = sys.A * ak;
    obs.row(k) = sys.C * ak;
    forced(k) = simulate(sys, Vec::Zero(n), u_ini.leftCols(k + 1))(0, k);
  }
  const Vec x0 = obs.colPivHouseholderQr().solve(Vec(y_ini.row(0).transpose() - forced));
  Vec x_t;
  simulate(sys, x0, u_ini, &x_t);

  Mat gamma = Mat::Zero(n_h, n_h), o(n_h, n);
  for (Eigen::Index k = 0; k < n_h; ++k) {
    Vec e = Vec::Zero(n_h);
    e(k) = 1.0;
    gamma.col(k) = simulate(sys, Vec::Zero(n), e.transpose()).row(0).transpose();
  }
  for (Eigen::Index k = 0; k < n_h; ++k) {
    Mat ak = Mat::Identity(n, n);
    for (Eigen::Index i = 0; i < k; ++i) ak = sys.A * ak;
    o.row(k) = sys.C * ak;
  }
  const Vec free_resp = o * x_t;
  const Mat h = q * gamma.transpose() * gamma + r * Mat::Identity(n_h, n_h);
  const Vec u = h.ldlt().solve(q * gamma.transpose() * (Vec::Constant(n_h, ref) - free_resp));
  return {u.transpose(), (free_resp + gamma * u).transpose()};
}

}  // namespace kdpc::oracle
