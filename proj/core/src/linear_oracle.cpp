#include "kdpc/linear_oracle.hpp"

#include "kdpc/errors.hpp"
#include "kdpc/hankel.hpp"
#include "kdpc/random.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <string>
#include <vector>

namespace kdpc {

Eigen::Index controllability_rank(const LtiSystem& sys) {
  const Eigen::Index n = sys.n_x();
  const Eigen::Index m = sys.n_u();
  Mat ctrl(n, n * m);
  Mat block = sys.B;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrl.middleCols(i * m, m) = block;
    block = sys.A * block;
  }
  Eigen::ColPivHouseholderQR<Mat> qr(ctrl);
  qr.setThreshold(1e-10);
  return qr.rank();
}

double spectral_radius(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

LtiSystem random_controllable(Eigen::Index n_x, Eigen::Index n_u, Eigen::Index n_y,
                              std::uint64_t seed, double radius_bound) {
  if (n_x < 1 || n_u < 1 || n_y < 1) throw ArgumentError("system dimensions must be >= 1");
  if (!(radius_bound > 0.0 && radius_bound < 1.0)) {
    throw ArgumentError("spectral radius bound must lie in (0, 1)");
  }
  auto rng = make_stream(seed, "lti-system");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> shrink(0.5, 1.0);
  const auto draw = [&](Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
  };
  for (int attempt = 0; attempt < 100; ++attempt) {
    LtiSystem sys{draw(n_x, n_x), draw(n_x, n_u), draw(n_y, n_x), Mat::Zero(n_y, n_u)};
    const double rho = spectral_radius(sys.A);
    if (rho < 1e-12) continue;
    sys.A *= radius_bound * shrink(rng) / rho;
    if (controllability_rank(sys) == n_x) return sys;
  }
  throw GenerationError("could not draw a controllable system in 100 attempts");
}

Mat simulate_lti(const LtiSystem& sys, const Vec& x0, const Mat& inputs, Vec* x_final) {
  if (x0.size() != sys.n_x() || inputs.rows() != sys.n_u()) {
    throw ArgumentError("simulate_lti: dimension mismatch");
  }
  Mat y(sys.n_y(), inputs.cols());
  Vec x = x0;
  for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
    y.col(k) = sys.C * x + sys.D * inputs.col(k);
    x = sys.A * x + sys.B * inputs.col(k);
  }
  if (x_final) *x_final = x;
  return y;
}

namespace {

Vec flatten(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

}  // namespace

Mat deepc_predict(const TrajectoryData& data, Eigen::Index t_m, Eigen::Index t_p,
                  const Mat& u_init, const Mat& y_init, const Mat& u_future) {
  if (t_m < 1 || t_p < 1) throw ArgumentError("deepc_predict needs T_m, T_p >= 1");
  const Eigen::Index n_u = data.n_u(), n_y = data.n_y(), depth = t_m + t_p;
  if (u_init.rows() != n_u || u_init.cols() != t_m || y_init.rows() != n_y ||
      y_init.cols() != t_m || u_future.rows() != n_u || u_future.cols() != t_p) {
    throw ArgumentError("deepc_predict: query dimensions do not match");
  }
  const Mat hu = numeric_hankel(data.u(), depth);
  const Mat hy = numeric_hankel(data.y(), depth);
  Mat hc(hu.rows() + t_m * n_y, hu.cols());
  hc << hu, hy.topRows(t_m * n_y);
  Vec b(hc.rows());
  b << flatten(u_init), flatten(u_future), flatten(y_init);

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(hc);
  const Vec g = cod.solve(b);
  const double bn = b.norm();
  const double rel = bn > 0.0 ? (hc * g - b).norm() / bn : 0.0;
  if (!(rel <= 1e-6)) {
    throw NotInBehaviorError("query is not in the data behavior (relative residual " +
                             std::to_string(rel) + ")");
  }
  const Vec yf = hy.bottomRows(t_p * n_y) * g;
  return Eigen::Map<const Mat>(yf.data(), n_y, t_p);
}

DeepcPlan deepc_control(const TrajectoryData& data, Eigen::Index t_ini, Eigen::Index n_h,
                        const Mat& Q, const Mat& R, const Mat& y_ref, const Mat& u_ini,
                        const Mat& y_ini, const std::optional<InputBox>& u_box) {
  const Eigen::Index n_u = data.n_u(), n_y = data.n_y(), depth = t_ini + n_h;
  if (t_ini < 1 || n_h < 1) throw ArgumentError("deepc_control needs T_ini, N_h >= 1");
  if (Q.rows() != n_y || Q.cols() != n_y || R.rows() != n_u || R.cols() != n_u) {
    throw ArgumentError("deepc_control: weight dimensions do not match");
  }
  if (y_ref.rows() != n_y || (y_ref.cols() != n_h && y_ref.cols() != 1)) {
    throw ArgumentError("deepc_control: reference must be n_y x N_h or n_y x 1");
  }
  if (u_ini.rows() != n_u || u_ini.cols() != t_ini || y_ini.rows() != n_y ||
      y_ini.cols() != t_ini) {
    throw ArgumentError("deepc_control: context dimensions do not match");
  }
  if (u_box && (u_box->lower.size() != n_u || u_box->upper.size() != n_u)) {
    throw ArgumentError("deepc_control: input box has wrong dimension");
  }

  // Orthonormal basis of the data span: trajectories are w = U a.
  const Mat h = stacked_hankel(data, depth);
  Eigen::JacobiSVD<Mat> svd(h, Eigen::ComputeThinU);
  const Vec& sv = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-9 * sv(0)) ++rank;
  if (rank == 0) throw InfeasibleError("data Hankel matrix is zero");
  const Mat basis = svd.matrixU().leftCols(rank);

  // Row indices of w = [u_1..u_L; y_1..y_L].
  std::vector<Eigen::Index> fixed_rows, u_rows, y_rows;
  for (Eigen::Index k = 0; k < depth; ++k) {
    for (Eigen::Index i = 0; i < n_u; ++i) (k < t_ini ? fixed_rows : u_rows).push_back(k * n_u + i);
  }
  for (Eigen::Index k = 0; k < depth; ++k) {
    for (Eigen::Index i = 0; i < n_y; ++i) {
      (k < t_ini ? fixed_rows : y_rows).push_back(depth * n_u + k * n_y + i);
    }
  }
  const auto rows_of = [&](const std::vector<Eigen::Index>& idx) {
    Mat out(static_cast<Eigen::Index>(idx.size()), rank);
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = basis.row(idx[r]);
    return out;
  };
  const Mat bu = rows_of(u_rows);
  const Mat by = rows_of(y_rows);
  const Mat bf = rows_of(fixed_rows);
  Vec w_fixed(static_cast<Eigen::Index>(fixed_rows.size()));
  w_fixed << flatten(u_ini), flatten(y_ini);

  // Cost in a: a'(Bu' Rb Bu + By' Qb By)a - 2 (By' Qb r)'a.
  Mat rb = Mat::Zero(n_h * n_u, n_h * n_u), qb = Mat::Zero(n_h * n_y, n_h * n_y);
  Vec ref(n_h * n_y);
  for (Eigen::Index k = 0; k < n_h; ++k) {
    rb.block(k * n_u, k * n_u, n_u, n_u) = R;
    qb.block(k * n_y, k * n_y, n_y, n_y) = Q;
    ref.segment(k * n_y, n_y) = y_ref.col(y_ref.cols() == 1 ? 0 : k);
  }
  const Mat hess = 2.0 * (bu.transpose() * rb * bu + by.transpose() * qb * by);
  const Vec lin = -2.0 * by.transpose() * qb * ref;

  // Active set over planned inputs: +1 upper bound, -1 lower bound, 0 free.
  std::vector<int> active(static_cast<std::size_t>(n_h * n_u), 0);
  Vec alpha;
  const int max_rounds = 4 * static_cast<int>(active.size()) + 4;
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<Eigen::Index> act;
    for (std::size_t i = 0; i < active.size(); ++i)
      if (active[i] != 0) act.push_back(static_cast<Eigen::Index>(i));
    const Eigen::Index nf = bf.rows(), na = static_cast<Eigen::Index>(act.size());
    const Eigen::Index dim = rank + nf + na;
    Mat kkt = Mat::Zero(dim, dim);
    Vec rhs = Vec::Zero(dim);
    kkt.topLeftCorner(rank, rank) = hess;
    kkt.block(0, rank, rank, nf) = bf.transpose();
    kkt.block(rank, 0, nf, rank) = bf;
    rhs.head(rank) = -lin;
    rhs.segment(rank, nf) = w_fixed;
    for (Eigen::Index a = 0; a < na; ++a) {
      const Eigen::Index i = act[static_cast<std::size_t>(a)];
      kkt.block(0, rank + nf + a, rank, 1) = bu.row(i).transpose();
      kkt.block(rank + nf + a, 0, 1, rank) = bu.row(i);
      const Eigen::Index comp = i % n_u;
      rhs(rank + nf + a) = active[static_cast<std::size_t>(i)] > 0 ? u_box->upper(comp) : u_box->lower(comp);
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(kkt);
    const Vec sol = cod.solve(rhs);
    alpha = sol.head(rank);
    const double ctx_err = (bf * alpha - w_fixed).norm();
    if (!(ctx_err <= 1e-6 * (1.0 + w_fixed.norm()))) {
      throw InfeasibleError(na == 0 ? "context is not consistent with the data behavior"
                                    : "input box cannot be met from this context");
    }
    if (!u_box) break;

    const Vec up = bu * alpha;
    Eigen::Index worst = -1;
    double worst_v = 1e-9;
    int worst_side = 0;
    for (Eigen::Index i = 0; i < up.size(); ++i) {
      if (active[static_cast<std::size_t>(i)] != 0) continue;
      const Eigen::Index comp = i % n_u;
      if (up(i) - u_box->upper(comp) > worst_v) {
        worst_v = up(i) - u_box->upper(comp);
        worst = i;
        worst_side = 1;
      }
      if (u_box->lower(comp) - up(i) > worst_v) {
        worst_v = u_box->lower(comp) - up(i);
        worst = i;
        worst_side = -1;
      }
    }
    if (worst >= 0) {
      active[static_cast<std::size_t>(worst)] = worst_side;
      continue;
    }
    // Release a bound whose multiplier has the wrong sign.
    Eigen::Index release = -1;
    double release_v = 1e-9;
    for (Eigen::Index a = 0; a < na; ++a) {
      const Eigen::Index i = act[static_cast<std::size_t>(a)];
      const double mu = sol(rank + nf + a) * active[static_cast<std::size_t>(i)];
      if (-mu > release_v) {
        release_v = -mu;
        release = i;
      }
    }
    if (release < 0) break;
    active[static_cast<std::size_t>(release)] = 0;
  }

  const Vec u = bu * alpha;
  const Vec y = by * alpha;
  return {Eigen::Map<const Mat>(u.data(), n_u, n_h), Eigen::Map<const Mat>(y.data(), n_y, n_h)};
}

}  // namespace kdpc
