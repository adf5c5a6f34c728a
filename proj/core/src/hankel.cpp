#include "kdpc/hankel.hpp"

#include "kdpc/errors.hpp"
#include "parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <map>
#include <mutex>
#include <string>

namespace kdpc {

Eigen::Index hankel_columns(const TrajectoryData& data, Eigen::Index depth) {
  if (depth < 1) throw ArgumentError("window depth must be >= 1");
  if (data.length() < depth) {
    throw InsufficientDataError("trajectory has " + std::to_string(data.length()) +
                                " samples, window depth " + std::to_string(depth) +
                                " needs at least that many");
  }
  return data.length() - depth + 1;
}

Window window(const TrajectoryData& data, Eigen::Index depth, Eigen::Index j) {
  const Eigen::Index n = hankel_columns(data, depth);
  if (j < 0 || j >= n) {
    throw ArgumentError("hankel column " + std::to_string(j) + " outside [0, " +
                        std::to_string(n - 1) + "]");
  }
  return {data.u().middleCols(j, depth), data.y().middleCols(j, depth)};
}

double trajectory_kernel(const KernelChannel& k_u, const KernelChannel& k_y, const Window& a,
                         const Window& b) {
  if (a.u.cols() != b.u.cols() || a.y.cols() != b.y.cols() || a.u.cols() != a.y.cols()) {
    throw ArgumentError("trajectory_kernel: windows differ in depth");
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k < a.u.cols(); ++k) total += k_u.data_eval(a.u.col(k), b.u.col(k));
  for (Eigen::Index k = 0; k < a.y.cols(); ++k) total += k_y.data_eval(a.y.col(k), b.y.col(k));
  return total;
}

double trajectory_kernel(const KernelSpec& k_u, const KernelSpec& k_y, const Window& a,
                         const Window& b) {
  return trajectory_kernel(KernelChannel(k_u, NoiseModel::none(), static_cast<int>(a.u.rows())),
                           KernelChannel(k_y, NoiseModel::none(), static_cast<int>(a.y.rows())),
                           a, b);
}

Mat numeric_hankel(const Mat& signal, Eigen::Index depth) {
  if (depth < 1) throw ArgumentError("window depth must be >= 1");
  if (signal.cols() < depth) throw InsufficientDataError("signal shorter than window depth");
  const Eigen::Index dim = signal.rows();
  const Eigen::Index n = signal.cols() - depth + 1;
  Mat h(depth * dim, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < depth; ++k) h.block(k * dim, j, dim, 1) = signal.col(j + k);
  }
  return h;
}

Mat stacked_hankel(const TrajectoryData& data, Eigen::Index depth) {
  const Mat hu = numeric_hankel(data.u(), depth);
  const Mat hy = numeric_hankel(data.y(), depth);
  Mat h(hu.rows() + hy.rows(), hu.cols());
  h << hu, hy;
  return h;
}

GramSpectrum::GramSpectrum(const Mat& gram) {
  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  if (es.info() != Eigen::Success) throw SolverFailure("Gram eigendecomposition failed");
  values_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

namespace {

Vec filter_factors(const Vec& values, double ridge, double cutoff) {
  Vec f = Vec::Zero(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double lambda = values(i);
    if (ridge > 0.0) {
      if (lambda + ridge > 0.0) f(i) = 1.0 / (lambda + ridge);
    } else if (lambda > cutoff && lambda > 0.0) {
      f(i) = 1.0 / lambda;
    }
  }
  return f;
}

}  // namespace

double GramSpectrum::pinv_cutoff() const noexcept {
  if (values_.size() == 0) return 0.0;
  return static_cast<double>(values_.size()) * std::numeric_limits<double>::epsilon() *
         values_.maxCoeff();
}

Vec GramSpectrum::solve(const Vec& c, double ridge) const {
  if (c.size() != values_.size()) throw ArgumentError("GramSpectrum::solve: size mismatch");
  const Vec coeff = vectors_.transpose() * c;
  return vectors_ * coeff.cwiseProduct(filter_factors(values_, ridge, pinv_cutoff()));
}

Mat GramSpectrum::inverse(double ridge) const {
  if (ridge < 0.0) throw ArgumentError("ridge must be >= 0");
  return vectors_ * filter_factors(values_, ridge, pinv_cutoff()).asDiagonal() * vectors_.transpose();
}

struct GramProblem::SpectrumCache {
  std::once_flag once;
  std::unique_ptr<GramSpectrum> spectrum;
  std::mutex inverse_mutex;
  std::map<double, std::unique_ptr<Mat>> inverses;
};

GramProblem::GramProblem(TrajectoryData data, Eigen::Index depth, KernelChannel cu,
                         KernelChannel cy, NoiseModel noise, Mat gram)
    : data_(std::move(data)),
      depth_(depth),
      channel_u_(std::move(cu)),
      channel_y_(std::move(cy)),
      noise_(std::move(noise)),
      gram_(std::move(gram)),
      cache_(std::make_shared<SpectrumCache>()) {}

const GramSpectrum& GramProblem::spectrum() const {
  std::call_once(cache_->once, [this] { cache_->spectrum = std::make_unique<GramSpectrum>(gram_); });
  return *cache_->spectrum;
}

const Mat& GramProblem::inverse(double ridge) const {
  const GramSpectrum& s = spectrum();
  std::lock_guard lock(cache_->inverse_mutex);
  auto& slot = cache_->inverses[ridge];
  if (!slot) slot = std::make_unique<Mat>(s.inverse(ridge));
  return *slot;
}

namespace {

// Upper triangle evaluated row by row in parallel, then mirrored.
template <class Entry>
Mat symmetric_fill(Eigen::Index n, Entry&& entry) {
  Mat k(n, n);
  detail::parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    for (Eigen::Index j = i; j < n; ++j) k(i, j) = entry(i, j);
  });
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i);
  }
  return k;
}

}  // namespace

GramProblem build_gram(TrajectoryData data, Eigen::Index depth, KernelSpec k_u, KernelSpec k_y,
                       NoiseModel noise) {
  const Eigen::Index n = hankel_columns(data, depth);
  if (k_u.empty() || k_y.empty()) throw ArgumentError("build_gram: kernels must be non-empty");
  KernelChannel cu(std::move(k_u), noise, static_cast<int>(data.n_u()));
  KernelChannel cy(std::move(k_y), noise, static_cast<int>(data.n_y()));
  Mat k = symmetric_fill(n, [&](Eigen::Index i, Eigen::Index j) {
    return trajectory_kernel(cu, cy, window(data, depth, i), window(data, depth, j));
  });
  return GramProblem(std::move(data), depth, std::move(cu), std::move(cy), std::move(noise),
                     std::move(k));
}

Mat input_gram(const TrajectoryData& data, Eigen::Index depth, const KernelSpec& k_u) {
  const Eigen::Index n = hankel_columns(data, depth);
  const Mat& u = data.u();
  return symmetric_fill(n, [&](Eigen::Index i, Eigen::Index j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < depth; ++k) s += eval(k_u, u.col(i + k), u.col(j + k));
    return s;
  });
}

PeRank pe_rank(const TrajectoryData& data, Eigen::Index depth, const KernelSpec& k_u) {
  const Mat ku = input_gram(data, depth, k_u);
  Eigen::SelfAdjointEigenSolver<Mat> es(ku, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverFailure("pe_rank: eigendecomposition failed");
  // Singular values of a symmetric matrix are the absolute eigenvalues.
  std::vector<double> sv(static_cast<std::size_t>(ku.rows()));
  for (Eigen::Index i = 0; i < ku.rows(); ++i) sv[static_cast<std::size_t>(i)] = std::abs(es.eigenvalues()(i));
  std::sort(sv.begin(), sv.end(), std::greater<>());

  PeRank out;
  const double smax = sv.empty() ? 0.0 : sv.front();
  out.tolerance = kRankTolerance * static_cast<double>(ku.rows()) * smax;
  out.rank = static_cast<Eigen::Index>(
      std::count_if(sv.begin(), sv.end(), [&](double s) { return s > out.tolerance; }));
  out.singular_values = std::move(sv);
  return out;
}

double pe_trace_score(const TrajectoryData& data, Eigen::Index depth, const KernelSpec& k_u) {
  const Eigen::Index n = hankel_columns(data, depth);
  const Mat& u = data.u();
  double trace = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < depth; ++k) trace += eval(k_u, u.col(j + k), u.col(j + k));
  }
  return trace / static_cast<double>(depth * n);
}

}  // namespace kdpc
