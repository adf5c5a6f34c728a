#pragma once

#include "kdpc/kernels.hpp"
#include "kdpc/trajectory.hpp"

#include <memory>
#include <vector>

namespace kdpc {

/// A depth-L window of a trajectory; columns are samples.
struct Window {
  MatRef u;
  MatRef y;
};

/// Column `j` (0-based) of the depth-L Hankel matrix: samples j .. j+L-1.
/// Throws ArgumentError when j is outside [0, T-L].
Window window(const TrajectoryData& data, Eigen::Index depth, Eigen::Index j);

/// Number of Hankel columns T - L + 1; throws InsufficientDataError when T < L.
Eigen::Index hankel_columns(const TrajectoryData& data, Eigen::Index depth);

/// Sum over aligned samples of k_u(a.u_k, b.u_k) + k_y(a.y_k, b.y_k).
///
/// `a` is the data side: a channel's noise model is applied to it.
double trajectory_kernel(const KernelChannel& k_u, const KernelChannel& k_y, const Window& a,
                         const Window& b);

/// Noise-free convenience overload.
double trajectory_kernel(const KernelSpec& k_u, const KernelSpec& k_y, const Window& a,
                         const Window& b);

/// Numeric block-Hankel matrix of a signal (rows = depth * dim, cols = T-L+1).
Mat numeric_hankel(const Mat& signal, Eigen::Index depth);

/// [Han_L(u); Han_L(y)].
Mat stacked_hankel(const TrajectoryData& data, Eigen::Index depth);

/// Eigendecomposition of the Gram matrix and the filtered solve used to
/// eliminate the Hankel coefficients g.
class GramSpectrum {
 public:
  explicit GramSpectrum(const Mat& gram);

  const Vec& eigenvalues() const noexcept { return values_; }
  const Mat& eigenvectors() const noexcept { return vectors_; }

  /// Minimizer of g'Kg - 2 g'c + ridge |g|^2. With ridge == 0, eigenvalues
  /// at or below pinv_cutoff() are dropped (truncated pseudo-inverse).
  Vec solve(const Vec& c, double ridge) const;

  /// The same filter applied to K as a dense matrix: solve(c, r) == inverse(r) * c.
  Mat inverse(double ridge) const;

  /// n * machine epsilon * lambda_max, the rounding level of the
  /// eigendecomposition.
  double pinv_cutoff() const noexcept;

 private:
  Vec values_;
  Mat vectors_;
};

/// Depth-L windowed view of a trajectory and its n x n Gram matrix.
///
/// K(i,j) = trajectory_kernel(window i, window j), computed on the upper
/// triangle and mirrored. Immutable; copies share the lazily computed
/// spectrum.
class GramProblem {
 public:
  const TrajectoryData& data() const noexcept { return data_; }
  Eigen::Index depth() const noexcept { return depth_; }
  Eigen::Index columns() const noexcept { return gram_.rows(); }
  const KernelSpec& k_u() const noexcept { return channel_u_.spec(); }
  const KernelSpec& k_y() const noexcept { return channel_y_.spec(); }
  const NoiseModel& noise() const noexcept { return noise_; }
  const KernelChannel& channel_u() const noexcept { return channel_u_; }
  const KernelChannel& channel_y() const noexcept { return channel_y_; }
  const Mat& gram() const noexcept { return gram_; }

  Window column(Eigen::Index j) const { return window(data_, depth_, j); }

  /// Thread-safe; computed on first use.
  const GramSpectrum& spectrum() const;
  /// spectrum().inverse(ridge), cached per ridge value. Thread-safe.
  const Mat& inverse(double ridge) const;

 private:
  friend GramProblem build_gram(TrajectoryData data, Eigen::Index depth, KernelSpec k_u,
                                KernelSpec k_y, NoiseModel noise);
  GramProblem(TrajectoryData data, Eigen::Index depth, KernelChannel cu, KernelChannel cy,
              NoiseModel noise, Mat gram);

  struct SpectrumCache;

  TrajectoryData data_;
  Eigen::Index depth_;
  KernelChannel channel_u_;
  KernelChannel channel_y_;
  NoiseModel noise_;
  Mat gram_;
  std::shared_ptr<SpectrumCache> cache_;
};

GramProblem build_gram(TrajectoryData data, Eigen::Index depth, KernelSpec k_u, KernelSpec k_y,
                       NoiseModel noise = NoiseModel::none());

/// Input-only Gram matrix (K_u)_{ij} = sum_k k_u(u_{i+k}, u_{j+k}).
Mat input_gram(const TrajectoryData& data, Eigen::Index depth, const KernelSpec& k_u);

struct PeRank {
  Eigen::Index rank = 0;
  std::vector<double> singular_values;  ///< descending
  double tolerance = 0.0;               ///< absolute threshold used
};

/// Numerical rank of the input Gram matrix: singular values above
/// 1e-9 * n * sigma_max.
PeRank pe_rank(const TrajectoryData& data, Eigen::Index depth, const KernelSpec& k_u);

/// trace(K_u) / (L n). Heuristic informativeness score, not a rank bound.
double pe_trace_score(const TrajectoryData& data, Eigen::Index depth, const KernelSpec& k_u);

inline constexpr double kRankTolerance = 1e-9;

}  // namespace kdpc
