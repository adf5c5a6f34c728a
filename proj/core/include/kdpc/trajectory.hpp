#pragma once

#include "kdpc/kernels.hpp"

#include <iosfwd>
#include <string>

namespace kdpc {

/// Recorded input/output sequences, one column per sample.
///
/// `u` is n_u x T and `y` is n_y x T. Immutable after construction.
class TrajectoryData {
 public:
  TrajectoryData(Mat u, Mat y, double dt);

  const Mat& u() const noexcept { return u_; }
  const Mat& y() const noexcept { return y_; }
  double dt() const noexcept { return dt_; }

  Eigen::Index length() const noexcept { return u_.cols(); }
  Eigen::Index n_u() const noexcept { return u_.rows(); }
  Eigen::Index n_y() const noexcept { return y_.rows(); }

  /// First `count` samples.
  TrajectoryData head(Eigen::Index count) const;
  /// Samples [begin, begin + count).
  TrajectoryData slice(Eigen::Index begin, Eigen::Index count) const;

 private:
  Mat u_;
  Mat y_;
  double dt_;
};

/// Trajectory CSV: header `t,u1..u{n_u},y1..y{n_y}`, one row per sample,
/// t = k * dt, shortest round-trip decimal formatting.
void write_trajectory_csv(std::ostream& out, const TrajectoryData& data);
void write_trajectory_csv(const std::string& path, const TrajectoryData& data);

/// Parses the trajectory CSV; dt is recovered from the first two time stamps
/// (or `fallback_dt` for a single row).
TrajectoryData read_trajectory_csv(std::istream& in, double fallback_dt = 1.0);
TrajectoryData read_trajectory_csv(const std::string& path, double fallback_dt = 1.0);

/// Raw rows of a CSV whose header follows the trajectory layout. Empty or
/// `nan` cells parse as NaN; used for prediction queries with unknown outputs.
struct CsvTable {
  Eigen::Index n_u = 0;
  Eigen::Index n_y = 0;
  Vec t;
  Mat u;  ///< n_u x rows
  Mat y;  ///< n_y x rows
};
CsvTable read_csv_table(std::istream& in);
CsvTable read_csv_table(const std::string& path);

/// Shortest round-trip text for a double.
std::string format_double(double v);

/// Per-channel affine map to normalized units: z = (x - offset) / scale.
struct ChannelScaling {
  Vec offset;
  Vec scale;

  static ChannelScaling identity(Eigen::Index dim);
  /// Mean / standard deviation of the rows of `signal` (scale 1 for flat rows).
  static ChannelScaling zscore(const Mat& signal);

  Mat normalize(const Mat& x) const;
  Mat denormalize(const Mat& z) const;
  Vec normalize(const Vec& x) const;
  Vec denormalize(const Vec& z) const;
};

struct Scaling {
  ChannelScaling u;
  ChannelScaling y;

  static Scaling identity(Eigen::Index n_u, Eigen::Index n_y);
  TrajectoryData normalize(const TrajectoryData& data) const;
  TrajectoryData denormalize(const TrajectoryData& data) const;
};

}  // namespace kdpc
