#include "kdpc/trajectory.hpp"

#include "kdpc/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace kdpc {

TrajectoryData::TrajectoryData(Mat u, Mat y, double dt) : u_(std::move(u)), y_(std::move(y)), dt_(dt) {
  if (u_.cols() != y_.cols()) {
    throw ArgumentError("input and output sequences differ in length");
  }
  if (u_.cols() < 1) throw ArgumentError("trajectory needs at least one sample");
  if (u_.rows() < 1 || y_.rows() < 1) throw ArgumentError("trajectory channels must be non-empty");
  if (!(dt_ > 0.0)) throw ArgumentError("sampling time must be positive");
}

TrajectoryData TrajectoryData::head(Eigen::Index count) const { return slice(0, count); }

TrajectoryData TrajectoryData::slice(Eigen::Index begin, Eigen::Index count) const {
  if (begin < 0 || count < 1 || begin + count > length()) {
    throw ArgumentError("trajectory slice out of range");
  }
  return TrajectoryData(u_.middleCols(begin, count), y_.middleCols(begin, count), dt_);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void write_header(std::ostream& out, Eigen::Index n_u, Eigen::Index n_y) {
  out << 't';
  for (Eigen::Index i = 1; i <= n_u; ++i) out << ",u" << i;
  for (Eigen::Index i = 1; i <= n_y; ++i) out << ",y" << i;
  out << '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_cell(const std::string& raw, std::size_t row) {
  const std::string s = trim(raw);
  if (s.empty() || s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw IoError("csv row " + std::to_string(row) + ": cannot parse '" + s + "'");
  }
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const TrajectoryData& data) {
  write_header(out, data.n_u(), data.n_y());
  for (Eigen::Index k = 0; k < data.length(); ++k) {
    out << format_double(static_cast<double>(k) * data.dt());
    for (Eigen::Index i = 0; i < data.n_u(); ++i) out << ',' << format_double(data.u()(i, k));
    for (Eigen::Index i = 0; i < data.n_y(); ++i) out << ',' << format_double(data.y()(i, k));
    out << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const TrajectoryData& data) {
  auto out = open_out(path);
  write_trajectory_csv(out, data);
  if (!out) throw IoError("write to '" + path + "' failed");
}

CsvTable read_csv_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv is empty");
  const auto header = split(trim(line));
  if (header.empty() || trim(header[0]) != "t") throw IoError("csv header must start with 't'");
  CsvTable table;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string h = trim(header[i]);
    const std::string expect_u = "u" + std::to_string(table.n_u + 1);
    const std::string expect_y = "y" + std::to_string(table.n_y + 1);
    if (table.n_y == 0 && h == expect_u) {
      ++table.n_u;
    } else if (h == expect_y) {
      ++table.n_y;
    } else {
      throw IoError("unexpected csv column '" + h + "'");
    }
  }
  if (table.n_u == 0 || table.n_y == 0) throw IoError("csv needs at least one u and one y column");

  std::vector<std::vector<double>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw IoError("csv row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(header.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_cell(cells[c], row);
    rows.push_back(std::move(values));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  table.t.resize(n);
  table.u.resize(table.n_u, n);
  table.y.resize(table.n_y, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    table.t(k) = r[0];
    for (Eigen::Index i = 0; i < table.n_u; ++i) table.u(i, k) = r[static_cast<std::size_t>(1 + i)];
    for (Eigen::Index i = 0; i < table.n_y; ++i) {
      table.y(i, k) = r[static_cast<std::size_t>(1 + table.n_u + i)];
    }
  }
  return table;
}

CsvTable read_csv_table(const std::string& path) {
  auto in = open_in(path);
  return read_csv_table(in);
}

TrajectoryData read_trajectory_csv(std::istream& in, double fallback_dt) {
  CsvTable table = read_csv_table(in);
  if (table.t.size() < 1) throw IoError("trajectory csv has no rows");
  if (!table.u.allFinite() || !table.y.allFinite()) {
    throw IoError("trajectory csv contains missing or non-finite values");
  }
  const double dt = table.t.size() >= 2 ? table.t(1) - table.t(0) : fallback_dt;
  if (!(dt > 0.0)) throw IoError("trajectory csv time stamps must increase");
  return TrajectoryData(std::move(table.u), std::move(table.y), dt);
}

TrajectoryData read_trajectory_csv(const std::string& path, double fallback_dt) {
  auto in = open_in(path);
  return read_trajectory_csv(in, fallback_dt);
}

ChannelScaling ChannelScaling::identity(Eigen::Index dim) {
  return {Vec::Zero(dim), Vec::Ones(dim)};
}

ChannelScaling ChannelScaling::zscore(const Mat& signal) {
  ChannelScaling s{signal.rowwise().mean(), Vec::Ones(signal.rows())};
  if (signal.cols() > 1) {
    for (Eigen::Index i = 0; i < signal.rows(); ++i) {
      const double var = (signal.row(i).array() - s.offset(i)).square().sum() /
                         static_cast<double>(signal.cols() - 1);
      if (var > 0.0) s.scale(i) = std::sqrt(var);
    }
  }
  return s;
}

Mat ChannelScaling::normalize(const Mat& x) const {
  return (x.colwise() - offset).array().colwise() / scale.array();
}

Mat ChannelScaling::denormalize(const Mat& z) const {
  return (z.array().colwise() * scale.array()).matrix().colwise() + offset;
}

Vec ChannelScaling::normalize(const Vec& x) const {
  return ((x - offset).array() / scale.array()).matrix();
}

Vec ChannelScaling::denormalize(const Vec& z) const {
  return (z.array() * scale.array()).matrix() + offset;
}

Scaling Scaling::identity(Eigen::Index n_u, Eigen::Index n_y) {
  return {ChannelScaling::identity(n_u), ChannelScaling::identity(n_y)};
}

TrajectoryData Scaling::normalize(const TrajectoryData& data) const {
  return TrajectoryData(u.normalize(data.u()), y.normalize(data.y()), data.dt());
}

TrajectoryData Scaling::denormalize(const TrajectoryData& data) const {
  return TrajectoryData(u.denormalize(data.u()), y.denormalize(data.y()), data.dt());
}

}  // namespace kdpc
