#include "kdpc/errors.hpp"
#include "kdpc/trajectory.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace kdpc;

TEST_SUITE("trajectory") {
  TEST_CASE("csv round trip is exact") {
    Mat u(2, 4), y(1, 4);
    u << 0.1, -1.0 / 3.0, 1e-17, 12345.678, 2.0, 0.0, -0.5, 1e300;
    y << std::acos(-1.0), -2.5e-8, 7.0, 0.3;
    const TrajectoryData data(u, y, 0.01);
    std::stringstream ss;
    write_trajectory_csv(ss, data);
    const std::string text = ss.str();
    CHECK(text.rfind("t,u1,u2,y1\n", 0) == 0);
    const auto back = read_trajectory_csv(ss);
    CHECK(back.u() == u);
    CHECK(back.y() == y);
    CHECK(back.dt() == doctest::Approx(0.01));
    std::stringstream again;
    write_trajectory_csv(again, back);
    CHECK(again.str() == text);
  }

  TEST_CASE("format_double is shortest round trip") {
    for (const double v : {0.1, 1.0 / 3.0, -2.0, 1e-300, 6.02214076e23}) {
      CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(3.0) == "3");
  }

  TEST_CASE("query tables allow missing outputs") {
    std::istringstream in("t,u1,y1\n0,1,0.5\n1,2,\n2,3,nan\n");
    const auto t = read_csv_table(in);
    CHECK(t.n_u == 1);
    CHECK(t.n_y == 1);
    CHECK(t.u.cols() == 3);
    CHECK(t.y(0, 0) == 0.5);
    CHECK(std::isnan(t.y(0, 1)));
    CHECK(std::isnan(t.y(0, 2)));
  }

  TEST_CASE("malformed csv is rejected") {
    std::istringstream bad_header("time,a,b\n0,1,2\n");
    CHECK_THROWS(read_trajectory_csv(bad_header));
    std::istringstream short_row("t,u1,y1\n0,1\n");
    CHECK_THROWS(read_trajectory_csv(short_row));
    CHECK_THROWS_AS(read_trajectory_csv("/nonexistent/dir/file.csv"), IoError);
  }

  TEST_CASE("slices and shape checks") {
    const TrajectoryData data(Mat::Random(1, 10), Mat::Random(2, 10), 0.1);
    CHECK(data.head(4).length() == 4);
    CHECK(data.slice(3, 5).u() == data.u().middleCols(3, 5));
    CHECK_THROWS_AS(TrajectoryData(Mat::Zero(1, 5), Mat::Zero(1, 4), 0.1), ArgumentError);
    CHECK_THROWS_AS(data.slice(8, 5), ArgumentError);
  }

  TEST_CASE("zscore scaling inverts") {
    Mat s(2, 5);
    s << 1, 2, 3, 4, 5, 7, 7, 7, 7, 7;
    const auto sc = ChannelScaling::zscore(s);
    const Mat z = sc.normalize(s);
    CHECK(std::abs(z.row(0).mean()) < 1e-14);
    CHECK(z.row(1).isZero());
    CHECK(sc.scale(1) == 1.0);
    CHECK((sc.denormalize(z) - s).norm() < 1e-14);
  }
}
