#include "kdpc/errors.hpp"
#include "kdpc/hankel.hpp"
#include "kdpc/plants.hpp"

#include "oracles.hpp"

#include <Eigen/Dense>
#include <doctest.h>

using namespace kdpc;

namespace {

TrajectoryData small_pendulum(Eigen::Index length = 60) {
  const auto plant = pendulum_plant();
  return generate(plant, default_initial_state(plant), {excitation::UniformRandom{}, length, 5});
}

}  // namespace

TEST_SUITE("hankel") {
  TEST_CASE("windows and column counts") {
    const auto data = small_pendulum(30);
    CHECK(hankel_columns(data, 10) == 21);
    CHECK(hankel_columns(data, 30) == 1);
    CHECK_THROWS_AS(hankel_columns(data, 31), InsufficientDataError);
    const Window w = window(data, 10, 4);
    CHECK(w.u.cols() == 10);
    CHECK(w.y(0, 0) == data.y()(0, 4));
    CHECK(w.u(0, 9) == data.u()(0, 13));
    CHECK_THROWS_AS(window(data, 10, 21), ArgumentError);
    CHECK_THROWS_AS(window(data, 10, -1), ArgumentError);
  }

  TEST_CASE("numeric hankel matches the reference layout") {
    Mat s(2, 9);
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = 0.5 * static_cast<double>(i) - 1.0;
    CHECK(numeric_hankel(s, 4) == oracle::hankel(s, 4));
    const auto data = small_pendulum(25);
    Mat stacked(2 * 5, 21);
    stacked << oracle::hankel(data.u(), 5), oracle::hankel(data.y(), 5);
    CHECK(stacked_hankel(data, 5) == stacked);
  }

  TEST_CASE("gram matches direct summation") {
    const auto data = small_pendulum();
    const auto ku = experiment::pendulum_input_kernel(), ky = experiment::pendulum_output_kernel();
    const Mat k = build_gram(data, 12, ku, ky).gram();
    const Mat ref = oracle::gram(data, 12, ku, ky);
    CHECK((k - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
  }

  TEST_CASE("linear gram is H'H") {
    const auto data = small_pendulum();
    const Mat k = build_gram(data, 8, KernelSpec::linear(), KernelSpec::linear()).gram();
    Mat h(16, 53);
    h << oracle::hankel(data.u(), 8), oracle::hankel(data.y(), 8);
    CHECK((k - h.transpose() * h).cwiseAbs().maxCoeff() <= 1e-12 * k.cwiseAbs().maxCoeff());
  }

  TEST_CASE("trajectory kernel sums aligned samples") {
    const auto data = small_pendulum(20);
    const auto ku = experiment::pendulum_input_kernel(), ky = experiment::pendulum_output_kernel();
    const Window a = window(data, 5, 2), b = window(data, 5, 9);
    double s = 0.0;
    for (Eigen::Index k = 0; k < 5; ++k) {
      s += oracle::kernel(ku, a.u.col(k), b.u.col(k)) + oracle::kernel(ky, a.y.col(k), b.y.col(k));
    }
    CHECK(trajectory_kernel(ku, ky, a, b) == doctest::Approx(s).epsilon(1e-13));
  }

  TEST_CASE("spectrum solve is the filtered inverse") {
    const auto data = small_pendulum();
    const auto g = build_gram(data, 10, experiment::pendulum_input_kernel(),
                              experiment::pendulum_output_kernel());
    const Vec c = g.gram().col(3) + 0.1 * Vec::Ones(g.columns());
    for (const double ridge : {0.0, 1e-3, 1.0}) {
      const Vec x = g.spectrum().solve(c, ridge);
      CHECK((g.inverse(ridge) * c - x).norm() <= 1e-9 * x.norm());
    }
    const Mat kr = g.gram() + 1.0 * Mat::Identity(g.columns(), g.columns());
    const Vec direct = kr.ldlt().solve(c);
    CHECK((g.spectrum().solve(c, 1.0) - direct).norm() <= 1e-9 * direct.norm());
  }

  TEST_CASE("input gram and excitation rank") {
    const auto data = small_pendulum(80);
    const Mat ku = input_gram(data, 6, KernelSpec::linear());
    const Mat h = oracle::hankel(data.u(), 6);
    CHECK((ku - h.transpose() * h).cwiseAbs().maxCoeff() <= 1e-12 * ku.cwiseAbs().maxCoeff());
    CHECK(pe_rank(data, 6, KernelSpec::linear()).rank == 6);

    const TrajectoryData zero(Mat::Zero(1, 80), data.y(), data.dt());
    CHECK(pe_rank(zero, 6, KernelSpec::linear()).rank == 0);

    const TrajectoryData constant(Mat::Ones(1, 80), data.y(), data.dt());
    CHECK(pe_rank(constant, 6, KernelSpec::linear()).rank == 1);
    CHECK(pe_trace_score(constant, 6, KernelSpec::linear()) == doctest::Approx(1.0));
  }
}
