#include "kdpc/errors.hpp"
#include "kdpc/linear_oracle.hpp"

#include "oracles.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <random>

using namespace kdpc;


TEST_SUITE("linear_oracle") {
  TEST_CASE("random systems are controllable and stable") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const auto sys = random_controllable(1 + s % 4, 1, 1, s, 0.9);
      CHECK(controllability_rank(sys) == sys.n_x());
      CHECK(spectral_radius(sys.A) <= 0.9 + 1e-12);
      CHECK(sys.D.isZero());
    }
    const auto a = random_controllable(3, 1, 1, 5, 0.9), b = random_controllable(3, 1, 1, 5, 0.9);
    CHECK(a.A == b.A);
  }

  TEST_CASE("controllability rank of a decoupled system") {
    LtiSystem sys{Mat::Identity(2, 2) * 0.5, (Mat(2, 1) << 1.0, 0.0).finished(), Mat::Ones(1, 2),
                  Mat::Zero(1, 1)};
    CHECK(controllability_rank(sys) == 1);
  }

  TEST_CASE("simulate_lti matches the recursion") {
    const auto sys = random_controllable(3, 1, 1, 8, 0.9);
    const Mat u = Mat::Random(1, 25);
    Vec xa, xb;
    CHECK((simulate_lti(sys, Vec::Ones(3), u, &xa) - oracle::simulate(sys, Vec::Ones(3), u, &xb))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
    CHECK((xa - xb).norm() < 1e-14);
  }

  TEST_CASE("data-driven prediction reproduces the system") {
    for (std::uint64_t s = 1; s <= 5; ++s) {
      const auto f = oracle::lti_fixture(s);
      std::mt19937_64 rng(s);
      std::normal_distribution<double> n01;
      Mat u(1, 16);
      for (Eigen::Index k = 0; k < 16; ++k) u(0, k) = n01(rng);
      const Mat y = oracle::simulate(f.sys, f.x_end, u);
      const Mat p = deepc_predict(f.data, 6, 10, u.leftCols(6), y.leftCols(6), u.rightCols(10));
      CHECK(oracle::rmse(p, y.rightCols(10)) < 1e-9);
    }
  }

  TEST_CASE("inconsistent context is not in the behavior") {
    const auto f = oracle::lti_fixture(3);
    const Mat u = Mat::Zero(1, 6), y = Mat::Ones(1, 6);
    CHECK_THROWS_AS(deepc_predict(f.data, 6, 4, u, y, Mat::Zero(1, 4)), NotInBehaviorError);
  }

  TEST_CASE("unconstrained data-driven control equals the model-based plan") {
    for (std::uint64_t s = 1; s <= 6; ++s) {
      const auto f = oracle::lti_fixture(s);
      const Mat u_ini = f.data.u().rightCols(6), y_ini = f.data.y().rightCols(6);
      const auto plan = deepc_control(f.data, 6, 8, Mat::Identity(1, 1), 0.1 * Mat::Identity(1, 1),
                                      Mat::Constant(1, 1, 1.0), u_ini, y_ini);
      const auto ref = oracle::lq_plan(f.sys, u_ini, y_ini, 8, 1.0, 0.1, 1.0);
      CHECK((plan.u - ref.u).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((plan.y - ref.y).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  TEST_CASE("input box is enforced") {
    const auto f = oracle::lti_fixture(2);
    const Mat u_ini = f.data.u().rightCols(6), y_ini = f.data.y().rightCols(6);
    const InputBox box{Vec::Constant(1, -0.2), Vec::Constant(1, 0.2)};
    const auto plan = deepc_control(f.data, 6, 8, Mat::Identity(1, 1), 0.01 * Mat::Identity(1, 1),
                                    Mat::Constant(1, 1, 5.0), u_ini, y_ini, box);
    CHECK(plan.u.maxCoeff() <= 0.2 + 1e-9);
    CHECK(plan.u.minCoeff() >= -0.2 - 1e-9);
    CHECK(plan.u.maxCoeff() == doctest::Approx(0.2));
  }
}
