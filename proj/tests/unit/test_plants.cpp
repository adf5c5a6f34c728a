#include "kdpc/errors.hpp"
#include "kdpc/linear_oracle.hpp"
#include "kdpc/plants.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace kdpc;

TEST_SUITE("plants") {
  TEST_CASE("frictionless pendulum conserves energy") {
    auto plant = pendulum_plant(0.04, 20);
    std::get<plant::Pendulum>(plant.kind).mu = 0.0;
    const auto energy = [](const Vec& x) { return 0.5 * x(1) * x(1) - (2.0 * 9.8 / 0.5) * std::cos(x(0)); };
    Vec x = (Vec(2) << 0.8, 0.0).finished();
    const double e0 = energy(x);
    for (int k = 0; k < 500; ++k) x = step(plant, x, Vec::Zero(1)).x_next;
    CHECK(energy(x) == doctest::Approx(e0).epsilon(1e-6));
  }

  TEST_CASE("pendulum step converges at fourth order") {
    const Vec x0 = (Vec(2) << 0.5, -1.0).finished();
    const Vec u = Vec::Constant(1, 0.7);
    const Vec fine = step(pendulum_plant(0.04, 400), x0, u).x_next;
    const double e1 = (step(pendulum_plant(0.04, 2), x0, u).x_next - fine).norm();
    const double e2 = (step(pendulum_plant(0.04, 4), x0, u).x_next - fine).norm();
    CHECK(e1 / e2 > 12.0);
  }

  TEST_CASE("motor equilibrium is stationary") {
    const auto plant = motor_plant();
    const auto& m = std::get<plant::BilinearMotor>(plant.kind);
    for (const double u : {-0.5, 0.0, 0.3}) {
      const Vec x = motor_equilibrium(m, u);
      // right-hand side vanishes
      const double f1 = -(m.Ra / m.La) * x(0) + (m.km / m.La) * x(1) * u + m.ua / m.La;
      const double f2 = -(m.B / m.J) * x(1) + (m.km / m.J) * x(0) * u - m.tau / m.J;
      CHECK(std::abs(f1) < 1e-9);
      CHECK(std::abs(f2) < 1e-9);
      CHECK((step(plant, x, Vec::Constant(1, u)).x_next - x).norm() < 1e-9);
    }
    CHECK((default_initial_state(plant) - motor_equilibrium(m, 0.0)).norm() < 1e-12);
  }

  TEST_CASE("lti plant matches state-space recursion") {
    const LtiSystem sys = random_controllable(3, 1, 1, 4, 0.9);
    const auto plant = lti_plant(sys.as_plant());
    Mat u(1, 30);
    for (Eigen::Index k = 0; k < 30; ++k) u(0, k) = std::sin(0.3 * static_cast<double>(k));
    const Vec x0 = Vec::Ones(3);
    CHECK((simulate(plant, x0, u) - oracle::simulate(sys, x0, u)).cwiseAbs().maxCoeff() < 1e-13);
  }

  TEST_CASE("outputs are measured before the state update") {
    const auto plant = pendulum_plant();
    const Vec x0 = (Vec(2) << 0.2, 0.1).finished();
    const auto r = step(plant, x0, Vec::Constant(1, 1.0));
    CHECK(r.y(0) == doctest::Approx(0.2));
  }

  TEST_CASE("excitation is deterministic in the seed") {
    const ExcitationSpec a{excitation::UniformRandom{-2.0, 2.0}, 300, 11};
    const Mat s1 = excitation_signal(a, 1), s2 = excitation_signal(a, 1);
    CHECK(s1 == s2);
    CHECK(s1.minCoeff() >= -2.0);
    CHECK(s1.maxCoeff() <= 2.0);
    ExcitationSpec b = a;
    b.seed = 12;
    CHECK(excitation_signal(b, 1) != s1);

    const ExcitationSpec prbs{excitation::Prbs{{-1.0, 0.5}}, 200, 1};
    const Mat p = excitation_signal(prbs, 2);
    CHECK(((p.array() == -1.0) || (p.array() == 0.5)).all());

    const ExcitationSpec drift{excitation::DriftingGaussian{-1.0, 1.0, 0.1}, 2000, 3};
    const Mat d = excitation_signal(drift, 1);
    CHECK(d.leftCols(200).mean() == doctest::Approx(-0.9).epsilon(0.05));
    CHECK(d.rightCols(200).mean() == doctest::Approx(0.9).epsilon(0.05));
  }

  TEST_CASE("generate records inputs and outputs") {
    const auto plant = pendulum_plant();
    const ExcitationSpec ex{excitation::UniformRandom{}, 50, 2};
    const auto data = generate(plant, default_initial_state(plant), ex);
    CHECK(data.length() == 50);
    CHECK(data.u() == excitation_signal(ex, 1));
    CHECK(data.y() == simulate(plant, default_initial_state(plant), data.u()));
    const auto noisy = generate(plant, default_initial_state(plant), ex, 0.01, 3);
    CHECK(noisy.u() == data.u());
    CHECK((noisy.y() - data.y()).cwiseAbs().maxCoeff() > 0.0);
    CHECK((noisy.y() - data.y()).cwiseAbs().maxCoeff() < 0.06);
  }

  TEST_CASE("invalid models are rejected") {
    CHECK_THROWS_AS(pendulum_plant(-1.0).validate(), ArgumentError);
    CHECK_THROWS_AS(pendulum_plant(0.04, 0).validate(), ArgumentError);
    PlantModel bad = motor_plant();
    std::get<plant::BilinearMotor>(bad.kind).J = 0.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    CHECK_THROWS_AS(lti_plant({Mat::Identity(2, 2), Mat::Ones(3, 1), Mat::Ones(1, 2), Mat::Zero(1, 1)}).validate(),
                    ArgumentError);
  }

  TEST_CASE("diverging state is reported") {
    const auto plant = lti_plant({Mat::Constant(1, 1, 1e200), Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Zero(1, 1)});
    CHECK_THROWS_AS(simulate(plant, Vec::Ones(1), Mat::Zero(1, 5)), DivergenceError);
  }
}
