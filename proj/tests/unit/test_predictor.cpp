#include "kdpc/errors.hpp"
#include "kdpc/plants.hpp"
#include "kdpc/predictor.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <memory>

using namespace kdpc;

TEST_SUITE("predictor") {
  TEST_CASE("linear kernels reproduce an LTI system") {
    const auto f = oracle::lti_fixture(3);
    const Mat u = Mat::Random(1, 16);
    const Mat y = oracle::simulate(f.sys, f.x_end, u);
    auto gram = std::make_shared<const GramProblem>(
        build_gram(f.data, 16, KernelSpec::linear(), KernelSpec::linear()));
    const auto r = predict(PredictionProblem(gram, u.leftCols(6), y.leftCols(6), u.rightCols(10)));
    CHECK(oracle::rmse(r.y_pred, y.rightCols(10)) < 1e-5);
    CHECK(r.residual <= 1e-8 * r.self_kernel);
    CHECK(r.report.restarts_used >= 1);
  }

  TEST_CASE("a training window is predicted exactly") {
    const auto plant = pendulum_plant();
    const auto data = generate(plant, default_initial_state(plant), {excitation::UniformRandom{}, 120, 4});
    auto gram = std::make_shared<const GramProblem>(build_gram(
        data, 20, experiment::pendulum_input_kernel(), experiment::pendulum_output_kernel()));
    const Window w = gram->column(37);
    const auto r = predict(PredictionProblem(gram, w.u.leftCols(8), w.y.leftCols(8), w.u.rightCols(12)));
    CHECK(oracle::rmse(r.y_pred, w.y.rightCols(12)) < 1e-6);
    CHECK(r.residual <= 1e-8 * r.self_kernel);
  }

  TEST_CASE("residual helpers agree with the model") {
    const auto f = oracle::lti_fixture(2);
    auto gram = std::make_shared<const GramProblem>(
        build_gram(f.data, 10, KernelSpec::linear(), KernelSpec::linear()));
    const Window w = gram->column(5);
    const PredictionProblem p(gram, w.u.leftCols(4), w.y.leftCols(4), w.u.rightCols(6));
    const Vec g = Vec::Unit(gram->columns(), 5);
    CHECK(std::abs(residual(p, g, w.y.rightCols(6))) < 1e-10);
    const Mat yf = w.y.rightCols(6) + Mat::Constant(1, 6, 0.1);
    CHECK(residual(p, g, yf) == doctest::Approx(6 * 0.01));
    const auto grad = residual_grad(p, g, yf);
    CHECK((grad.y - Mat::Constant(1, 6, 0.2)).norm() < 1e-10);
    const Mat full = p.query_y(yf);
    CHECK(full.cols() == 10);
  }

  TEST_CASE("hold baseline repeats the last output") {
    const auto f = oracle::lti_fixture(1);
    auto gram = std::make_shared<const GramProblem>(
        build_gram(f.data, 10, KernelSpec::linear(), KernelSpec::linear()));
    const Window w = gram->column(0);
    const PredictionProblem p(gram, w.u.leftCols(4), w.y.leftCols(4), w.u.rightCols(6));
    CHECK(hold_prediction(p) == Mat::Constant(1, 6, w.y(0, 3)));
  }

  TEST_CASE("query shapes must match the Gram depth") {
    const auto f = oracle::lti_fixture(1);
    auto gram = std::make_shared<const GramProblem>(
        build_gram(f.data, 10, KernelSpec::linear(), KernelSpec::linear()));
    CHECK_THROWS_AS(PredictionProblem(gram, Mat::Zero(1, 4), Mat::Zero(1, 4), Mat::Zero(1, 5)),
                    ArgumentError);
    CHECK_THROWS_AS(PredictionProblem(gram, Mat::Zero(1, 4), Mat::Zero(1, 3), Mat::Zero(1, 6)),
                    ArgumentError);
    CHECK_THROWS_AS(PredictionProblem(gram, Mat::Zero(2, 4), Mat::Zero(1, 4), Mat::Zero(2, 6)),
                    ArgumentError);
  }

  TEST_CASE("results are deterministic in the seed") {
    const auto plant = pendulum_plant();
    const auto data = generate(plant, default_initial_state(plant), {excitation::UniformRandom{}, 100, 6});
    const auto test = generate(plant, default_initial_state(plant), {excitation::UniformRandom{}, 40, 7});
    auto gram = std::make_shared<const GramProblem>(build_gram(
        data, 20, experiment::pendulum_input_kernel(), experiment::pendulum_output_kernel()));
    const PredictionProblem p(gram, test.u().leftCols(8), test.y().leftCols(8), test.u().middleCols(8, 12));
    SolverSettings s;
    s.seed = 9;
    const auto a = predict(p, s), b = predict(p, s);
    CHECK(a.y_pred == b.y_pred);
    CHECK(a.report.iterations == b.report.iterations);
  }
}
