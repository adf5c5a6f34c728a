#include "kdpc/controller.hpp"
#include "kdpc/hankel.hpp"
#include "kdpc/plants.hpp"
#include "kdpc/predictor.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace kdpc;

namespace {

TrajectoryData pendulum_data(Eigen::Index length) {
  const auto plant = pendulum_plant();
  return generate(plant, default_initial_state(plant), {excitation::UniformRandom{}, length, 1});
}

TrajectoryData motor_data(Eigen::Index length) {
  const auto plant = motor_plant();
  const auto raw = generate(plant, default_initial_state(plant),
                            {excitation::DriftingGaussian{}, length, 1});
  return Scaling{ChannelScaling::identity(1), ChannelScaling::zscore(raw.y())}.normalize(raw);
}

void BM_KernelEval(benchmark::State& state) {
  const auto k = experiment::pendulum_output_kernel();
  const Vec x = Vec::Constant(1, 0.3), y = Vec::Constant(1, -0.2);
  for (auto _ : state) benchmark::DoNotOptimize(eval(k, x, y));
}
BENCHMARK(BM_KernelEval);

void BM_GramBuild(benchmark::State& state) {
  const auto data = pendulum_data(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_gram(data, 70, experiment::pendulum_input_kernel(),
                                        experiment::pendulum_output_kernel()));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GramBuild)->Arg(150)->Arg(300)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_GramSpectrum(benchmark::State& state) {
  const auto data = motor_data(state.range(0));
  for (auto _ : state) {
    const auto g = build_gram(data, 23, experiment::motor_kernel(), experiment::motor_kernel());
    benchmark::DoNotOptimize(g.spectrum().eigenvalues().data());
  }
}
BENCHMARK(BM_GramSpectrum)->Arg(300)->Arg(700)->Unit(benchmark::kMillisecond);

void BM_ReducedResidual(benchmark::State& state) {
  auto gram = std::make_shared<const GramProblem>(
      build_gram(motor_data(700), 23, experiment::motor_kernel(), experiment::motor_kernel()));
  const ResidualModel model(gram);
  gram->spectrum();
  const Window w = gram->column(100);
  const Mat qu = w.u, qy = w.y.array() + 0.05;
  const auto fixed = model.fixed_part(Window{qu, qy}, 15, 15);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.reduced(Window{qu, qy}, 0.0, fixed, true).value);
  }
}
BENCHMARK(BM_ReducedResidual)->Unit(benchmark::kMicrosecond);

void BM_PendulumPredict(benchmark::State& state) {
  auto gram = std::make_shared<const GramProblem>(build_gram(
      pendulum_data(500), 70, experiment::pendulum_input_kernel(), experiment::pendulum_output_kernel()));
  const auto plant = pendulum_plant();
  const auto test = generate(plant, default_initial_state(plant), {excitation::UniformRandom{}, 100, 2});
  const PredictionProblem p(gram, test.u().middleCols(20, 10), test.y().middleCols(20, 10),
                            test.u().middleCols(30, 60));
  gram->spectrum();
  for (auto _ : state) benchmark::DoNotOptimize(predict(p).residual);
}
BENCHMARK(BM_PendulumPredict)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_MotorStep(benchmark::State& state) {
  auto gram = std::make_shared<const GramProblem>(
      build_gram(motor_data(700), 23, experiment::motor_kernel(), experiment::motor_kernel()));
  MpcSettings s;
  s.lower_level_stage = state.range(0) != 0;
  s.inner.ridge = 30.0;
  const MpcProblem p(gram, 15, 8, Mat::Identity(1, 1), 0.01 * Mat::Identity(1, 1),
                     Mat::Constant(1, 1, -0.5), InputBox{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)},
                     std::nullopt, s);
  const Window w = gram->column(300);
  const Mat u_ini = w.u.leftCols(15), y_ini = w.y.leftCols(15);
  gram->spectrum();
  for (auto _ : state) benchmark::DoNotOptimize(solve_step(p, u_ini, y_ini).upper_cost);
}
BENCHMARK(BM_MotorStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
