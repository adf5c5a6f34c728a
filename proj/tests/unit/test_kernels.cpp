#include "kdpc/errors.hpp"
#include "kdpc/kernels.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace kdpc;

namespace {

std::vector<KernelSpec> all_specs() {
  return {KernelSpec::linear(),
          KernelSpec::rbf(2.0),
          KernelSpec({{0.5, {factor::Polynomial{3, 0.5}}}}),
          KernelSpec({{1.0, {factor::Exponential{}}}}),
          experiment::pendulum_input_kernel(),
          experiment::pendulum_output_kernel(),
          experiment::motor_kernel(),
          KernelSpec({{0.3, {factor::Linear{}, factor::Rbf{3.0}, factor::Polynomial{2, 1.0}}}})};
}

Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::normal_distribution<double> n01;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * n01(rng);
  return v;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("eval agrees with the defining formulas") {
    std::mt19937_64 rng(1);
    for (const auto& spec : all_specs()) {
      for (int i = 0; i < 20; ++i) {
        const Eigen::Index dim = 1 + i % 3;
        const Vec x = random_vec(rng, dim, 0.8), y = random_vec(rng, dim, 0.8);
        const double ref = oracle::kernel(spec, x, y);
        CHECK(eval(spec, x, y) == doctest::Approx(ref).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("kernels are symmetric") {
    std::mt19937_64 rng(2);
    for (const auto& spec : all_specs()) {
      const Vec x = random_vec(rng, 2, 1.0), y = random_vec(rng, 2, 1.0);
      CHECK(eval(spec, x, y) == doctest::Approx(eval(spec, y, x)).epsilon(1e-14));
    }
  }

  TEST_CASE("grad_y matches central differences") {
    std::mt19937_64 rng(3);
    for (const auto& spec : all_specs()) {
      const Vec x = random_vec(rng, 3, 0.7), y = random_vec(rng, 3, 0.7);
      const Vec fd = oracle::central_diff([&](const Vec& z) { return oracle::kernel(spec, x, z); },
                                          y, 1e-6);
      const Vec g = eval_grad_y(spec, x, y);
      CHECK((g - fd).norm() <= 1e-7 * std::max(1.0, fd.norm()));

      Vec acc = Vec::Ones(3);
      const double k = eval_and_grad_y(spec, x, y, 2.0, acc);
      CHECK(k == doctest::Approx(eval(spec, x, y)));
      CHECK((acc - (Vec::Ones(3) + 2.0 * g)).norm() <= 1e-12 * std::max(1.0, g.norm()));
    }
  }

  TEST_CASE("exponential overflow is reported with the term index") {
    const KernelSpec spec({{1.0, {factor::Linear{}}}, {1.0, {factor::Exponential{}}}});
    const Vec x = Vec::Constant(1, 30.0);
    try {
      eval(spec, x, x);
      FAIL("expected NumericOverflowError");
    } catch (const NumericOverflowError& e) {
      CHECK(e.term() == 1);
    }
    CHECK_NOTHROW(eval(spec, Vec::Constant(1, 20.0), Vec::Constant(1, 20.0)));
  }

  TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(KernelSpec({{-1.0, {factor::Linear{}}}}), ArgumentError);
    CHECK_THROWS_AS(KernelSpec({{1.0, {factor::Rbf{0.0}}}}), ArgumentError);
    CHECK_THROWS_AS(KernelSpec({{1.0, {factor::Polynomial{0, 1.0}}}}), ArgumentError);
    CHECK_THROWS_AS(KernelSpec(std::vector<KernelTerm>{KernelTerm{1.0, {}}}), ArgumentError);
    CHECK(KernelSpec::linear().is_linear());
    CHECK_FALSE(experiment::motor_kernel().is_linear());
  }

  TEST_CASE("no noise embeds to the plain kernel") {
    const Vec x = Vec::Constant(2, 0.3), y = Vec::Constant(2, -0.2);
    const auto spec = experiment::motor_kernel();
    CHECK(mean_embed(spec, NoiseModel::none(), x, y) == doctest::Approx(eval(spec, x, y)));
  }

  TEST_CASE("empirical noise is the sample average") {
    const std::vector<std::vector<double>> samples{{0.1}, {-0.3}, {0.25}};
    const auto spec = experiment::pendulum_output_kernel();
    const Vec x = Vec::Constant(1, 0.4), y = Vec::Constant(1, -0.7);
    double avg = 0.0;
    for (const auto& s : samples) avg += oracle::kernel(spec, Vec::Constant(1, 0.4 + s[0]), y);
    avg /= 3.0;
    CHECK(mean_embed(spec, NoiseModel::empirical(samples), x, y) == doctest::Approx(avg).epsilon(1e-13));
  }

  // Sum of an Rbf product and an exponential, both with closed-form embeddings.
  KernelSpec mixed_gaussian_spec() {
    return KernelSpec(std::vector<KernelTerm>{
        KernelTerm{0.5, {factor::Rbf{1.5}, factor::Rbf{0.8}}}, KernelTerm{0.2, {factor::Exponential{}}}});
  }

  TEST_CASE("gaussian closed forms match Monte Carlo") {
    const std::vector<KernelSpec> specs{
        KernelSpec::linear(), KernelSpec::rbf(1.5), KernelSpec({{1.0, {factor::Exponential{}}}}),
        KernelSpec({{1.0, {factor::Polynomial{2, 1.0}}}}), mixed_gaussian_spec()};
    const Vec x = (Vec(2) << 0.3, -0.4).finished(), y = (Vec(2) << -0.2, 0.5).finished();
    for (const auto& spec : specs) {
      REQUIRE(embedding_supported(spec, NoiseModel::gaussian(0.3)));
      const double closed = mean_embed(spec, NoiseModel::gaussian(0.3), x, y);
      const double mc = oracle::monte_carlo_embed(spec, 0.3, x, y, 400000, 77);
      CHECK(closed == doctest::Approx(mc).epsilon(5e-3));
    }
  }

  TEST_CASE("embedding gradient matches central differences") {
    const auto spec = mixed_gaussian_spec();
    const auto noise = NoiseModel::gaussian(0.2);
    const Vec x = (Vec(2) << 0.1, 0.6).finished(), y = (Vec(2) << -0.3, 0.2).finished();
    const Vec fd = oracle::central_diff([&](const Vec& z) { return mean_embed(spec, noise, x, z); },
                                        y, 1e-6);
    CHECK((mean_embed_grad_y(spec, noise, x, y) - fd).norm() <= 1e-7 * fd.norm());
  }

  TEST_CASE("unsupported gaussian embeddings fall back to samples") {
    const KernelSpec cubic({{1.0, {factor::Polynomial{3, 1.0}}}});
    const auto noise = NoiseModel::gaussian(0.1);
    CHECK_FALSE(embedding_supported(cubic, noise));
    const Vec x = Vec::Constant(1, 0.5), y = Vec::Constant(1, 0.2);
    CHECK_THROWS_AS(mean_embed(cubic, noise, x, y), UnsupportedEmbeddingError);
    const KernelChannel channel(cubic, noise, 1);
    CHECK(std::holds_alternative<noise::Empirical>(channel.noise().kind()));
    // E[(1 + (x+w) y)^3] with w ~ N(0, s^2): 1+xy = a, a^3 + 3 a y^2 s^2
    const double a = 1.0 + 0.5 * 0.2;
    CHECK(channel.data_eval(x, y) == doctest::Approx(a * a * a + 3.0 * a * 0.04 * 0.01).epsilon(1e-3));
  }
}
