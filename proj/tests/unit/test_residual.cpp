#include "kdpc/errors.hpp"
#include "kdpc/plants.hpp"
#include "kdpc/residual.hpp"

#include "oracles.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <memory>
#include <random>

using namespace kdpc;

namespace {

std::shared_ptr<const GramProblem> motor_gram(Eigen::Index length = 120, Eigen::Index depth = 10) {
  const auto plant = motor_plant();
  const auto raw = generate(plant, default_initial_state(plant),
                            {excitation::DriftingGaussian{}, length, 3});
  const Scaling sc{ChannelScaling::identity(1), ChannelScaling::zscore(raw.y())};
  return std::make_shared<const GramProblem>(
      build_gram(sc.normalize(raw), depth, experiment::motor_kernel(), experiment::motor_kernel()));
}

Mat perturb(const Mat& m, std::mt19937_64& rng, double s) {
  std::normal_distribution<double> n01;
  Mat out = m;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += s * n01(rng);
  return out;
}

}  // namespace

TEST_SUITE("residual") {
  TEST_CASE("residual is the squared distance by direct expansion") {
    const auto gram = motor_gram();
    const ResidualModel model(gram);
    std::mt19937_64 rng(1);
    const Window w = gram->column(7);
    const Mat qu = perturb(w.u, rng, 0.2), qy = perturb(w.y, rng, 0.2);
    const Vec g = perturb(Vec::Unit(gram->columns(), 7), rng, 0.05);

    const auto& ku = gram->k_u();
    const auto& ky = gram->k_y();
    double self = 0.0;
    Vec c(gram->columns());
    for (Eigen::Index k = 0; k < 10; ++k) {
      self += oracle::kernel(ku, qu.col(k), qu.col(k)) + oracle::kernel(ky, qy.col(k), qy.col(k));
    }
    for (Eigen::Index i = 0; i < gram->columns(); ++i) {
      const Window v = gram->column(i);
      double s = 0.0;
      for (Eigen::Index k = 0; k < 10; ++k) {
        s += oracle::kernel(ku, v.u.col(k), qu.col(k)) + oracle::kernel(ky, v.y.col(k), qy.col(k));
      }
      c(i) = s;
    }
    const Mat kref = oracle::gram(gram->data(), 10, ku, ky);
    const double ref = g.dot(kref * g) + self - 2.0 * g.dot(c);
    const Window q{qu, qy};
    CHECK(model.self_kernel(q) == doctest::Approx(self).epsilon(1e-13));
    CHECK((model.cross_kernel(q) - c).norm() <= 1e-12 * c.norm());
    CHECK(model.residual(g, q) == doctest::Approx(ref).epsilon(1e-10));
  }

  TEST_CASE("training windows have zero residual at the unit coefficient") {
    const auto gram = motor_gram();
    const ResidualModel model(gram);
    for (const Eigen::Index j : {Eigen::Index{0}, Eigen::Index{50}, gram->columns() - 1}) {
      const Window w = gram->column(j);
      CHECK(std::abs(model.residual(Vec::Unit(gram->columns(), j), w)) <=
            1e-12 * model.self_kernel(w));
    }
  }

  TEST_CASE("residual gradient matches central differences") {
    const auto gram = motor_gram(80, 6);
    const ResidualModel model(gram);
    std::mt19937_64 rng(2);
    const Window w = gram->column(11);
    const Mat qu = perturb(w.u, rng, 0.3), qy = perturb(w.y, rng, 0.3);
    const Vec g = perturb(Vec::Unit(gram->columns(), 11), rng, 0.02);
    ResidualModel::Gradient grad;
    const double r = model.residual_grad(g, Window{qu, qy}, grad);
    CHECK(r == doctest::Approx(model.residual(g, Window{qu, qy})));

    const Vec fg = oracle::central_diff([&](const Vec& x) { return model.residual(x, Window{qu, qy}); }, g, 1e-6);
    CHECK((grad.g - fg).norm() <= 1e-6 * fg.norm());
    const Vec fu = oracle::central_diff(
        [&](const Vec& x) { return model.residual(g, Window{Eigen::Map<const Mat>(x.data(), 1, 6), qy}); },
        Eigen::Map<const Vec>(qu.data(), 6), 1e-6);
    CHECK((Eigen::Map<const Vec>(grad.u.data(), 6) - fu).norm() <= 1e-6 * fu.norm());
    const Vec fy = oracle::central_diff(
        [&](const Vec& x) { return model.residual(g, Window{qu, Eigen::Map<const Mat>(x.data(), 1, 6)}); },
        Eigen::Map<const Vec>(qy.data(), 6), 1e-6);
    CHECK((Eigen::Map<const Vec>(grad.y.data(), 6) - fy).norm() <= 1e-6 * fy.norm());
  }

  TEST_CASE("reduced value is the minimum over g") {
    const auto gram = motor_gram(80, 6);
    const ResidualModel model(gram);
    std::mt19937_64 rng(3);
    const Window w = gram->column(20);
    const Mat qu = perturb(w.u, rng, 0.3), qy = perturb(w.y, rng, 0.3);
    const Window q{qu, qy};
    const Vec c = model.cross_kernel(q);
    for (const double ridge : {1e-4, 1e-1}) {
      const Mat kr = gram->gram() + ridge * Mat::Identity(gram->columns(), gram->columns());
      const Vec g = kr.ldlt().solve(c);
      const double ref = model.residual(g, q) + ridge * g.squaredNorm();
      const auto red = model.reduced(q, ridge, 0, false);
      CHECK(red.value == doctest::Approx(ref).epsilon(1e-8));
      CHECK((red.g - g).norm() <= 1e-7 * g.norm());
      // Any other g does no better.
      const Vec g2 = perturb(g, rng, 1e-3);
      CHECK(model.residual(g2, q) + ridge * g2.squaredNorm() >= red.value);
    }
  }

  TEST_CASE("reduced gradient follows the envelope theorem") {
    const auto gram = motor_gram(80, 6);
    const ResidualModel model(gram);
    std::mt19937_64 rng(4);
    const Window w = gram->column(30);
    const Mat qu = perturb(w.u, rng, 0.3), qy = perturb(w.y, rng, 0.3);
    const double ridge = 1e-2;
    const auto red = model.reduced(Window{qu, qy}, ridge, 2, true);
    const Vec fy = oracle::central_diff(
        [&](const Vec& x) {
          return model.reduced(Window{qu, Eigen::Map<const Mat>(x.data(), 1, 6)}, ridge, 0, false).value;
        },
        Eigen::Map<const Vec>(qy.data(), 6), 1e-4);
    CHECK(red.grad_y.leftCols(2).isZero());
    const Vec an = Eigen::Map<const Vec>(red.grad_y.data(), 6);
    CHECK((an.tail(4) - fy.tail(4)).norm() <= 1e-5 * fy.tail(4).norm());
  }

  TEST_CASE("fixed part plus free positions equals the full evaluation") {
    const auto gram = motor_gram(80, 6);
    const ResidualModel model(gram);
    std::mt19937_64 rng(5);
    const Window w = gram->column(40);
    Mat qu = perturb(w.u, rng, 0.3), qy = perturb(w.y, rng, 0.3);
    const auto fixed = model.fixed_part(Window{qu, qy}, 4, 3);
    qu.rightCols(2) = perturb(qu.rightCols(2), rng, 0.5);
    qy.rightCols(3) = perturb(qy.rightCols(3), rng, 0.5);
    const auto a = model.reduced(Window{qu, qy}, 1e-3, fixed, true);
    const auto b = model.reduced(Window{qu, qy}, 1e-3, 0, true);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
    CHECK(a.self == doctest::Approx(b.self).epsilon(1e-12));
    CHECK((a.grad_u.rightCols(2) - b.grad_u.rightCols(2)).norm() <= 1e-8 * b.grad_u.norm());
    CHECK((a.grad_y.rightCols(3) - b.grad_y.rightCols(3)).norm() <= 1e-8 * b.grad_y.norm());
  }

  TEST_CASE("query shape is checked") {
    const auto gram = motor_gram(80, 6);
    const ResidualModel model(gram);
    const Mat u = Mat::Zero(1, 5), y = Mat::Zero(1, 6);
    CHECK_THROWS_AS(model.self_kernel(Window{u, y}), ArgumentError);
  }
}
