#include "kdpc/plants.hpp"

#include "kdpc/errors.hpp"
#include "kdpc/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace kdpc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Vec pendulum_rhs(const plant::Pendulum& p, const Vec& x, double u) {
  Vec dx(2);
  dx(0) = x(1);
  dx(1) = -2.0 * p.g / p.l * std::sin(x(0)) - p.mu * x(1) * x(1) * x(1) +
          std::abs(std::cos(x(0))) * u / p.l;
  return dx;
}

Vec motor_rhs(const plant::BilinearMotor& m, const Vec& x, double u) {
  Vec dx(2);
  dx(0) = -m.Ra / m.La * x(0) + m.km / m.La * x(1) * u + m.ua / m.La;
  dx(1) = -m.B / m.J * x(1) + m.km / m.J * x(0) * u - m.tau / m.J;
  return dx;
}

template <class Rhs>
Vec rk4(Rhs&& f, Vec x, double dt, int substeps) {
  const double h = dt / substeps;
  for (int s = 0; s < substeps; ++s) {
    const Vec k1 = f(x);
    const Vec k2 = f(x + 0.5 * h * k1);
    const Vec k3 = f(x + 0.5 * h * k2);
    const Vec k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

}  // namespace

Eigen::Index PlantModel::state_dim() const {
  return std::visit(overloaded{[](const plant::Lti& s) { return s.A.rows(); },
                               [](const auto&) { return Eigen::Index{2}; }},
                    kind);
}

Eigen::Index PlantModel::input_dim() const {
  return std::visit(overloaded{[](const plant::Lti& s) { return s.B.cols(); },
                               [](const auto&) { return Eigen::Index{1}; }},
                    kind);
}

Eigen::Index PlantModel::output_dim() const {
  return std::visit(overloaded{[](const plant::Lti& s) { return s.C.rows(); },
                               [](const auto&) { return Eigen::Index{1}; }},
                    kind);
}

void PlantModel::validate() const {
  if (!(dt > 0.0)) throw ArgumentError("plant dt must be positive");
  if (substeps < 1) throw ArgumentError("plant substeps must be >= 1");
  std::visit(overloaded{
                 [](const plant::Pendulum& p) {
                   if (!(p.g > 0.0 && p.l > 0.0 && p.mu >= 0.0)) {
                     throw ArgumentError("pendulum needs g > 0, l > 0, mu >= 0");
                   }
                 },
                 [](const plant::BilinearMotor& m) {
                   if (!(m.La > 0.0 && m.Ra > 0.0 && m.J > 0.0 && m.B >= 0.0)) {
                     throw ArgumentError("motor needs La, Ra, J > 0 and B >= 0");
                   }
                 },
                 [](const plant::Lti& s) {
                   const auto nx = s.A.rows();
                   if (nx < 1 || s.A.cols() != nx || s.B.rows() != nx || s.C.cols() != nx ||
                       s.D.rows() != s.C.rows() || s.D.cols() != s.B.cols() || s.B.cols() < 1 ||
                       s.C.rows() < 1) {
                     throw ArgumentError("inconsistent LTI matrix dimensions");
                   }
                 },
             },
             kind);
}

PlantModel pendulum_plant(double dt, int substeps) { return {plant::Pendulum{}, dt, substeps}; }

PlantModel motor_plant(double dt, int substeps) { return {plant::BilinearMotor{}, dt, substeps}; }

PlantModel lti_plant(plant::Lti sys, double dt) { return {std::move(sys), dt, 1}; }

Vec plant_output(const PlantModel& plant, const Vec& x, const Vec& u) {
  return std::visit(overloaded{
                        [&](const plant::Pendulum&) { return Vec(Vec::Constant(1, x(0))); },
                        [&](const plant::BilinearMotor&) { return Vec(Vec::Constant(1, x(1))); },
                        [&](const plant::Lti& s) { return Vec(s.C * x + s.D * u); },
                    },
                    plant.kind);
}

StepResult step(const PlantModel& plant, const Vec& x, const Vec& u) {
  if (x.size() != plant.state_dim() || u.size() != plant.input_dim()) {
    throw ArgumentError("step: state or input has wrong dimension");
  }
  if (!x.allFinite() || !u.allFinite()) throw DivergenceError("step: non-finite state or input", 0);
  StepResult r;
  r.y = plant_output(plant, x, u);
  r.x_next = std::visit(
      overloaded{
          [&](const plant::Pendulum& p) {
            return rk4([&](const Vec& s) { return pendulum_rhs(p, s, u(0)); }, x, plant.dt,
                       plant.substeps);
          },
          [&](const plant::BilinearMotor& m) {
            return rk4([&](const Vec& s) { return motor_rhs(m, s, u(0)); }, x, plant.dt,
                       plant.substeps);
          },
          [&](const plant::Lti& s) { return Vec(s.A * x + s.B * u); },
      },
      plant.kind);
  if (!r.x_next.allFinite()) throw DivergenceError("plant state diverged", 0);
  return r;
}

Vec motor_equilibrium(const plant::BilinearMotor& m, double u) {
  Eigen::Matrix2d a;
  a << -m.Ra / m.La, m.km / m.La * u, m.km / m.J * u, -m.B / m.J;
  const Eigen::Vector2d b(-m.ua / m.La, m.tau / m.J);
  return a.fullPivLu().solve(b);
}

Vec default_initial_state(const PlantModel& plant) {
  return std::visit(overloaded{
                        [](const plant::Pendulum&) { return Vec(Vec::Zero(2)); },
                        [](const plant::BilinearMotor& m) { return motor_equilibrium(m, 0.0); },
                        [](const plant::Lti& s) { return Vec(Vec::Zero(s.A.rows())); },
                    },
                    plant.kind);
}

void ExcitationSpec::validate() const {
  if (length < 1) throw ArgumentError("excitation length must be >= 1");
  std::visit(overloaded{
                 [](const excitation::UniformRandom& e) {
                   if (!(e.lo < e.hi)) throw ArgumentError("uniform excitation needs lo < hi");
                 },
                 [](const excitation::DriftingGaussian& e) {
                   if (!(e.sigma > 0.0)) throw ArgumentError("gaussian excitation needs sigma > 0");
                 },
                 [](const excitation::Prbs& e) {
                   if (e.levels.empty()) throw ArgumentError("prbs excitation needs levels");
                 },
                 [](const excitation::WhiteGaussian& e) {
                   if (!(e.sigma > 0.0)) throw ArgumentError("gaussian excitation needs sigma > 0");
                 },
             },
             kind);
}

Mat excitation_signal(const ExcitationSpec& spec, Eigen::Index n_u) {
  spec.validate();
  auto rng = make_stream(spec.seed, "excitation");
  const Eigen::Index T = spec.length;
  Mat u(n_u, T);
  std::visit(overloaded{
                 [&](const excitation::UniformRandom& e) {
                   std::uniform_real_distribution<double> d(e.lo, e.hi);
                   for (Eigen::Index k = 0; k < T; ++k)
                     for (Eigen::Index i = 0; i < n_u; ++i) u(i, k) = d(rng);
                 },
                 [&](const excitation::DriftingGaussian& e) {
                   std::normal_distribution<double> d(0.0, e.sigma);
                   for (Eigen::Index k = 0; k < T; ++k) {
                     const double frac = T > 1 ? static_cast<double>(k) / static_cast<double>(T - 1) : 0.0;
                     const double mu = e.mu_start + (e.mu_end - e.mu_start) * frac;
                     for (Eigen::Index i = 0; i < n_u; ++i) u(i, k) = mu + d(rng);
                   }
                 },
                 [&](const excitation::Prbs& e) {
                   std::uniform_int_distribution<std::size_t> d(0, e.levels.size() - 1);
                   for (Eigen::Index k = 0; k < T; ++k)
                     for (Eigen::Index i = 0; i < n_u; ++i) u(i, k) = e.levels[d(rng)];
                 },
                 [&](const excitation::WhiteGaussian& e) {
                   std::normal_distribution<double> d(0.0, e.sigma);
                   for (Eigen::Index k = 0; k < T; ++k)
                     for (Eigen::Index i = 0; i < n_u; ++i) u(i, k) = d(rng);
                 },
             },
             spec.kind);
  return u;
}

Mat simulate(const PlantModel& plant, const Vec& x0, const Mat& inputs, Vec* x_final) {
  plant.validate();
  if (inputs.rows() != plant.input_dim()) throw ArgumentError("simulate: input dimension mismatch");
  if (x0.size() != plant.state_dim()) throw ArgumentError("simulate: state dimension mismatch");
  Mat y(plant.output_dim(), inputs.cols());
  Vec x = x0;
  for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
    try {
      auto r = step(plant, x, inputs.col(k));
      y.col(k) = r.y;
      x = std::move(r.x_next);
    } catch (const DivergenceError& e) {
      throw DivergenceError("plant diverged at sample " + std::to_string(k), k);
    }
  }
  if (x_final) *x_final = x;
  return y;
}

TrajectoryData generate(const PlantModel& plant, const Vec& x0, const ExcitationSpec& spec,
                        double output_noise, std::uint64_t noise_seed) {
  if (output_noise < 0.0) throw ArgumentError("output noise std must be >= 0");
  const Mat u = excitation_signal(spec, plant.input_dim());
  Mat y = simulate(plant, x0, u);
  if (output_noise > 0.0) {
    auto rng = make_stream(noise_seed, "measurement-noise");
    std::normal_distribution<double> d(0.0, output_noise);
    for (Eigen::Index k = 0; k < y.cols(); ++k)
      for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, k) += d(rng);
  }
  return TrajectoryData(u, std::move(y), plant.dt);
}

}  // namespace kdpc
