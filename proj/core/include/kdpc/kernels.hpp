#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <variant>
#include <vector>

namespace kdpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;
using MatRef = Eigen::Ref<const Eigen::MatrixXd>;

namespace factor {

/// k(x,y) = x'y
struct Linear {
  bool operator==(const Linear&) const = default;
};

/// k(x,y) = (offset + x'y)^degree
struct Polynomial {
  int degree = 2;
  double offset = 1.0;
  bool operator==(const Polynomial&) const = default;
};

/// k(x,y) = exp(-|x-y|^2 / denominator)
struct Rbf {
  double denominator = 1.0;
  bool operator==(const Rbf&) const = default;
};

/// k(x,y) = exp(x'y)
struct Exponential {
  bool operator==(const Exponential&) const = default;
};

}  // namespace factor

using KernelFactor =
    std::variant<factor::Linear, factor::Polynomial, factor::Rbf, factor::Exponential>;

struct KernelTerm {
  double weight = 1.0;
  std::vector<KernelFactor> factors;
  bool operator==(const KernelTerm&) const = default;
};

/// Positive-weighted sum of products of base kernels.
///
/// The value of a term is weight * prod(factors); the kernel is the sum over
/// terms. Construction validates weights, denominators and degrees and throws
/// ArgumentError on violation. Instances are immutable.
class KernelSpec {
 public:
  KernelSpec() = default;
  explicit KernelSpec(std::vector<KernelTerm> terms);

  const std::vector<KernelTerm>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  /// True when the spec is exactly one unit-weight Linear factor.
  bool is_linear() const noexcept;

  static KernelSpec linear();
  static KernelSpec rbf(double denominator);

  bool operator==(const KernelSpec&) const = default;

 private:
  std::vector<KernelTerm> terms_;
};

/// Exponents of exp(x'y) above this bound raise NumericOverflowError.
inline constexpr double kMaxExponent = 700.0;

double eval(const KernelSpec& spec, const VecRef& x, const VecRef& y);

/// Gradient of k(x, y) with respect to y (product rule over factors).
Vec eval_grad_y(const KernelSpec& spec, const VecRef& x, const VecRef& y);

/// Accumulates scale * dk(x,y)/dy into `out` without allocating; returns k(x,y).
double eval_and_grad_y(const KernelSpec& spec, const VecRef& x, const VecRef& y,
                       double scale, Eigen::Ref<Vec> out);

namespace noise {

struct None {
  bool operator==(const None&) const = default;
};

/// Isotropic zero-mean Gaussian with per-coordinate standard deviation sigma.
struct Gaussian {
  double sigma = 0.0;
  bool operator==(const Gaussian&) const = default;
};

/// Equally weighted offset samples.
struct Empirical {
  std::vector<std::vector<double>> samples;
  bool operator==(const Empirical&) const = default;
};

}  // namespace noise

/// Distribution of the measurement noise on the data side of the kernel.
class NoiseModel {
 public:
  using Kind = std::variant<noise::None, noise::Gaussian, noise::Empirical>;

  NoiseModel() = default;
  explicit NoiseModel(Kind kind);

  static NoiseModel none() { return NoiseModel{}; }
  static NoiseModel gaussian(double sigma) { return NoiseModel{noise::Gaussian{sigma}}; }
  static NoiseModel empirical(std::vector<std::vector<double>> samples) {
    return NoiseModel{noise::Empirical{std::move(samples)}};
  }

  const Kind& kind() const noexcept { return kind_; }
  bool is_none() const noexcept { return std::holds_alternative<noise::None>(kind_); }

  bool operator==(const NoiseModel&) const = default;

 private:
  Kind kind_;
};

/// E[k(x_center + w, y)] over the noise w.
///
/// Gaussian noise has closed forms for Linear, Exponential, Polynomial of degree
/// <= 2 and products of Rbf factors; anything else throws
/// UnsupportedEmbeddingError. Empirical noise supports every spec.
double mean_embed(const KernelSpec& spec, const NoiseModel& noise, const VecRef& x_center,
                  const VecRef& y);

/// Gradient of mean_embed with respect to y.
Vec mean_embed_grad_y(const KernelSpec& spec, const NoiseModel& noise,
                      const VecRef& x_center, const VecRef& y);

/// True when mean_embed has a closed form (or is exact) for this pair.
bool embedding_supported(const KernelSpec& spec, const NoiseModel& noise) noexcept;

/// Replaces a Gaussian model by `count` deterministic samples of dimension
/// `dim`. Used when the closed form is unavailable.
NoiseModel empirical_fallback(const NoiseModel& noise, int dim, int count,
                              std::uint64_t seed);

/// A kernel together with the noise model applied to its data-side argument.
///
/// Unsupported Gaussian embeddings are resolved to an empirical sample set at
/// construction, so evaluation never throws UnsupportedEmbeddingError.
class KernelChannel {
 public:
  KernelChannel() = default;
  KernelChannel(KernelSpec spec, NoiseModel noise, int dim);

  const KernelSpec& spec() const noexcept { return spec_; }
  const NoiseModel& noise() const noexcept { return noise_; }

  /// k(data, query) with the data side embedded.
  double data_eval(const VecRef& data, const VecRef& query) const;
  /// As data_eval, accumulating scale * d/dquery into `grad`.
  double data_eval_grad(const VecRef& data, const VecRef& query, double scale,
                        Eigen::Ref<Vec> grad) const;

 private:
  KernelSpec spec_;
  NoiseModel noise_;
};

/// Experiment kernels.
namespace experiment {

/// 0.2 rbf(6) + exp + 0.01 rbf(6) exp
KernelSpec pendulum_input_kernel();
/// pendulum_input_kernel() + (1 + x'y)^2
KernelSpec pendulum_output_kernel();
/// 0.1 rbf(4) + rbf(4) exp, used for both motor channels.
KernelSpec motor_kernel();

}  // namespace experiment

}  // namespace kdpc
