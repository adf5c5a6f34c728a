#include "kdpc/kernels.hpp"

#include "kdpc/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace kdpc {

namespace {

// Every supported factor has a y-gradient of the form a*x + b*y.
struct FactorValue {
  double value;
  double a;
  double b;
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void overflow(int term, double exponent) {
  throw NumericOverflowError("kernel term " + std::to_string(term) +
                                 ": exponential factor overflow (exponent " +
                                 std::to_string(exponent) + ")",
                             term);
}

double int_pow(double base, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= base;
  return r;
}

// Value and gradient coefficients of weight * prod(factors). Rbf and
// exponential factors share one exponent; polynomial factors enter through
// the product rule.
FactorValue eval_term(const KernelTerm& t, double dot, double dist2, int index) {
  double expo = 0.0, ea = 0.0, eb = 0.0;
  bool has_exp = false;
  for (const auto& f : t.factors) {
    if (const auto* r = std::get_if<factor::Rbf>(&f)) {
      expo -= dist2 / r->denominator;
      ea += 2.0 / r->denominator;
      eb -= 2.0 / r->denominator;
      has_exp = true;
    } else if (std::holds_alternative<factor::Exponential>(f)) {
      if (dot > kMaxExponent) overflow(index, dot);
      expo += dot;
      ea += 1.0;
      has_exp = true;
    }
  }
  if (expo > kMaxExponent) overflow(index, expo);
  double p = has_exp ? std::exp(expo) : 1.0;
  double a = p * ea, b = p * eb;
  for (const auto& f : t.factors) {
    double v = 0.0, fa = 0.0;
    if (std::holds_alternative<factor::Linear>(f)) {
      v = dot;
      fa = 1.0;
    } else if (const auto* q = std::get_if<factor::Polynomial>(&f)) {
      const double base = q->offset + dot;
      const double lower = int_pow(base, q->degree - 1);
      v = lower * base;
      fa = q->degree * lower;
    } else {
      continue;
    }
    a = a * v + p * fa;
    b = b * v;
    p *= v;
  }
  if (!std::isfinite(p)) {
    throw NumericOverflowError("kernel term " + std::to_string(index) + " is not finite", index);
  }
  return {t.weight * p, t.weight * a, t.weight * b};
}

void check_dims(const VecRef& x, const VecRef& y) {
  if (x.size() != y.size()) {
    throw ArgumentError("kernel arguments differ in dimension: " + std::to_string(x.size()) +
                        " vs " + std::to_string(y.size()));
  }
}

// Closed-form Gaussian embedding of a single term, if one exists.
bool gaussian_term(const KernelTerm& t, double sigma, const VecRef& x, const VecRef& y,
                   int index, FactorValue* out) {
  const double s2 = sigma * sigma;
  bool all_rbf = !t.factors.empty();
  double inv_d = 0.0;
  for (const auto& f : t.factors) {
    if (const auto* r = std::get_if<factor::Rbf>(&f)) {
      inv_d += 1.0 / r->denominator;
    } else {
      all_rbf = false;
    }
  }
  if (all_rbf) {
    if (out == nullptr) return true;
    const double d = 1.0 / inv_d;
    const double spread = d + 2.0 * s2;
    const double scale = std::pow(d / spread, 0.5 * static_cast<double>(x.size()));
    const double v = scale * std::exp(-(x - y).squaredNorm() / spread);
    const double g = 2.0 * v / spread;
    *out = {t.weight * v, t.weight * g, -t.weight * g};
    return true;
  }
  if (t.factors.size() != 1) return false;

  const KernelFactor& f = t.factors.front();
  if (std::holds_alternative<factor::Linear>(f)) {
    if (out) *out = {t.weight * x.dot(y), t.weight, 0.0};
    return true;
  }
  if (std::holds_alternative<factor::Exponential>(f)) {
    if (out) {
      const double e = x.dot(y) + 0.5 * s2 * y.squaredNorm();
      if (e > kMaxExponent) overflow(index, e);
      const double v = t.weight * std::exp(e);
      *out = {v, v, v * s2};
    }
    return true;
  }
  if (const auto* p = std::get_if<factor::Polynomial>(&f); p && p->degree <= 2) {
    if (out) {
      const double base = p->offset + x.dot(y);
      if (p->degree == 1) {
        *out = {t.weight * base, t.weight, 0.0};
      } else {
        *out = {t.weight * (base * base + s2 * y.squaredNorm()), t.weight * 2.0 * base,
                t.weight * 2.0 * s2};
      }
    }
    return true;
  }
  return false;
}

const std::vector<double>& check_sample(const std::vector<double>& s, Eigen::Index dim) {
  if (static_cast<Eigen::Index>(s.size()) != dim) {
    throw ArgumentError("empirical noise sample has dimension " + std::to_string(s.size()) +
                        ", expected " + std::to_string(dim));
  }
  return s;
}

// Shared implementation of mean_embed and its gradient.
double embed(const KernelSpec& spec, const NoiseModel& noise, const VecRef& x, const VecRef& y,
             double scale, Vec* grad) {
  check_dims(x, y);
  return std::visit(
      overloaded{
          [&](const noise::None&) {
            return grad ? eval_and_grad_y(spec, x, y, scale, *grad) : eval(spec, x, y);
          },
          [&](const noise::Gaussian& g) {
            if (g.sigma == 0.0) {
              return grad ? eval_and_grad_y(spec, x, y, scale, *grad) : eval(spec, x, y);
            }
            double total = 0.0;
            int index = 0;
            for (const auto& t : spec.terms()) {
              FactorValue fv{};
              if (!gaussian_term(t, g.sigma, x, y, index, &fv)) {
                throw UnsupportedEmbeddingError(
                    "kernel term " + std::to_string(index) +
                    " has no closed-form Gaussian mean embedding; use empirical noise");
              }
              total += fv.value;
              if (grad) *grad += scale * (fv.a * x + fv.b * y);
              ++index;
            }
            return total;
          },
          [&](const noise::Empirical& e) {
            const double w = 1.0 / static_cast<double>(e.samples.size());
            double total = 0.0;
            Vec shifted(x.size());
            for (const auto& s : e.samples) {
              shifted = x + Eigen::Map<const Vec>(check_sample(s, x.size()).data(), x.size());
              total += grad ? eval_and_grad_y(spec, shifted, y, scale * w, *grad)
                            : eval(spec, shifted, y);
            }
            return total * w;
          },
      },
      noise.kind());
}

}  // namespace

KernelSpec::KernelSpec(std::vector<KernelTerm> terms) : terms_(std::move(terms)) {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    const std::string where = "kernel term " + std::to_string(i);
    if (!(t.weight > 0.0) || !std::isfinite(t.weight)) {
      throw ArgumentError(where + ": weight must be positive");
    }
    if (t.factors.empty()) throw ArgumentError(where + ": needs at least one factor");
    for (const auto& f : t.factors) {
      if (const auto* r = std::get_if<factor::Rbf>(&f); r && !(r->denominator > 0.0)) {
        throw ArgumentError(where + ": rbf denominator must be positive");
      }
      if (const auto* p = std::get_if<factor::Polynomial>(&f)) {
        if (p->degree < 1) throw ArgumentError(where + ": polynomial degree must be >= 1");
        if (!(p->offset >= 0.0)) throw ArgumentError(where + ": polynomial offset must be >= 0");
      }
    }
  }
}

bool KernelSpec::is_linear() const noexcept {
  return terms_.size() == 1 && terms_[0].weight == 1.0 && terms_[0].factors.size() == 1 &&
         std::holds_alternative<factor::Linear>(terms_[0].factors[0]);
}

KernelSpec KernelSpec::linear() { return KernelSpec({{1.0, {factor::Linear{}}}}); }

KernelSpec KernelSpec::rbf(double denominator) {
  return KernelSpec({{1.0, {factor::Rbf{denominator}}}});
}

double eval(const KernelSpec& spec, const VecRef& x, const VecRef& y) {
  check_dims(x, y);
  const double dot = x.dot(y), dist2 = (x - y).squaredNorm();
  double total = 0.0;
  int index = 0;
  for (const auto& t : spec.terms()) total += eval_term(t, dot, dist2, index++).value;
  return total;
}

double eval_and_grad_y(const KernelSpec& spec, const VecRef& x, const VecRef& y, double scale,
                       Eigen::Ref<Vec> out) {
  check_dims(x, y);
  if (out.size() != y.size()) throw ArgumentError("gradient buffer has wrong dimension");
  const double dot = x.dot(y), dist2 = (x - y).squaredNorm();
  double total = 0.0, a = 0.0, b = 0.0;
  int index = 0;
  for (const auto& t : spec.terms()) {
    const FactorValue fv = eval_term(t, dot, dist2, index++);
    total += fv.value;
    a += fv.a;
    b += fv.b;
  }
  out += (scale * a) * x + (scale * b) * y;
  return total;
}

Vec eval_grad_y(const KernelSpec& spec, const VecRef& x, const VecRef& y) {
  Vec g = Vec::Zero(y.size());
  eval_and_grad_y(spec, x, y, 1.0, g);
  return g;
}

NoiseModel::NoiseModel(Kind kind) : kind_(std::move(kind)) {
  if (const auto* g = std::get_if<noise::Gaussian>(&kind_); g && !(g->sigma >= 0.0)) {
    throw ArgumentError("gaussian noise sigma must be >= 0");
  }
  if (const auto* e = std::get_if<noise::Empirical>(&kind_)) {
    if (e->samples.empty()) throw ArgumentError("empirical noise needs at least one sample");
  }
}

double mean_embed(const KernelSpec& spec, const NoiseModel& noise, const VecRef& x_center,
                  const VecRef& y) {
  return embed(spec, noise, x_center, y, 1.0, nullptr);
}

Vec mean_embed_grad_y(const KernelSpec& spec, const NoiseModel& noise, const VecRef& x_center,
                      const VecRef& y) {
  Vec g = Vec::Zero(y.size());
  embed(spec, noise, x_center, y, 1.0, &g);
  return g;
}

bool embedding_supported(const KernelSpec& spec, const NoiseModel& noise) noexcept {
  const auto* g = std::get_if<noise::Gaussian>(&noise.kind());
  if (g == nullptr || g->sigma == 0.0) return true;
  const Vec zero = Vec::Zero(1);
  for (const auto& t : spec.terms()) {
    if (!gaussian_term(t, g->sigma, zero, zero, 0, nullptr)) return false;
  }
  return true;
}

NoiseModel empirical_fallback(const NoiseModel& noise, int dim, int count, std::uint64_t seed) {
  const auto* g = std::get_if<noise::Gaussian>(&noise.kind());
  if (g == nullptr) return noise;
  if (dim < 1 || count < 1) throw ArgumentError("empirical fallback needs dim, count >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, g->sigma);
  std::vector<std::vector<double>> samples;
  samples.reserve(static_cast<std::size_t>(count) * 2);
  // Antithetic pairs keep the sample mean exactly zero.
  for (int i = 0; i < count; ++i) {
    std::vector<double> s(static_cast<std::size_t>(dim));
    for (auto& v : s) v = normal(rng);
    std::vector<double> neg(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) neg[k] = -s[k];
    samples.push_back(std::move(s));
    samples.push_back(std::move(neg));
  }
  return NoiseModel::empirical(std::move(samples));
}

KernelChannel::KernelChannel(KernelSpec spec, NoiseModel noise, int dim)
    : spec_(std::move(spec)), noise_(std::move(noise)) {
  if (const auto* e = std::get_if<noise::Empirical>(&noise_.kind())) {
    for (const auto& s : e->samples) check_sample(s, dim);
  }
  if (!embedding_supported(spec_, noise_)) {
    noise_ = empirical_fallback(noise_, dim, 128, 0x6b64'7063'0000'0001ULL);
  }
}

double KernelChannel::data_eval(const VecRef& data, const VecRef& query) const {
  if (noise_.is_none()) return eval(spec_, data, query);
  return embed(spec_, noise_, data, query, 1.0, nullptr);
}

double KernelChannel::data_eval_grad(const VecRef& data, const VecRef& query, double scale,
                                     Eigen::Ref<Vec> grad) const {
  if (noise_.is_none()) return eval_and_grad_y(spec_, data, query, scale, grad);
  Vec g = Vec::Zero(query.size());
  const double v = embed(spec_, noise_, data, query, scale, &g);
  grad += g;
  return v;
}

namespace experiment {

KernelSpec pendulum_input_kernel() {
  return KernelSpec({
      {0.2, {factor::Rbf{6.0}}},
      {1.0, {factor::Exponential{}}},
      {0.01, {factor::Rbf{6.0}, factor::Exponential{}}},
  });
}

KernelSpec pendulum_output_kernel() {
  auto terms = pendulum_input_kernel().terms();
  terms.push_back({1.0, {factor::Polynomial{2, 1.0}}});
  return KernelSpec(std::move(terms));
}

KernelSpec motor_kernel() {
  return KernelSpec({
      {0.1, {factor::Rbf{4.0}}},
      {1.0, {factor::Rbf{4.0}, factor::Exponential{}}},
  });
}

}  // namespace experiment

}  // namespace kdpc
