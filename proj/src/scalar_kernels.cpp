#include "hew/scalar_kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hew {

namespace {

void require_nonneg(double x, const char* what) {
  if (!(x >= 0.0)) throw std::domain_error(std::string(what) + " must be nonnegative");
}

}  // namespace

double t_a_apply(double a, double u) {
  require_nonneg(a, "t_a_apply: a");
  require_nonneg(u, "t_a_apply: u");
  return u / (1.0 + a * u);
}

double telescope_envelope(double z0, std::span<const std::pair<double, double>> steps) {
  require_nonneg(z0, "telescope_envelope: z0");
  double a_sum = 0.0;
  double b_sum = 0.0;
  for (const auto& [a, b] : steps) {
    require_nonneg(a, "telescope_envelope: a_l");
    require_nonneg(b, "telescope_envelope: b_l");
    a_sum += a;
    b_sum += b;
  }
  return t_a_apply(a_sum, z0) + b_sum;
}

void QuadLinParams::validate() const {
  if (!(a > 0.0)) throw std::invalid_argument("QuadLinParams: a must be positive");
  if (!(beta >= 0.0) || !(delta >= 0.0) || !(m >= 0.0))
    throw std::invalid_argument("QuadLinParams: beta, delta, m must be nonnegative");
}

double quadlin_envelope(const QuadLinParams& params, double x0, long T) {
  params.validate();
  require_nonneg(x0, "quadlin_envelope: x0");
  if (T < 0) throw std::domain_error("quadlin_envelope: T must be nonnegative");
  if (!params.super_ok())
    throw std::invalid_argument("quadlin_envelope: a*m^2 - beta*m - delta >= 0 violated");
  if (!params.safe_ok())
    throw std::invalid_argument("quadlin_envelope: 2*a*m <= 1 + beta violated");
  const double excess = x0 - params.m;
  if (excess <= 0.0) return params.m;  // 1/infinity = 0 branch
  return params.m + 1.0 / (1.0 / excess + params.a * static_cast<double>(T));
}

double linear_envelope(double a, double delta, double m, double x0, long T) {
  if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("linear_envelope: need 0 < a <= 1");
  require_nonneg(delta, "linear_envelope: delta");
  require_nonneg(x0, "linear_envelope: x0");
  if (T < 0) throw std::domain_error("linear_envelope: T must be nonnegative");
  if (!(m >= delta / a)) throw std::invalid_argument("linear_envelope: m >= delta/a violated");
  const double excess = x0 > m ? x0 - m : 0.0;
  return m + std::pow(1.0 - a, static_cast<double>(T)) * excess;
}

std::vector<double> cumulative_gronwall(std::span<const double> a_seq, double beta) {
  require_nonneg(beta, "cumulative_gronwall: beta");
  std::vector<double> out(a_seq.size());
  double growth = 1.0;
  for (std::size_t l = 0; l < a_seq.size(); ++l) {
    require_nonneg(a_seq[l], "cumulative_gronwall: a_l");
    if (l > 0 && a_seq[l] < a_seq[l - 1])
      throw std::domain_error("cumulative_gronwall: a_seq must be nondecreasing");
    out[l] = a_seq[l] * growth;
    growth *= 1.0 + beta;
  }
  return out;
}

void validate_family(const GeneratorFamily& family) {
  std::visit(
      [](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, QuadraticFamily>) {
          if (!(f.kappa > 0.0)) throw std::invalid_argument("QuadraticFamily: kappa must be positive");
        } else if constexpr (std::is_same_v<F, PowerLawFamily>) {
          if (!(f.kappa > 0.0) || !(f.p > 0.0))
            throw std::invalid_argument("PowerLawFamily: kappa and p must be positive");
        } else {
          if (!(f.rho > 0.0)) throw std::invalid_argument("ExponentialFamily: rho must be positive");
        }
      },
      family);
}

std::string family_name(const GeneratorFamily& family) {
  return std::visit(
      [](const auto& f) -> std::string {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, QuadraticFamily>) return "quadratic";
        else if constexpr (std::is_same_v<F, PowerLawFamily>) return "power-law";
        else return "exponential";
      },
      family);
}

double flow_apply(const GeneratorFamily& family, double a, double s) {
  validate_family(family);
  require_nonneg(a, "flow_apply: a");
  require_nonneg(s, "flow_apply: s");
  return std::visit(
      [a, s](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, QuadraticFamily>) {
          return s / (1.0 + f.kappa * a * s);
        } else if constexpr (std::is_same_v<F, PowerLawFamily>) {
          if (s == 0.0) return 0.0;
          return std::pow(std::pow(s, -f.p) + f.kappa * f.p * a, -1.0 / f.p);
        } else {
          return std::exp(-f.rho * a) * s;
        }
      },
      family);
}

double slope_modulus(const GeneratorFamily& family, double a, double m) {
  validate_family(family);
  require_nonneg(a, "slope_modulus: a");
  require_nonneg(m, "slope_modulus: m");
  return std::visit(
      [a, m](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, QuadraticFamily>) {
          if (m == 0.0) return 1.0;
          const double den = 1.0 + f.kappa * a * m;
          return 1.0 / (den * den);
        } else if constexpr (std::is_same_v<F, PowerLawFamily>) {
          if (m == 0.0) return 1.0;
          return std::pow(1.0 + f.kappa * f.p * a * std::pow(m, f.p), -1.0 - 1.0 / f.p);
        } else {
          return std::exp(-f.rho * a);
        }
      },
      family);
}

double noisy_master_envelope(const GeneratorFamily& family, const NoisySchedule& schedule,
                             double m, double s0) {
  validate_family(family);
  require_nonneg(m, "noisy_master_envelope: m");
  require_nonneg(s0, "noisy_master_envelope: s0");
  // Fully noiseless schedule at zero floor: the flow over the accumulated
  // time applies directly and needs no slope contraction.
  if (m == 0.0) {
    bool noiseless = true;
    double a_total = 0.0;
    for (const auto& e : schedule) {
      noiseless = noiseless && e.b == 0.0 && e.d == 0.0 && e.eps == 0.0 && e.a >= 0.0;
      a_total += e.a;
    }
    if (noiseless) return flow_apply(family, a_total, s0);
  }
  double product = 1.0;
  for (std::size_t t = 0; t < schedule.size(); ++t) {
    const NoisyStep& e = schedule[t];
    if (!(e.a >= 0.0 && e.b >= 0.0 && e.d >= 0.0 && e.eps >= 0.0))
      throw std::domain_error("noisy_master_envelope: negative entry at index " + std::to_string(t));
    const double g_m = flow_apply(family, e.a, m) + e.b * m + e.d + e.eps;
    if (g_m > m)
      throw std::invalid_argument("noisy_master_envelope: floor g_t(m) <= m violated at index " +
                                  std::to_string(t));
    const double lambda = slope_modulus(family, e.a, m) + e.b;
    if (!(lambda >= 0.0 && lambda < 1.0))
      throw std::invalid_argument("noisy_master_envelope: lambda_t in [0,1) violated at index " +
                                  std::to_string(t));
    product *= lambda;
  }
  const double excess = s0 > m ? s0 - m : 0.0;
  return m + product * excess;
}

double conjugacy_coordinate(const GeneratorFamily& family, double s, double s_ref) {
  validate_family(family);
  if (!(s > 0.0) || !(s_ref > 0.0))
    throw std::domain_error("conjugacy_coordinate: s and s_ref must be positive");
  return std::visit(
      [s, s_ref](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, QuadraticFamily>) {
          return (1.0 / s - 1.0 / s_ref) / f.kappa;
        } else if constexpr (std::is_same_v<F, PowerLawFamily>) {
          return (std::pow(s, -f.p) - std::pow(s_ref, -f.p)) / (f.kappa * f.p);
        } else {
          return (std::log(s_ref) - std::log(s)) / f.rho;
        }
      },
      family);
}

}  // namespace hew
