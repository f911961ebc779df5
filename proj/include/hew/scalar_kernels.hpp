#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hew {

// ---------------------------------------------------------------------------
// Discrete quadratic-descent envelope kernel and companions. These scalar
// maps are the substrate for every closed-form rate in the library.
// ---------------------------------------------------------------------------

// T_a(u) = u / (1 + a*u). Monotone nondecreasing in u, T_a(u) <= u,
// composes additively in a.
double t_a_apply(double a, double u);

// Envelope for z_{l+1} <= T_{a_l}(z_l) + b_l:
// returns T_{sum a_l}(z0) + sum b_l.
double telescope_envelope(double z0, std::span<const std::pair<double, double>> steps);

// Parameters of the recursion x_{t+1} <= x_t - a*x_t^2 + beta*x_t + delta
// with fixed-point level m.
struct QuadLinParams {
  double a = 0.0;      // quadratic descent coefficient, > 0
  double beta = 0.0;   // linear growth, >= 0
  double delta = 0.0;  // additive noise floor, >= 0
  double m = 0.0;      // fixed-point level, >= 0

  // a*m^2 - beta*m - delta >= 0 (the level absorbs growth and noise).
  bool super_ok() const { return a * m * m - beta * m - delta >= 0.0; }
  // 2*a*m <= 1 + beta (the recursion is monotone below the level).
  bool safe_ok() const { return 2.0 * a * m <= 1.0 + beta; }

  void validate() const;  // throws std::invalid_argument on bad fields
};

// Envelope m + 1/((x0-m)_+^{-1} + a*T); returns m exactly when x0 <= m
// (explicit infinite-reciprocal branch, no floating infinity arithmetic).
double quadlin_envelope(const QuadLinParams& params, double x0, long T);

// Envelope m + (1-a)^T (x0-m)_+ for x_{t+1} <= (1-a) x_t + delta,
// requires 0 < a <= 1 and m >= delta/a.
double linear_envelope(double a, double delta, double m, double x0, long T);

// Envelope a_l (1+beta)^l for x_l <= a_l + beta * sum_{s<l} x_s with
// nondecreasing a_l.
std::vector<double> cumulative_gronwall(std::span<const double> a_seq, double beta);

// ---------------------------------------------------------------------------
// Generator-flow families. Closed-form flows R_a(s) of ds/dt = -phi(s) for
// the three concrete generators: phi(s) = kappa*s^2, kappa*s^{1+p}, rho*s.
// ---------------------------------------------------------------------------

struct QuadraticFamily {
  double kappa = 1.0;
};
struct PowerLawFamily {
  double kappa = 1.0;
  double p = 1.0;
};
struct ExponentialFamily {
  double rho = 1.0;
};

using GeneratorFamily = std::variant<QuadraticFamily, PowerLawFamily, ExponentialFamily>;

void validate_family(const GeneratorFamily& family);
std::string family_name(const GeneratorFamily& family);

// Flow value R_a(s); satisfies the semigroup law R_{a+b} = R_a o R_b and
// 0 <= R_a(s) <= s.
double flow_apply(const GeneratorFamily& family, double a, double s);

// Contraction slope L_a(m) = sup_{r>0} (R_a(m+r) - R_a(m))/r, in [0,1].
double slope_modulus(const GeneratorFamily& family, double a, double m);

// One entry of the noisy recursion S_{t+1} <= R_{a_t}(S_t) + b_t S_t + d_t + eps_t.
struct NoisyStep {
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;
  double eps = 0.0;
};

using NoisySchedule = std::vector<NoisyStep>;

// Envelope m + (prod_t lambda_t) (S0-m)_+ where lambda_t = L_{a_t}(m) + b_t.
// Preconditions per entry: g_t(m) <= m and lambda_t in [0,1); violations
// raise an error naming the offending index.
double noisy_master_envelope(const GeneratorFamily& family, const NoisySchedule& schedule,
                             double m, double s0);

// chi(s) = integral_s^{s_ref} dxi / phi(xi), in closed form per family;
// satisfies chi(R_a(s)) = chi(s) + a.
double conjugacy_coordinate(const GeneratorFamily& family, double s, double s_ref);

}  // namespace hew
