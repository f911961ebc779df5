#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hew {

using Eigen::VectorXd;

// Theorem-level upper state: U bounds the objective gap, Q bounds the worst
// per-node control-variate tracking error.
struct UpperState {
  double U = 0.0;
  double Q = 0.0;

  double u_sharp(double bar_f) const { return U < bar_f ? U : bar_f; }
};

// Per-node round schedule and certificate bounds.
struct NodeSchedule {
  long H = 1;            // local horizon
  long b = 1;            // minibatch size
  double v2 = 0.0;       // variance proxy (upper bound on the true level)
  double theta_lo = 0.01;
  double theta_hi = 1.0;

  void validate(bool certificate_mode) const;
};

// One node's certificate row: descent gain s, risk rho, curvature kappa,
// net gain mu = s - rho, and the envelope clock A = theta/(2LR^2).
struct CertRow {
  double A = 0.0;
  double s = 0.0;
  double rho = 0.0;
  double kappa = 0.0;
  double mu = 0.0;
};

CertRow node_coeffs(double theta, const UpperState& state, const NodeSchedule& sched, double L,
                    double R);

// Certificate objective J(w) = U_sharp - sum_i w_i mu_i + (L/2) sum_i w_i^2 kappa_i
// over the active-set simplex.
double objective_J(std::span<const CertRow> rows, std::span<const double> w,
                   const UpperState& state, double L, double R);

// Tracking recursion coefficients: chi' = A_chi + B_chi*u + C_chi*chi.
struct TrackingCoeffs {
  double A_chi = 0.0;  // 6 * max_i v_i^2/(H_i b_i)
  double B_chi = 0.0;  // 144 L theta_bar^2
  double C_chi = 0.0;  // 288 theta_bar^2

  static TrackingCoeffs make(std::span<const NodeSchedule> schedules, double L, double theta_bar);
  // max{chi0, (A+B*bar_f)/(1-C)}; requires C_chi < 1.
  double cap(double chi0, double bar_f) const;
};

// One step of the deterministic surrogate system:
// u' = min(bar_f, J_opt), chi' by the tracking recursion.
struct SurrogateState {
  double u = 0.0;
  double chi = 0.0;
};

SurrogateState surrogate_step(const SurrogateState& state, double optimized_objective,
                              const TrackingCoeffs& tc, double bar_f);

// --- Uniform-controller branch ----------------------------------------------

struct UniformCoeffs {
  double vartheta = 0.0, L = 0.0, R = 0.0;
  long n = 0, H = 0, b = 0;
  double v2 = 0.0;
  double a_dir = 0.0, beta_dir = 0.0, gamma_dir = 0.0, delta_dir = 0.0;
  double A_q = 0.0, B_q = 0.0, C_q = 0.0;

  static UniformCoeffs make(double vartheta, double L, double R, long n, long H, long b, double v2);
};

struct PLCoeffs {
  double a_pl = 0.0;
  double rho_pl = 0.0;
  double lambda_pl = 0.0;
  double floor = 0.0;  // (delta_dir + lambda*A_q)/rho
};

// Requires a_pl > 0, a_pl < 1 - C_q, a_pl(1-C_q) > B_q*gamma_dir;
// throws std::invalid_argument naming the violated condition.
PLCoeffs pl_coeffs(const UniformCoeffs& uc, double mu_pl);

struct HOCoeffs {
  double K_ho = 0.0;
  double a_ho = 0.0;
  double a_ho_lower = 0.0;
  double beta_ho = 0.0;
  double delta_ho = 0.0;
  double q_bar = 0.0;

  static HOCoeffs make(const UniformCoeffs& uc, double H_sim, double M, double q0);
};

// Best-iterate bound beta/a + sqrt(delta/a) + sqrt(g0/(a T)).
double ho_best_iterate_bound(const HOCoeffs& ho, double g0, long T);

// --- Post-local coefficient systems -------------------------------------------

struct NodeNoise {
  long H = 1;
  long b = 1;
  double v2 = 0.0;
};

// Heterogeneous corrected post-local controller coefficients and closed rate.
struct PostLocalHetCoeffs {
  double vartheta = 0.0, Lambda = 0.0, L = 0.0, R = 0.0;
  double A_het = 0.0, A_het_lower = 0.0;
  double beta_het = 0.0, gamma_het = 0.0, delta_het = 0.0;
  double A_chi = 0.0, B_chi = 0.0, C_chi = 0.0;
  double Q_bar = 0.0;
  double d_het = 0.0;  // gamma*Q_bar + delta
  double m_het = 0.0;

  // comparator: explicit simplex weights, or empty to use the noise-optimal
  // comparator a_i ~ H_i b_i / v_i^2 (requires all v_i^2 > 0).
  static PostLocalHetCoeffs make(double vartheta, double Lambda, double L, double R,
                                 std::span<const NodeNoise> nodes, double theta_bar, double Q0,
                                 std::span<const double> comparator = {});
  static double V1(std::span<const NodeNoise> nodes, std::span<const double> a);
  static double V2(std::span<const NodeNoise> nodes, std::span<const double> a);
  static std::vector<double> optimal_comparator(std::span<const NodeNoise> nodes);
};

double het_rate(const PostLocalHetCoeffs& c, double U0, long T);

// Homogeneous no-control-variate post-local controller coefficients and rates.
struct PostLocalHomCoeffs {
  double vartheta = 0.0, Lambda = 0.0, L = 0.0, R = 0.0;
  double A_hom = 0.0, A_hom_lower = 0.0;
  double beta_hom = 0.0, delta_hom = 0.0;
  double V1_bar = 0.0, V_u = 0.0;
  double m_hom = 0.0;

  static PostLocalHomCoeffs make(double vartheta, double Lambda, double L, double R,
                                 std::span<const NodeNoise> nodes);
  double rho_hom(double mu_pl) const;  // mu*vartheta/(2L) - beta_hom
};

double hom_rate(const PostLocalHomCoeffs& c, double g0, long T);
double hom_pl_rate(const PostLocalHomCoeffs& c, double mu_pl, double g0, long T);

// Shared validity window for the post-local branches: L < Lambda <= 2L and
// Lambda*vartheta <= L/2. Throws std::invalid_argument naming the failure.
void check_postlocal_window(double vartheta, double Lambda, double L);

}  // namespace hew
