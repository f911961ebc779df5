#include "hew/certificate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hew/scalar_kernels.hpp"

namespace hew {

void NodeSchedule::validate(bool certificate_mode) const {
  if (H < 1 || b < 1) throw std::invalid_argument("NodeSchedule: H and b must be >= 1");
  if (!(v2 >= 0.0)) throw std::invalid_argument("NodeSchedule: v2 must be nonnegative");
  if (!(theta_lo > 0.0) || !(theta_hi >= theta_lo))
    throw std::invalid_argument("NodeSchedule: need 0 < theta_lo <= theta_hi");
  if (certificate_mode && theta_hi > 1.0)
    throw std::invalid_argument("NodeSchedule: certificate mode requires theta_hi <= 1");
}

CertRow node_coeffs(double theta, const UpperState& state, const NodeSchedule& sched, double L,
                    double R) {
  if (!(theta >= sched.theta_lo && theta <= sched.theta_hi))
    throw std::domain_error("node_coeffs: theta outside [theta_lo, theta_hi]");
  if (!(L > 0.0) || !(R > 0.0)) throw std::invalid_argument("node_coeffs: L and R must be positive");
  if (!(state.U >= 0.0) || !(state.Q >= 0.0))
    throw std::invalid_argument("node_coeffs: upper state must be nonnegative");

  const double bar_f = 0.5 * L * R * R;
  const double u_sharp = state.u_sharp(bar_f);
  const double Hb = static_cast<double>(sched.H) * static_cast<double>(sched.b);
  const double e2t = std::exp(2.0 * theta);
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  const double t4 = t3 * theta;

  CertRow row;
  row.A = theta / (2.0 * L * R * R);
  row.s = u_sharp - t_a_apply(row.A, u_sharp);
  row.rho = 32.0 * e2t * t3 * state.U + (16.0 * theta + 64.0 * e2t * t3) / L * state.Q +
            8.0 * e2t * t3 * sched.v2 / (L * Hb);
  row.kappa = 16.0 * e2t * t4 / L * state.U + 32.0 * e2t * t4 / (L * L) * state.Q +
              (2.0 * t2 + 4.0 * e2t * t4) * sched.v2 / (L * L * Hb);
  row.mu = row.s - row.rho;
  return row;
}

double objective_J(std::span<const CertRow> rows, std::span<const double> w,
                   const UpperState& state, double L, double R) {
  if (rows.size() != w.size()) throw std::invalid_argument("objective_J: size mismatch");
  double sum = 0.0;
  for (double wi : w) {
    if (wi < -1e-9) throw std::invalid_argument("objective_J: negative weight");
    sum += wi;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("objective_J: weights off the simplex");
  const double bar_f = 0.5 * L * R * R;
  double J = state.u_sharp(bar_f);
  for (std::size_t i = 0; i < rows.size(); ++i)
    J += -w[i] * rows[i].mu + 0.5 * L * w[i] * w[i] * rows[i].kappa;
  return J;
}

TrackingCoeffs TrackingCoeffs::make(std::span<const NodeSchedule> schedules, double L,
                                    double theta_bar) {
  if (schedules.empty()) throw std::invalid_argument("TrackingCoeffs: no schedules");
  double worst = 0.0;
  for (const auto& s : schedules)
    worst = std::max(worst, s.v2 / (static_cast<double>(s.H) * static_cast<double>(s.b)));
  TrackingCoeffs tc;
  tc.A_chi = 6.0 * worst;
  tc.B_chi = 144.0 * L * theta_bar * theta_bar;
  tc.C_chi = 288.0 * theta_bar * theta_bar;
  return tc;
}

double TrackingCoeffs::cap(double chi0, double bar_f) const {
  if (!(C_chi < 1.0))
    throw std::invalid_argument("TrackingCoeffs: cap needs C_chi < 1 (288*theta_bar^2 < 1)");
  return std::max(chi0, (A_chi + B_chi * bar_f) / (1.0 - C_chi));
}

SurrogateState surrogate_step(const SurrogateState& state, double optimized_objective,
                              const TrackingCoeffs& tc, double bar_f) {
  if (!(tc.C_chi < 1.0))
    throw std::invalid_argument("surrogate_step: 288*theta_bar^2 < 1 violated (C_chi >= 1)");
  if (!(state.u <= bar_f * (1.0 + 1e-12)))
    throw std::invalid_argument("surrogate_step: u exceeds bar_f");
  if (!(state.chi >= 0.0)) throw std::invalid_argument("surrogate_step: chi must be nonnegative");
  SurrogateState next;
  next.u = std::min(bar_f, optimized_objective);
  next.chi = tc.A_chi + tc.B_chi * state.u + tc.C_chi * state.chi;
  return next;
}

UniformCoeffs UniformCoeffs::make(double vartheta, double L, double R, long n, long H, long b,
                                  double v2) {
  if (!(vartheta > 0.0) || !(L > 0.0) || !(R > 0.0) || n < 1 || H < 1 || b < 1 || !(v2 >= 0.0))
    throw std::invalid_argument("UniformCoeffs: invalid inputs");
  UniformCoeffs c;
  c.vartheta = vartheta;
  c.L = L;
  c.R = R;
  c.n = n;
  c.H = H;
  c.b = b;
  c.v2 = v2;
  const double t = vartheta;
  const double nn = static_cast<double>(n);
  const double Hb = static_cast<double>(H) * static_cast<double>(b);
  c.a_dir = t / (2.0 * L * R * R);
  c.beta_dir = 48.0 * t * t * t + 32.0 * t * t * t * t / nn;
  c.gamma_dir = 96.0 * t * t * t / L + 64.0 * t * t * t * t / (L * nn);
  c.delta_dir = (16.0 * t * t * t + 16.0 * t * t / nn) * v2 / (L * Hb);
  c.A_q = 6.0 * v2 / Hb;
  c.B_q = 144.0 * L * t * t;
  c.C_q = 288.0 * t * t;
  return c;
}

PLCoeffs pl_coeffs(const UniformCoeffs& uc, double mu_pl) {
  if (!(mu_pl > 0.0)) throw std::invalid_argument("pl_coeffs: mu must be positive");
  const double a = mu_pl * uc.vartheta / uc.L - uc.beta_dir;
  const double nu = 1.0 - uc.C_q;
  if (!(a > 0.0)) throw std::invalid_argument("pl_coeffs: condition a_PL > 0 failed");
  if (!(a < nu)) throw std::invalid_argument("pl_coeffs: condition a_PL < 1 - C_q failed");
  if (!(a * nu > uc.B_q * uc.gamma_dir))
    throw std::invalid_argument("pl_coeffs: condition a_PL*(1-C_q) > B_q*gamma_dir failed");
  const double disc = std::sqrt((nu - a) * (nu - a) + 4.0 * uc.B_q * uc.gamma_dir);
  PLCoeffs c;
  c.a_pl = a;
  c.rho_pl = 0.5 * (a + nu - disc);
  c.lambda_pl = 2.0 * uc.gamma_dir / (nu - a + disc);
  c.floor = (uc.delta_dir + c.lambda_pl * uc.A_q) / c.rho_pl;
  return c;
}

HOCoeffs HOCoeffs::make(const UniformCoeffs& uc, double H_sim, double M, double q0) {
  if (!(H_sim >= 0.0) || !(M >= 0.0) || !(q0 >= 0.0))
    throw std::invalid_argument("HOCoeffs: H_sim, M, q0 must be nonnegative");
  const double t = uc.vartheta;
  const double L = uc.L;
  const double bar_f = 0.5 * L * uc.R * uc.R;
  HOCoeffs c;
  c.K_ho = (H_sim + M * uc.R) * (H_sim + M * uc.R);
  c.a_ho = t / (2.0 * L * uc.R * uc.R);
  c.a_ho_lower = t / (2.0 * L * uc.R * uc.R * (1.0 + t / 4.0));
  if (!(uc.C_q < 1.0)) throw std::invalid_argument("HOCoeffs: 288*vartheta^2 < 1 violated");
  c.q_bar = std::max(q0, (uc.A_q + uc.B_q * bar_f) / (1.0 - uc.C_q));
  const double Hb = static_cast<double>(uc.H) * static_cast<double>(uc.b);
  c.beta_ho = (2.0 * t / L) * c.K_ho * (96.0 * t * t / L);
  c.delta_ho = (2.0 * t / L) * c.K_ho *
                   (32.0 * t * t * uc.v2 / (L * L * Hb) + 192.0 * t * t / (L * L) * c.q_bar) +
               t * t * uc.v2 / (2.0 * L * static_cast<double>(uc.n) * Hb);
  return c;
}

double ho_best_iterate_bound(const HOCoeffs& ho, double g0, long T) {
  if (T < 1) throw std::invalid_argument("ho_best_iterate_bound: T must be >= 1");
  if (!(g0 >= 0.0)) throw std::invalid_argument("ho_best_iterate_bound: g0 must be nonnegative");
  return ho.beta_ho / ho.a_ho_lower + std::sqrt(ho.delta_ho / ho.a_ho_lower) +
         std::sqrt(g0 / (ho.a_ho_lower * static_cast<double>(T)));
}

void check_postlocal_window(double vartheta, double Lambda, double L) {
  if (!(Lambda > L)) throw std::invalid_argument("post-local window: Lambda > L violated");
  if (!(Lambda <= 2.0 * L)) throw std::invalid_argument("post-local window: Lambda <= 2L violated");
  if (!(Lambda * vartheta <= 0.5 * L))
    throw std::invalid_argument("post-local window: Lambda*vartheta <= L/2 violated");
}

namespace {

// Positive root of A*m^2 - beta*m - d = 0, nudged up until the
// super-level inequality holds in floating point.
double positive_root_level(double A, double beta, double d) {
  double m = (beta + std::sqrt(beta * beta + 4.0 * A * d)) / (2.0 * A);
  for (int k = 0; k < 8 && A * m * m - beta * m - d < 0.0; ++k)
    m = std::nextafter(m, std::numeric_limits<double>::infinity());
  return m;
}

}  // namespace

double PostLocalHetCoeffs::V1(std::span<const NodeNoise> nodes, std::span<const double> a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    acc += a[i] * nodes[i].v2 / (static_cast<double>(nodes[i].H) * nodes[i].b);
  return acc;
}

double PostLocalHetCoeffs::V2(std::span<const NodeNoise> nodes, std::span<const double> a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    acc += a[i] * a[i] * nodes[i].v2 / (static_cast<double>(nodes[i].H) * nodes[i].b);
  return acc;
}

std::vector<double> PostLocalHetCoeffs::optimal_comparator(std::span<const NodeNoise> nodes) {
  std::vector<double> a(nodes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!(nodes[i].v2 > 0.0))
      throw std::invalid_argument("optimal_comparator: requires v_i^2 > 0 for every node");
    a[i] = static_cast<double>(nodes[i].H) * nodes[i].b / nodes[i].v2;
    total += a[i];
  }
  for (auto& ai : a) ai /= total;
  return a;
}

PostLocalHetCoeffs PostLocalHetCoeffs::make(double vartheta, double Lambda, double L, double R,
                                            std::span<const NodeNoise> nodes, double theta_bar,
                                            double Q0, std::span<const double> comparator) {
  check_postlocal_window(vartheta, Lambda, L);
  if (nodes.empty()) throw std::invalid_argument("PostLocalHetCoeffs: no nodes");
  std::vector<double> a_store;
  std::span<const double> a = comparator;
  if (a.empty()) {
    a_store = optimal_comparator(nodes);
    a = a_store;
  }
  if (a.size() != nodes.size())
    throw std::invalid_argument("PostLocalHetCoeffs: comparator size mismatch");

  const double t = vartheta;
  PostLocalHetCoeffs c;
  c.vartheta = vartheta;
  c.Lambda = Lambda;
  c.L = L;
  c.R = R;
  c.A_het = t / (2.0 * L * R * R);
  c.A_het_lower = t / (2.0 * L * R * R * (1.0 + t / 4.0));
  c.beta_het = 192.0 * t * t * t + 32.0 * (Lambda / L) * t * t * t * t;
  c.gamma_het = 1.0 / (2.0 * (Lambda - L)) + 39.0 * t / L + 64.0 * (Lambda / (L * L)) * t * t * t * t;
  c.delta_het = 64.0 * t * t * t / L * V1(nodes, a) + 16.0 * Lambda * t * t / (L * L) * V2(nodes, a);

  double worst = 0.0;
  for (const auto& nd : nodes)
    worst = std::max(worst, nd.v2 / (static_cast<double>(nd.H) * nd.b));
  c.A_chi = 6.0 * worst;
  c.B_chi = 144.0 * L * theta_bar * theta_bar;
  c.C_chi = 288.0 * theta_bar * theta_bar;
  if (!(c.C_chi < 1.0))
    throw std::invalid_argument("PostLocalHetCoeffs: C_chi < 1 violated (288*theta_bar^2 >= 1)");
  const double bar_f = 0.5 * L * R * R;
  c.Q_bar = std::max(Q0, (c.A_chi + c.B_chi * bar_f) / (1.0 - c.C_chi));
  c.d_het = c.gamma_het * c.Q_bar + c.delta_het;
  c.m_het = positive_root_level(c.A_het_lower, c.beta_het, c.d_het);
  if (!(2.0 * c.A_het_lower * c.m_het <= 1.0 + c.beta_het))
    throw std::invalid_argument("PostLocalHetCoeffs: safety condition 2*A*m <= 1 + beta failed");
  return c;
}

double het_rate(const PostLocalHetCoeffs& c, double U0, long T) {
  QuadLinParams p{c.A_het_lower, c.beta_het, c.d_het, c.m_het};
  return quadlin_envelope(p, U0, T);
}

PostLocalHomCoeffs PostLocalHomCoeffs::make(double vartheta, double Lambda, double L, double R,
                                            std::span<const NodeNoise> nodes) {
  check_postlocal_window(vartheta, Lambda, L);
  if (nodes.empty()) throw std::invalid_argument("PostLocalHomCoeffs: no nodes");
  const double t = vartheta;
  const double n = static_cast<double>(nodes.size());
  PostLocalHomCoeffs c;
  c.vartheta = vartheta;
  c.Lambda = Lambda;
  c.L = L;
  c.R = R;
  c.A_hom = t / (4.0 * L * R * R);
  c.A_hom_lower = t / (4.0 * L * R * R * (1.0 + t / 8.0));
  c.beta_hom = 16.0 * t * t * t + 16.0 * L * t * t / (Lambda - L);
  double sum = 0.0;
  for (const auto& nd : nodes) sum += nd.v2 / (static_cast<double>(nd.H) * nd.b);
  c.V1_bar = sum / n;
  c.V_u = sum / (n * n);
  c.delta_hom = (4.0 * t * t * t / L + 4.0 * t * t / (Lambda - L)) * c.V1_bar +
                (t / L + 1.0 / (Lambda - L)) * c.V_u;
  c.m_hom = positive_root_level(c.A_hom_lower, c.beta_hom, c.delta_hom);
  return c;
}

double PostLocalHomCoeffs::rho_hom(double mu_pl) const {
  return mu_pl * vartheta / (2.0 * L) - beta_hom;
}

double hom_rate(const PostLocalHomCoeffs& c, double g0, long T) {
  if (!(2.0 * c.A_hom_lower * c.m_hom <= 1.0 + c.beta_hom))
    throw std::invalid_argument("hom_rate: safety condition 2*A*m <= 1 + beta failed");
  QuadLinParams p{c.A_hom_lower, c.beta_hom, c.delta_hom, c.m_hom};
  return quadlin_envelope(p, g0, T);
}

double hom_pl_rate(const PostLocalHomCoeffs& c, double mu_pl, double g0, long T) {
  const double rho = c.rho_hom(mu_pl);
  if (!(rho > 0.0))
    throw std::invalid_argument("hom_pl_rate: rho_hom = mu*vartheta/(2L) - beta_hom <= 0");
  return linear_envelope(rho, c.delta_hom, c.delta_hom / rho, g0, T);
}

}  // namespace hew
