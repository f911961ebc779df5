#include "hew/control_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace hew {

void SolverConfig::validate() const {
  if (!(theta_tol > 0.0) || !(qp_tol > 0.0) || qp_max_iters < 1 || max_sweeps < 1)
    throw std::invalid_argument("SolverConfig: tolerances and iteration caps must be positive");
}

KktResult kkt_threshold_weights(const VectorXd& mu, const VectorXd& kappa, double L,
                                const SolverConfig& config) {
  const int S = static_cast<int>(mu.size());
  if (kappa.size() != S || S == 0) throw std::invalid_argument("kkt_threshold_weights: bad sizes");
  if (!(L > 0.0)) throw std::invalid_argument("kkt_threshold_weights: L must be positive");

  if ((kappa.array() <= 0.0).any()) {
    std::cerr << "[hew] warning: kkt_threshold_weights got kappa_i <= 0, "
                 "falling back to the simplex QP\n";
    std::vector<int> active(S);
    std::iota(active.begin(), active.end(), 0);
    auto grad = [&](const VectorXd& w, VectorXd& g) { g = -mu + L * kappa.cwiseProduct(w); };
    auto curv = [&](const VectorXd& dir) { return L * dir.cwiseProduct(dir).dot(kappa); };
    KktResult res;
    res.w = fw_simplex_qp(S, active, grad, curv, config, nullptr);
    res.used_fallback = true;
    // report the tightest lambda consistent with stationarity on the support
    res.lambda = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < S; ++i)
      if (res.w[i] > 1e-12) res.lambda = std::max(res.lambda, mu[i] - L * kappa[i] * res.w[i]);
    return res;
  }

  // h(lambda) = sum_i (mu_i - lambda)_+ / (L kappa_i) is piecewise linear and
  // strictly decreasing where positive; scan segments between sorted mu values.
  std::vector<int> order(S);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return mu[a] > mu[b]; });

  double S1 = 0.0;  // sum of mu_i/(L kappa_i) over the current active prefix
  double S2 = 0.0;  // sum of 1/(L kappa_i)
  double lambda = 0.0;
  int k = 0;
  while (k < S) {
    // group equal mu values so ties enter together
    int k_end = k;
    while (k_end < S && mu[order[k_end]] == mu[order[k]]) ++k_end;
    for (int t = k; t < k_end; ++t) {
      const int i = order[t];
      S1 += mu[i] / (L * kappa[i]);
      S2 += 1.0 / (L * kappa[i]);
    }
    lambda = (S1 - 1.0) / S2;
    const double seg_hi = mu[order[k]];
    const double seg_lo = (k_end < S) ? mu[order[k_end]] : -std::numeric_limits<double>::infinity();
    if (lambda <= seg_hi && lambda > seg_lo) break;
    k = k_end;
  }

  KktResult res;
  res.lambda = lambda;
  res.w = VectorXd::Zero(S);
  for (int i = 0; i < S; ++i) {
    const double num = mu[i] - lambda;
    if (num > 0.0) res.w[i] = num / (L * kappa[i]);
  }
  // renormalize away the last-bit rounding so downstream simplex checks hold
  res.w /= res.w.sum();
  return res;
}

double amplitude_line_search(const std::function<double(double)>& slice, double lo, double hi,
                             double tol) {
  if (!(lo <= hi)) throw std::invalid_argument("amplitude_line_search: empty interval");
  auto eval = [&](double t) {
    const double v = slice(t);
    if (std::isnan(v))
      throw std::runtime_error("amplitude_line_search: objective is NaN at theta = " +
                               std::to_string(t));
    return v;
  };
  const double inv_phi = 0.6180339887498948482;  // 1/golden ratio
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = eval(x1), f2 = eval(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = eval(x2);
    }
  }
  return 0.5 * (a + b);
}

ControlPair alternating_solve(const UpperState& state, std::span<const NodeSchedule> schedules,
                              double L, double R, const SolverConfig& config) {
  config.validate();
  const int S = static_cast<int>(schedules.size());
  if (S == 0) throw std::invalid_argument("alternating_solve: empty active set");

  ControlPair cp;
  cp.theta.resize(S);
  for (int i = 0; i < S; ++i)
    cp.theta[i] = 0.5 * (schedules[i].theta_lo + schedules[i].theta_hi);
  cp.w = VectorXd::Constant(S, 1.0 / S);

  std::vector<CertRow> rows(S);
  auto refresh_rows = [&] {
    for (int i = 0; i < S; ++i) rows[i] = node_coeffs(cp.theta[i], state, schedules[i], L, R);
  };
  auto objective = [&] {
    return objective_J(rows, std::span<const double>(cp.w.data(), S), state, L, R);
  };

  refresh_rows();
  double J = objective();
  const double eps = config.sweep_eps >= 0.0 ? config.sweep_eps : 1e-10 * (std::abs(J) + 1.0);

  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    const double J_prev = J;

    // exact weight block
    VectorXd mu(S), kappa(S);
    for (int i = 0; i < S; ++i) {
      mu[i] = rows[i].mu;
      kappa[i] = rows[i].kappa;
    }
    bool degenerate_kappa = (kappa.array() <= 0.0).all();
    if (degenerate_kappa) {
      cp.w = VectorXd::Constant(S, 1.0 / S);  // affine objective: uniform tie-break
    } else {
      cp.w = kkt_threshold_weights(mu, kappa, L, config).w;
    }
    {
      const double J_w = objective();
      if (J_w <= J) J = J_w;  // exact block minimum can only improve
    }

    // separable amplitude blocks, ascending node order
    for (int i = 0; i < S; ++i) {
      const double wi = cp.w[i];
      auto slice = [&](double theta) {
        const CertRow r = node_coeffs(theta, state, schedules[i], L, R);
        return -wi * r.mu + 0.5 * L * wi * wi * r.kappa;
      };
      const double current = slice(cp.theta[i]);
      const double cand =
          amplitude_line_search(slice, schedules[i].theta_lo, schedules[i].theta_hi,
                                config.theta_tol);
      if (slice(cand) < current) {
        cp.theta[i] = cand;
        rows[i] = node_coeffs(cand, state, schedules[i], L, R);
      }
    }
    J = objective();
    cp.sweeps = sweep + 1;
    cp.objective_trace.push_back(J);
    if (J_prev - J <= eps) break;
  }
  cp.objective = J;
  return cp;
}

VectorXd fw_simplex_qp(int n, const std::vector<int>& active,
                       const std::function<void(const VectorXd&, VectorXd&)>& grad,
                       const std::function<double(const VectorXd&)>& dir_curvature,
                       const SolverConfig& config, double* gap_out) {
  if (active.empty()) throw std::invalid_argument("fw_simplex_qp: empty active set");
  VectorXd w = VectorXd::Zero(n);
  for (int i : active) w[i] = 1.0 / static_cast<double>(active.size());
  VectorXd g(n), dir(n);
  double gap = 0.0;
  for (int it = 0; it < config.qp_max_iters; ++it) {
    grad(w, g);
    int fw = active[0], away = -1;
    for (int i : active) {
      if (g[i] < g[fw]) fw = i;
      if (w[i] > 1e-16 && (away < 0 || g[i] > g[away])) away = i;
    }
    gap = g.dot(w) - g[fw];  // <grad, w - e_fw>
    if (gap <= config.qp_tol) break;

    const double away_gain = g[away] - g.dot(w);
    double gamma_max;
    if (gap >= away_gain) {
      dir.setZero();
      dir[fw] = 1.0;
      dir -= w;
      gamma_max = 1.0;
    } else {
      dir = w;
      dir[away] -= 1.0;  // away direction w - e_away
      const double wa = w[away];
      gamma_max = wa / (1.0 - wa);
    }
    const double slope = g.dot(dir);
    if (slope >= 0.0) break;
    const double curv = dir_curvature(dir);
    double gamma = gamma_max;
    if (curv > 0.0) gamma = std::min(gamma_max, -slope / curv);
    if (gamma <= 0.0) break;
    w += gamma * dir;
    for (int i : active) w[i] = std::max(w[i], 0.0);
    w /= w.sum();
  }
  if (gap_out) *gap_out = gap;
  return w;
}

VectorXd simplex_quadratic_minimize(const VectorXd& linear, const Eigen::MatrixXd& endpoints,
                                    double curvature, const std::vector<int>& active,
                                    const SolverConfig& config, double* gap_out) {
  config.validate();
  if (active.empty()) throw std::invalid_argument("simplex_quadratic_minimize: empty active set");
  if (!(curvature > 0.0))
    throw std::invalid_argument("simplex_quadratic_minimize: curvature must be positive");
  const int n = static_cast<int>(endpoints.cols());

  if (active.size() == 1) {
    VectorXd w = VectorXd::Zero(n);
    w[active[0]] = 1.0;
    if (gap_out) *gap_out = 0.0;
    return w;
  }

  // constant-objective tie-break: all active columns equal => uniform
  double scale = 0.0;
  for (int i : active) scale = std::max(scale, endpoints.col(i).lpNorm<Eigen::Infinity>());
  bool all_equal = true;
  for (std::size_t k = 1; k < active.size() && all_equal; ++k)
    all_equal = (endpoints.col(active[k]) - endpoints.col(active[0])).lpNorm<Eigen::Infinity>() <=
                1e-14 * (1.0 + scale);
  if (all_equal) {
    VectorXd w = VectorXd::Zero(n);
    for (int i : active) w[i] = 1.0 / static_cast<double>(active.size());
    if (gap_out) *gap_out = 0.0;
    return w;
  }

  const VectorXd lin = endpoints.transpose() * linear;  // D'g
  auto grad = [&](const VectorXd& w, VectorXd& g) {
    g = lin + curvature * (endpoints.transpose() * (endpoints * w));
  };
  auto curv = [&](const VectorXd& dir) { return curvature * (endpoints * dir).squaredNorm(); };
  return fw_simplex_qp(n, active, grad, curv, config, gap_out);
}

}  // namespace hew
