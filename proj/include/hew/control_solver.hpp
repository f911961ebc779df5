#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hew/certificate.hpp"

namespace hew {

struct SolverConfig {
  double sweep_eps = -1.0;   // alternating stop; < 0 means 1e-10*(|J0|+1)
  double theta_tol = 1e-6;   // golden-section bracket width
  double qp_tol = 1e-8;      // Frank-Wolfe duality gap
  int qp_max_iters = 100000;
  int max_sweeps = 100;

  void validate() const;
};

struct KktResult {
  VectorXd w;
  double lambda = 0.0;
  bool used_fallback = false;  // some kappa_i <= 0, solved by the simplex QP instead
};

// Exact threshold solve of min_w -mu'w + (L/2) sum kappa_i w_i^2 over the
// simplex: w_i = (mu_i - lambda)_+ / (L kappa_i) with lambda fixing the sum
// to one; O(S log S) by sorting breakpoints.
KktResult kkt_threshold_weights(const VectorXd& mu, const VectorXd& kappa, double L,
                                const SolverConfig& config = {});

// Golden-section search on [lo, hi] to bracket width <= tol; returns the
// midpoint of the final bracket. Throws on a NaN objective, naming theta.
double amplitude_line_search(const std::function<double(double)>& slice, double lo, double hi,
                             double tol);

struct ControlPair {
  VectorXd w;
  VectorXd theta;
  double objective = 0.0;
  int sweeps = 0;
  std::vector<double> objective_trace;  // value after each sweep, nonincreasing
};

// Alternating block solver: exact KKT weight step, then per-node
// golden-section amplitude steps (ascending node order). Always returns the
// best feasible pair found.
ControlPair alternating_solve(const UpperState& state, std::span<const NodeSchedule> schedules,
                              double L, double R, const SolverConfig& config = {});

// Minimize psi(w) = <linear, D w> + (curvature/2) ||D w||^2 over the simplex
// face supported on `active`, by away-step Frank-Wolfe with exact line
// search. Columns of `endpoints` are per-node displacement vectors. When the
// objective is constant on the face (all active columns equal) returns the
// uniform vector on `active`. Zero entries off the active set.
VectorXd simplex_quadratic_minimize(const VectorXd& linear, const Eigen::MatrixXd& endpoints,
                                    double curvature, const std::vector<int>& active,
                                    const SolverConfig& config = {}, double* gap_out = nullptr);

// Shared Frank-Wolfe core over the simplex face `active` for
// q(w) = lin'w + 0.5 w'Mw given gradient and curvature callbacks.
VectorXd fw_simplex_qp(int n, const std::vector<int>& active,
                       const std::function<void(const VectorXd&, VectorXd&)>& grad,
                       const std::function<double(const VectorXd&)>& dir_curvature,
                       const SolverConfig& config, double* gap_out);

}  // namespace hew
