#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hew/control_solver.hpp"
#include "hew/rng.hpp"
#include "hew/verify.hpp"

using namespace hew;

namespace {

double weight_objective(const VectorXd& mu, const VectorXd& kappa, double L, const VectorXd& w) {
  double J = 0.0;
  for (int i = 0; i < mu.size(); ++i) J += -w[i] * mu[i] + 0.5 * L * kappa[i] * w[i] * w[i];
  return J;
}

}  // namespace

TEST_CASE("kkt_threshold_weights closed forms") {
  {
    VectorXd mu(2), kappa(2);
    mu << 1.0, 1.0;
    kappa << 1.0, 1.0;
    auto r = kkt_threshold_weights(mu, kappa, 1.0);
    CHECK(r.w[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.w[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.lambda == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_FALSE(r.used_fallback);
  }
  {
    VectorXd mu(2), kappa(2);
    mu << 2.0, 1.0;
    kappa << 1.0, 1.0;
    auto r = kkt_threshold_weights(mu, kappa, 2.0);
    CHECK(r.lambda == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.w[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(r.w[1] == doctest::Approx(0.25).epsilon(1e-14));
  }
  {
    VectorXd mu(2), kappa(2);
    mu << 1.0, -5.0;
    kappa << 1.0, 1.0;
    auto r = kkt_threshold_weights(mu, kappa, 1.0);
    CHECK(r.w[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.w[1] == 0.0);
    CHECK(r.lambda <= 1.0);
    CHECK(mu[1] - r.lambda <= 0.0);  // node 2 inactive
  }
}

TEST_CASE("kkt matches the simplex grid oracle, stationarity residuals") {
  RngStream rng(2024);
  for (int rep = 0; rep < 120; ++rep) {
    const int S = 2 + static_cast<int>(rng.uniform_index(4));  // 2..5
    VectorXd mu(S), kappa(S);
    for (int i = 0; i < S; ++i) {
      mu[i] = rng.uniform(-2.0, 2.0);
      kappa[i] = rng.uniform(0.2, 1.0);
    }
    const double L = rng.uniform(0.5, 1.5);
    auto r = kkt_threshold_weights(mu, kappa, L);

    // feasibility, complementarity, stationarity
    CHECK(std::abs(r.w.sum() - 1.0) <= 1e-12);
    CHECK(r.w.minCoeff() >= 0.0);
    for (int i = 0; i < S; ++i) {
      const double station = L * kappa[i] * r.w[i] - mu[i] + r.lambda;
      CHECK(station >= -1e-10);
      if (r.w[i] > 1e-12) {
        CHECK(std::abs(station) <= 1e-10);
        CHECK(mu[i] > r.lambda);
      }
    }
    // the threshold map is strictly decreasing across the solved segment
    auto h_of = [&](double lam) {
      double acc = 0.0;
      for (int i = 0; i < S; ++i) acc += std::max(mu[i] - lam, 0.0) / (L * kappa[i]);
      return acc;
    };
    CHECK(h_of(r.lambda - 1e-6) > 1.0);
    CHECK(h_of(r.lambda + 1e-6) < 1.0);

    // grid oracle: literal dense grid for S <= 3, multilevel refinement above
    auto f = [&](const std::vector<double>& w) {
      double J = 0.0;
      for (int i = 0; i < S; ++i) J += -w[i] * mu[i] + 0.5 * L * kappa[i] * w[i] * w[i];
      return J;
    };
    const auto w_grid =
        (S <= 3) ? simplex_grid::dense(S, f, 1e-3) : simplex_grid::refine(S, f, 1e-3);
    double dw = 0.0;
    for (int i = 0; i < S; ++i) dw = std::max(dw, std::abs(r.w[i] - w_grid[i]));
    CHECK(dw <= 1e-3);
    std::vector<double> wk(r.w.data(), r.w.data() + S);
    CHECK(std::abs(f(wk) - f(w_grid)) <= 1e-6);
  }
}

TEST_CASE("kkt scale invariance of the support and weights") {
  RngStream rng(3031);
  for (int rep = 0; rep < 500; ++rep) {
    const int S = 2 + static_cast<int>(rng.uniform_index(4));
    VectorXd mu(S), kappa(S);
    for (int i = 0; i < S; ++i) {
      mu[i] = rng.uniform(-1.0, 2.0);
      kappa[i] = rng.uniform(0.1, 3.0);
    }
    const double L = rng.uniform(0.5, 2.0);
    const double c = rng.uniform(0.1, 10.0);
    auto base = kkt_threshold_weights(mu, kappa, L);
    auto scaled = kkt_threshold_weights((c * mu).eval(), (c * kappa).eval(), L);
    CHECK((base.w - scaled.w).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("kkt fallback on nonpositive kappa") {
  VectorXd mu(2), kappa(2);
  mu << 1.0, 2.0;
  kappa << 1.0, 0.0;
  auto r = kkt_threshold_weights(mu, kappa, 1.0);
  CHECK(r.used_fallback);
  // J = -w1 + 0.5 w1^2 - 2 w2 over the simplex is minimized at (0, 1)
  CHECK(r.w[0] <= 1e-6);
  CHECK(r.w[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("amplitude_line_search") {
  CHECK(amplitude_line_search([](double t) { return t; }, 0.01, 1.0, 1e-6) ==
        doctest::Approx(0.01).epsilon(1e-5));
  CHECK(amplitude_line_search([](double t) { return (t - 0.3) * (t - 0.3); }, 0.01, 1.0, 1e-6) ==
        doctest::Approx(0.3).epsilon(1e-5));
  CHECK_THROWS_WITH_AS(
      amplitude_line_search([](double) { return std::nan(""); }, 0.0, 1.0, 1e-6),
      doctest::Contains("theta"), std::runtime_error);

  // random certificate slices vs a 1e4-point scan
  RngStream rng(4243);
  for (int rep = 0; rep < 50; ++rep) {
    NodeSchedule sc;
    sc.H = 1 + static_cast<long>(rng.uniform_index(8));
    sc.b = 1 + static_cast<long>(rng.uniform_index(16));
    sc.v2 = rng.uniform(0.0, 1.0);
    const double L = rng.uniform(0.5, 2.0), R = rng.uniform(0.5, 2.0);
    UpperState st{rng.uniform(0.0, 0.5 * L * R * R), rng.uniform(0.0, 0.5)};
    const double wi = rng.uniform(0.05, 1.0);
    auto slice = [&](double theta) {
      const CertRow r = node_coeffs(theta, st, sc, L, R);
      return -wi * r.mu + 0.5 * L * wi * wi * r.kappa;
    };
    const double got = amplitude_line_search(slice, sc.theta_lo, sc.theta_hi, 1e-6);
    double best = 1e300, arg = sc.theta_lo;
    const double step = (sc.theta_hi - sc.theta_lo) / 10000.0;
    for (int k = 0; k <= 10000; ++k) {
      const double t = sc.theta_lo + k * step;
      const double v = slice(t);
      if (v < best) {
        best = v;
        arg = t;
      }
    }
    CHECK(std::abs(got - arg) <= step + 1e-6);
  }
}

TEST_CASE("alternating_solve: degenerate and symmetric instances") {
  const double L = 1.0, R = 2.0;
  UpperState st{1.5, 0.2};

  // single node
  std::vector<NodeSchedule> one{{2, 4, 0.3, 0.01, 1.0}};
  auto cp1 = alternating_solve(st, one, L, R);
  CHECK(cp1.w.size() == 1);
  CHECK(cp1.w[0] == doctest::Approx(1.0).epsilon(1e-12));

  // symmetric nodes: uniform weights, common theta
  std::vector<NodeSchedule> sym(4, NodeSchedule{4, 8, 0.5, 0.01, 1.0});
  auto cp = alternating_solve(st, sym, L, R);
  for (int i = 0; i < 4; ++i) {
    CHECK(cp.w[i] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(cp.theta[i] == doctest::Approx(cp.theta[0]).epsilon(1e-9));
  }
}

TEST_CASE("alternating_solve: monotone trace and benchmark domination") {
  RngStream rng(5050);
  for (int rep = 0; rep < 60; ++rep) {
    const int S = 3;
    const double L = rng.uniform(0.5, 2.0), R = rng.uniform(0.5, 2.0);
    UpperState st{rng.uniform(0.0, 0.5 * L * R * R), rng.uniform(0.0, 0.5)};
    std::vector<NodeSchedule> scheds(S);
    for (auto& sc : scheds) {
      sc.H = 1 + static_cast<long>(rng.uniform_index(8));
      sc.b = 1 + static_cast<long>(rng.uniform_index(16));
      sc.v2 = rng.uniform(0.0, 1.0);
      sc.theta_lo = 0.01;
      sc.theta_hi = 1.0;
    }
    auto cp = alternating_solve(st, scheds, L, R);
    for (std::size_t k = 1; k < cp.objective_trace.size(); ++k)
      CHECK(cp.objective_trace[k] <= cp.objective_trace[k - 1]);

    // benchmark: uniform weights, midpoint theta
    std::vector<CertRow> rows(S);
    std::vector<double> uni(S, 1.0 / S);
    for (int i = 0; i < S; ++i)
      rows[i] = node_coeffs(0.5 * (scheds[i].theta_lo + scheds[i].theta_hi), st, scheds[i], L, R);
    CHECK(cp.objective <= objective_J(rows, uni, st, L, R) + 1e-12);

    // random feasible pairs
    for (int draw = 0; draw < 100; ++draw) {
      std::vector<double> w(S);
      double sum = 0.0;
      for (auto& wi : w) sum += (wi = -std::log(1.0 - rng.uniform()));
      for (auto& wi : w) wi /= sum;
      for (int i = 0; i < S; ++i)
        rows[i] = node_coeffs(rng.uniform(scheds[i].theta_lo, scheds[i].theta_hi), st, scheds[i],
                              L, R);
      CHECK(cp.objective <= objective_J(rows, w, st, L, R) + 1e-12);
    }
  }
}

TEST_CASE("simplex_quadratic_minimize") {
  SolverConfig cfg;

  // one active node: indicator
  Eigen::MatrixXd D(3, 4);
  D.setRandom();
  VectorXd g = VectorXd::Ones(3);
  auto w1 = simplex_quadratic_minimize(g, D, 1.5, {2}, cfg);
  CHECK(w1[2] == 1.0);
  CHECK(w1.sum() == doctest::Approx(1.0).epsilon(1e-14));

  // identical columns: constant objective, uniform tie-break
  Eigen::MatrixXd Deq(3, 3);
  Deq.col(0) << 1.0, 2.0, 3.0;
  Deq.col(1) = Deq.col(0);
  Deq.col(2) = Deq.col(0);
  auto weq = simplex_quadratic_minimize(g, Deq, 2.0, {0, 1, 2}, cfg);
  for (int i = 0; i < 3; ++i) CHECK(weq[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  // grid oracle on small random instances, duality gap at termination
  RngStream rng(6060);
  for (int rep = 0; rep < 80; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_index(3));  // 2..4
    const int d = 1 + static_cast<int>(rng.uniform_index(3));  // 1..3
    Eigen::MatrixXd E(d, n);
    VectorXd lin(d);
    for (int k = 0; k < d; ++k) {
      lin[k] = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < n; ++i) E(k, i) = rng.uniform(-1.0, 1.0);
    }
    const double curv = rng.uniform(0.5, 2.0);
    std::vector<int> active(n);
    std::iota(active.begin(), active.end(), 0);
    double gap = 0.0;
    auto w = simplex_quadratic_minimize(lin, E, curv, active, cfg, &gap);
    CHECK(gap <= cfg.qp_tol);
    auto f = [&](const std::vector<double>& wv) {
      VectorXd dvec = VectorXd::Zero(d);
      for (int i = 0; i < n; ++i) dvec += wv[i] * E.col(i);
      return lin.dot(dvec) + 0.5 * curv * dvec.squaredNorm();
    };
    auto w_grid = (n <= 3) ? simplex_grid::dense(n, f, 1e-3) : simplex_grid::refine(n, f, 1e-3);
    std::vector<double> wv(w.data(), w.data() + n);
    CHECK(f(wv) <= f(w_grid) + 1e-6);
  }

  // rank-deficient endpoints still converge
  Eigen::MatrixXd rank1(3, 4);
  for (int i = 0; i < 4; ++i) rank1.col(i) = (i + 1.0) * Eigen::Vector3d(1.0, 0.5, -0.2);
  double gap = 0.0;
  auto wr = simplex_quadratic_minimize(Eigen::Vector3d(0.3, -0.7, 0.1), rank1, 1.0, {0, 1, 2, 3},
                                       cfg, &gap);
  CHECK(gap <= cfg.qp_tol);
  CHECK(std::abs(wr.sum() - 1.0) <= 1e-12);
}
