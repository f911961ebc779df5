#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace hew {

// --- machine-readable verification reports ----------------------------------

struct CheckResult {
  std::string name;
  double tolerance = 0.0;
  double observed = 0.0;
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  std::string criterion;  // one-line description
  bool pass = false;
  std::vector<CheckResult> checks;
  std::string note;
  double seconds = 0.0;
};

// Named property suites; "all" runs every gating suite.
std::vector<std::string> verify_suite_names();
SuiteReport run_verify_suite(const std::string& name);
std::string report_to_json(const std::vector<SuiteReport>& reports);

// --- simplex grid-search oracle ----------------------------------------------

// Dense simplex grid search at step h. With `center`/`radius` set, scans only
// the portion of the grid within the given infinity-ball (used by the
// multilevel refinement below).
namespace simplex_grid {

using Objective = std::function<double(const std::vector<double>&)>;

inline void scan(int i, int S, double rem, std::vector<double>& w, double h, const Objective& f,
                 double& best, std::vector<double>& argbest, const std::vector<double>* center,
                 double radius) {
  if (i == S - 1) {
    w[i] = rem;
    if (center && std::abs(rem - (*center)[i]) > radius) return;
    const double v = f(w);
    if (v < best) {
      best = v;
      argbest = w;
    }
    return;
  }
  const long steps = std::lround(rem / h);
  long k_lo = 0, k_hi = steps;
  if (center) {
    k_lo = std::max(0L, std::lround(((*center)[i] - radius) / h));
    k_hi = std::min(steps, std::lround(((*center)[i] + radius) / h));
  }
  for (long k = k_lo; k <= k_hi; ++k) {
    w[i] = k * h;
    scan(i + 1, S, rem - k * h, w, h, f, best, argbest, center, radius);
  }
}

// Full dense grid at step h (feasible for S <= 3 at h = 1e-3).
inline std::vector<double> dense(int S, const Objective& f, double h) {
  std::vector<double> w(S), argbest(S);
  double best = std::numeric_limits<double>::infinity();
  scan(0, S, 1.0, w, h, f, best, argbest, nullptr, 0.0);
  return argbest;
}

// Multilevel refinement to resolution final_h. For convex objectives this
// reproduces the dense-grid argmin (validated against `dense` at S <= 3)
// while staying tractable at S = 4, 5.
inline std::vector<double> refine(int S, const Objective& f, double final_h) {
  std::vector<double> w(S), best_w(S);
  double best = std::numeric_limits<double>::infinity();
  double h = 0.05;
  scan(0, S, 1.0, w, h, f, best, best_w, nullptr, 0.0);
  while (h > final_h * 1.0001) {
    const double h_next = std::max(final_h, h / 5.0);
    const std::vector<double> center = best_w;
    best = std::numeric_limits<double>::infinity();
    scan(0, S, 1.0, w, h_next, f, best, best_w, &center, 5.0 * h);
    h = h_next;
  }
  return best_w;
}

}  // namespace simplex_grid

}  // namespace hew
