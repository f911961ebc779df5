#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hew/rng.hpp"

namespace hew {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Reference optimum and ball data: x_star, R, smoothness and optimal value
// used to evaluate gaps and to scale certificate quantities.
struct BallSpec {
  VectorXd x_star_ref;
  double R = 0.0;
  double L_hat = 0.0;
  double F_star_ref = 0.0;
  bool converged = true;  // false when the reference solve hit its iteration cap
};

// Convex sum-of-sums objective F = (1/n) sum_i F_i, F_i = (1/m_i) sum_j phi_ij.
class FiniteSumModel {
 public:
  virtual ~FiniteSumModel() = default;

  virtual int n_clients() const = 0;
  virtual int n_components(int client) const = 0;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;

  virtual double client_value(int client, const VectorXd& x) const = 0;
  virtual void component_gradient(int client, int j, const VectorXd& x, VectorXd& g) const = 0;

  // Mean gradient over a component subset of one client. The default loops
  // over component_gradient; models override with a vectorized path.
  virtual void batch_gradient(int client, std::span<const int> components, const VectorXd& x,
                              VectorXd& g) const;

  virtual double value(const VectorXd& x) const;
  virtual void client_gradient(int client, const VectorXd& x, VectorXd& g) const;
  virtual void full_gradient(const VectorXd& x, VectorXd& g) const;
};

// --- Synthetic quadratic model -------------------------------------------

// phi_ij(x) = 0.5 x'A_ij x - b_ij'x + c_ij with every A_ij symmetric PSD.
// Carries exact smoothness, optimum, and ball-supremum variance levels for
// verification runs.
class SyntheticQuadratic final : public FiniteSumModel {
 public:
  struct Options {
    int n_clients = 5;
    int components_per_client = 8;
    int dim = 10;
    double eig_min = 0.3;       // curvature floor of the mean matrix
    double eig_max = 2.0;       // spectral cap per component
    double heterogeneity = 0.5; // spread of client offsets
    std::uint64_t seed = 1;
  };

  static SyntheticQuadratic make_random(const Options& opt);

  SyntheticQuadratic(std::vector<std::vector<MatrixXd>> A, std::vector<std::vector<VectorXd>> b);

  int n_clients() const override { return static_cast<int>(A_.size()); }
  int n_components(int client) const override { return static_cast<int>(A_[client].size()); }
  int dim() const override { return dim_; }
  std::string name() const override { return "synthetic-quadratic"; }

  double client_value(int client, const VectorXd& x) const override;
  void component_gradient(int client, int j, const VectorXd& x, VectorXd& g) const override;
  void batch_gradient(int client, std::span<const int> components, const VectorXd& x,
                      VectorXd& g) const override;
  void client_gradient(int client, const VectorXd& x, VectorXd& g) const override;

  // Exact quantities.
  double exact_smoothness() const { return L_exact_; }
  const VectorXd& exact_x_star() const { return x_star_; }
  double exact_value_at_star() const { return f_star_; }
  // sup over the ball B(x_star, R) of the per-component gradient scatter
  // (1/m_i) sum_j ||grad phi_ij - grad F_i||^2, computed from spectral data.
  double exact_variance_sup(int client, double R) const;
  // Ball spec with exact radius ||x0 - x_star||.
  BallSpec exact_ball_spec(const VectorXd& x0) const;

 private:
  std::vector<std::vector<MatrixXd>> A_;
  std::vector<std::vector<VectorXd>> b_;
  int dim_ = 0;
  double L_exact_ = 0.0;
  VectorXd x_star_;
  double f_star_ = 0.0;
};

// --- Softmax linear model --------------------------------------------------

// Multinomial logistic regression with per-sample l2 term:
// phi_ij(W) = CE(x_j, y_j; W) + (l2/2)||W||^2, parameters d x C flattened.
class SoftmaxLinearModel final : public FiniteSumModel {
 public:
  SoftmaxLinearModel(std::shared_ptr<const RowMajorMatrixXd> features,
                     std::shared_ptr<const Eigen::VectorXi> labels, int n_classes, double l2_reg,
                     std::vector<std::vector<int>> client_rows);

  int n_clients() const override { return static_cast<int>(clients_.size()); }
  int n_components(int client) const override { return static_cast<int>(clients_[client].size()); }
  int dim() const override { return static_cast<int>(X_->cols()) * C_; }
  std::string name() const override { return "softmax-linear"; }
  int n_classes() const { return C_; }
  double l2_reg() const { return l2_; }
  int feature_dim() const { return static_cast<int>(X_->cols()); }
  const RowMajorMatrixXd& features() const { return *X_; }
  const Eigen::VectorXi& labels() const { return *y_; }
  const std::vector<int>& client_rows(int client) const { return clients_[client]; }

  double client_value(int client, const VectorXd& x) const override;
  void component_gradient(int client, int j, const VectorXd& x, VectorXd& g) const override;
  void batch_gradient(int client, std::span<const int> components, const VectorXd& x,
                      VectorXd& g) const override;
  void client_gradient(int client, const VectorXd& x, VectorXd& g) const override;
  void full_gradient(const VectorXd& x, VectorXd& g) const override;
  double value(const VectorXd& x) const override;

  // Accuracy of argmax predictions on an arbitrary row set.
  double accuracy(const RowMajorMatrixXd& X, const Eigen::VectorXi& y, const VectorXd& params) const;

  // Exact per-component smoothness constant max_r 0.5*||x_r||^2 + l2. The
  // power-iteration estimate certifies the mean objective only; component
  // gradients need this bound.
  double component_smoothness_bound() const;

 private:
  void rows_gradient(std::span<const int> rows, const VectorXd& x, VectorXd& g) const;
  double rows_value(std::span<const int> rows, const VectorXd& x) const;

  std::shared_ptr<const RowMajorMatrixXd> X_;
  std::shared_ptr<const Eigen::VectorXi> y_;
  int C_ = 0;
  double l2_ = 0.0;
  std::vector<std::vector<int>> clients_;
};

// --- Oracles and estimators -------------------------------------------------

// Uniform without-replacement minibatch gradient oracle with a counter-based
// stream keyed by (seed, client, round, step).
struct MinibatchOracle {
  const FiniteSumModel* model = nullptr;
  int client = 0;
  int batch = 0;
  std::uint64_t seed = 0;

  void gradient(long round, long step, const VectorXd& x, VectorXd& g) const;
};

// Smoothness estimate: exact for SyntheticQuadratic; for the softmax model
// 0.5*lambda_max(X'X/N) + l2 by power iteration (tol 1e-6, <= 500 iters).
double estimate_smoothness(const FiniteSumModel& model);

// Empirical per-component gradient variance at x_probe over k sampled
// components, inflated by 1.5. SyntheticQuadratic verification mode instead
// returns the exact ball supremum (needs ball_R > 0).
double estimate_variance_proxy(const FiniteSumModel& model, int client, const VectorXd& x_probe,
                               int k, double ball_R = 0.0);

// Centralized full-gradient descent with step 1/L_hat from x0 until
// ||grad|| <= tol (cap 1e6 iterations). Data models get R = 2*||x0 - x_star||;
// SyntheticQuadratic returns its exact ball spec.
BallSpec compute_reference_optimum(const FiniteSumModel& model, double tol, const VectorXd& x0);

}  // namespace hew
