#include "hew/models.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace hew {

// --- FiniteSumModel defaults -------------------------------------------------

void FiniteSumModel::batch_gradient(int client, std::span<const int> components, const VectorXd& x,
                                    VectorXd& g) const {
  if (components.empty()) throw std::invalid_argument("batch_gradient: empty component set");
  VectorXd tmp(dim());
  g.setZero(dim());
  for (int j : components) {
    component_gradient(client, j, x, tmp);
    g += tmp;
  }
  g /= static_cast<double>(components.size());
}

double FiniteSumModel::value(const VectorXd& x) const {
  double acc = 0.0;
  for (int i = 0; i < n_clients(); ++i) acc += client_value(i, x);
  return acc / n_clients();
}

void FiniteSumModel::client_gradient(int client, const VectorXd& x, VectorXd& g) const {
  std::vector<int> all(static_cast<std::size_t>(n_components(client)));
  std::iota(all.begin(), all.end(), 0);
  batch_gradient(client, all, x, g);
}

void FiniteSumModel::full_gradient(const VectorXd& x, VectorXd& g) const {
  VectorXd tmp(dim());
  g.setZero(dim());
  for (int i = 0; i < n_clients(); ++i) {
    client_gradient(i, x, tmp);
    g += tmp;
  }
  g /= static_cast<double>(n_clients());
}

// --- SyntheticQuadratic ------------------------------------------------------

SyntheticQuadratic SyntheticQuadratic::make_random(const Options& opt) {
  RngStream rng(opt.seed, 0x5159);
  const int d = opt.dim;
  std::vector<std::vector<MatrixXd>> A(opt.n_clients);
  std::vector<std::vector<VectorXd>> b(opt.n_clients);
  for (int i = 0; i < opt.n_clients; ++i) {
    VectorXd client_shift(d);
    for (int k = 0; k < d; ++k) client_shift[k] = opt.heterogeneity * rng.normal();
    for (int j = 0; j < opt.components_per_client; ++j) {
      MatrixXd G(d, d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) G(r, c) = rng.normal();
      MatrixXd S = G * G.transpose();
      const double top = S.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
      S *= (opt.eig_max - opt.eig_min) / std::max(top, 1e-12);
      S += opt.eig_min * MatrixXd::Identity(d, d);
      VectorXd bj(d);
      for (int k = 0; k < d; ++k) bj[k] = rng.normal() + client_shift[k];
      A[i].push_back(0.5 * (S + S.transpose()));
      b[i].push_back(bj);
    }
  }
  return SyntheticQuadratic(std::move(A), std::move(b));
}

SyntheticQuadratic::SyntheticQuadratic(std::vector<std::vector<MatrixXd>> A,
                                       std::vector<std::vector<VectorXd>> b)
    : A_(std::move(A)), b_(std::move(b)) {
  if (A_.empty() || A_[0].empty()) throw std::invalid_argument("SyntheticQuadratic: empty data");
  dim_ = static_cast<int>(A_[0][0].rows());
  const int n = static_cast<int>(A_.size());
  MatrixXd A_bar = MatrixXd::Zero(dim_, dim_);
  VectorXd b_bar = VectorXd::Zero(dim_);
  L_exact_ = 0.0;
  for (int i = 0; i < n; ++i) {
    const int m = static_cast<int>(A_[i].size());
    for (int j = 0; j < m; ++j) {
      A_bar += A_[i][j] / (static_cast<double>(n) * m);
      b_bar += b_[i][j] / (static_cast<double>(n) * m);
      const double top = A_[i][j].selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
      L_exact_ = std::max(L_exact_, top);
    }
  }
  x_star_ = A_bar.ldlt().solve(b_bar);
  f_star_ = value(x_star_);
}

double SyntheticQuadratic::client_value(int client, const VectorXd& x) const {
  const auto& As = A_[client];
  const auto& bs = b_[client];
  double acc = 0.0;
  for (std::size_t j = 0; j < As.size(); ++j)
    acc += 0.5 * x.dot(As[j] * x) - bs[j].dot(x);
  return acc / static_cast<double>(As.size());
}

void SyntheticQuadratic::component_gradient(int client, int j, const VectorXd& x,
                                            VectorXd& g) const {
  g = A_[client][j] * x - b_[client][j];
}

void SyntheticQuadratic::batch_gradient(int client, std::span<const int> components,
                                        const VectorXd& x, VectorXd& g) const {
  if (components.empty()) throw std::invalid_argument("batch_gradient: empty component set");
  g.setZero(dim_);
  for (int j : components) g.noalias() += A_[client][j] * x - b_[client][j];
  g /= static_cast<double>(components.size());
}

void SyntheticQuadratic::client_gradient(int client, const VectorXd& x, VectorXd& g) const {
  const int m = n_components(client);
  g.setZero(dim_);
  for (int j = 0; j < m; ++j) g.noalias() += A_[client][j] * x - b_[client][j];
  g /= static_cast<double>(m);
}

double SyntheticQuadratic::exact_variance_sup(int client, double R) const {
  if (!(R > 0.0)) throw std::invalid_argument("exact_variance_sup: R must be positive");
  const int m = n_components(client);
  MatrixXd A_bar = MatrixXd::Zero(dim_, dim_);
  VectorXd b_bar = VectorXd::Zero(dim_);
  for (int j = 0; j < m; ++j) {
    A_bar += A_[client][j] / m;
    b_bar += b_[client][j] / m;
  }
  // scatter(u) = u'Mu + 2g'u + c0 over ||u|| <= R, u = x - x_star
  MatrixXd M = MatrixXd::Zero(dim_, dim_);
  VectorXd g = VectorXd::Zero(dim_);
  double c0 = 0.0;
  for (int j = 0; j < m; ++j) {
    const MatrixXd D = A_[client][j] - A_bar;
    const VectorXd c = D * x_star_ - (b_[client][j] - b_bar);
    M += D.transpose() * D / m;
    g += D.transpose() * c / m;
    c0 += c.squaredNorm() / m;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
  const VectorXd lam = es.eigenvalues();
  const VectorXd gh = es.eigenvectors().transpose() * g;
  const double lam_max = lam.maxCoeff();
  // boundary maximizer: z_k = gh_k / (sigma - lam_k), sigma >= lam_max
  auto norm2_at = [&](double sigma) {
    double acc = 0.0;
    for (int k = 0; k < dim_; ++k) {
      const double dk = sigma - lam[k];
      if (dk <= 0.0) return std::numeric_limits<double>::infinity();
      acc += gh[k] * gh[k] / (dk * dk);
    }
    return acc;
  };
  const double R2 = R * R;
  double lo = lam_max, hi = lam_max + g.norm() / R + 1e-12;
  VectorXd z(dim_);
  if (norm2_at(lam_max + 1e-14 * (1.0 + std::abs(lam_max))) <= R2) {
    // hard case: fill the top eigenspace with the spare norm
    double used = 0.0;
    int top = 0;
    for (int k = 0; k < dim_; ++k) {
      const double dk = lam_max - lam[k];
      if (dk > 1e-12 * (1.0 + std::abs(lam_max))) {
        z[k] = gh[k] / dk;
        used += z[k] * z[k];
      } else {
        z[k] = 0.0;
        top = k;
      }
    }
    z[top] = std::sqrt(std::max(R2 - used, 0.0));
  } else {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (norm2_at(mid) > R2 ? lo : hi) = mid;
    }
    const double sigma = 0.5 * (lo + hi);
    for (int k = 0; k < dim_; ++k) z[k] = gh[k] / (sigma - lam[k]);
  }
  double val = c0;
  for (int k = 0; k < dim_; ++k) val += lam[k] * z[k] * z[k] + 2.0 * gh[k] * z[k];
  return std::max(val, 0.0);
}

BallSpec SyntheticQuadratic::exact_ball_spec(const VectorXd& x0) const {
  BallSpec spec;
  spec.x_star_ref = x_star_;
  spec.R = (x0 - x_star_).norm();
  spec.L_hat = L_exact_;
  spec.F_star_ref = f_star_;
  return spec;
}

// --- SoftmaxLinearModel ------------------------------------------------------

SoftmaxLinearModel::SoftmaxLinearModel(std::shared_ptr<const RowMajorMatrixXd> features,
                                       std::shared_ptr<const Eigen::VectorXi> labels, int n_classes,
                                       double l2_reg, std::vector<std::vector<int>> client_rows)
    : X_(std::move(features)), y_(std::move(labels)), C_(n_classes), l2_(l2_reg),
      clients_(std::move(client_rows)) {
  if (C_ < 2) throw std::invalid_argument("SoftmaxLinearModel: need at least two classes");
  if (l2_ < 0) throw std::invalid_argument("SoftmaxLinearModel: l2_reg must be nonnegative");
  for (int r = 0; r < y_->size(); ++r)
    if ((*y_)[r] < 0 || (*y_)[r] >= C_)
      throw std::invalid_argument("SoftmaxLinearModel: label outside [0,C) at row " +
                                  std::to_string(r));
  for (const auto& rows : clients_)
    if (rows.empty()) throw std::invalid_argument("SoftmaxLinearModel: empty client");
}

namespace {

// log-sum-exp of one logit row, stable.
inline double row_lse(const Eigen::Ref<const Eigen::RowVectorXd>& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

}  // namespace

double SoftmaxLinearModel::rows_value(std::span<const int> rows, const VectorXd& x) const {
  Eigen::Map<const MatrixXd> W(x.data(), X_->cols(), C_);
  double acc = 0.0;
  Eigen::RowVectorXd z(C_);
  for (int r : rows) {
    z.noalias() = X_->row(r) * W;
    acc += row_lse(z) - z[(*y_)[r]];
  }
  return acc / static_cast<double>(rows.size());
}

void SoftmaxLinearModel::rows_gradient(std::span<const int> rows, const VectorXd& x,
                                       VectorXd& g) const {
  const int d = static_cast<int>(X_->cols());
  Eigen::Map<const MatrixXd> W(x.data(), d, C_);
  g.setZero(d * C_);
  Eigen::Map<MatrixXd> G(g.data(), d, C_);
  const int chunk = 256;
  RowMajorMatrixXd Xb(std::min<int>(chunk, static_cast<int>(rows.size())), d);
  MatrixXd P;
  for (std::size_t start = 0; start < rows.size(); start += chunk) {
    const int k = static_cast<int>(std::min<std::size_t>(chunk, rows.size() - start));
    for (int r = 0; r < k; ++r) Xb.row(r) = X_->row(rows[start + r]);
    P.noalias() = Xb.topRows(k) * W;
    for (int r = 0; r < k; ++r) {
      const double m = P.row(r).maxCoeff();
      P.row(r) = (P.row(r).array() - m).exp();
      P.row(r) /= P.row(r).sum();
      P(r, (*y_)[rows[start + r]]) -= 1.0;
    }
    G.noalias() += Xb.topRows(k).transpose() * P.topRows(k);
  }
  g /= static_cast<double>(rows.size());
  g += l2_ * x;
}

double SoftmaxLinearModel::client_value(int client, const VectorXd& x) const {
  return rows_value(clients_[client], x) + 0.5 * l2_ * x.squaredNorm();
}

void SoftmaxLinearModel::component_gradient(int client, int j, const VectorXd& x,
                                            VectorXd& g) const {
  const int row = clients_[client][j];
  const int d = static_cast<int>(X_->cols());
  Eigen::Map<const MatrixXd> W(x.data(), d, C_);
  Eigen::RowVectorXd z = X_->row(row) * W;
  const double m = z.maxCoeff();
  Eigen::RowVectorXd p = (z.array() - m).exp();
  p /= p.sum();
  p[(*y_)[row]] -= 1.0;
  g.setZero(d * C_);
  Eigen::Map<MatrixXd> G(g.data(), d, C_);
  G.noalias() = X_->row(row).transpose() * p;
  g += l2_ * x;
}

void SoftmaxLinearModel::batch_gradient(int client, std::span<const int> components,
                                        const VectorXd& x, VectorXd& g) const {
  if (components.empty()) throw std::invalid_argument("batch_gradient: empty component set");
  std::vector<int> rows(components.size());
  for (std::size_t k = 0; k < components.size(); ++k) rows[k] = clients_[client][components[k]];
  rows_gradient(rows, x, g);
}

void SoftmaxLinearModel::client_gradient(int client, const VectorXd& x, VectorXd& g) const {
  rows_gradient(clients_[client], x, g);
}

void SoftmaxLinearModel::full_gradient(const VectorXd& x, VectorXd& g) const {
  VectorXd tmp(dim());
  g.setZero(dim());
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    rows_gradient(clients_[i], x, tmp);
    g += tmp;
  }
  g /= static_cast<double>(clients_.size());
}

double SoftmaxLinearModel::value(const VectorXd& x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < clients_.size(); ++i) acc += rows_value(clients_[i], x);
  return acc / static_cast<double>(clients_.size()) + 0.5 * l2_ * x.squaredNorm();
}

double SoftmaxLinearModel::component_smoothness_bound() const {
  double worst = 0.0;
  for (long r = 0; r < X_->rows(); ++r) worst = std::max(worst, X_->row(r).squaredNorm());
  return 0.5 * worst + l2_;
}

double SoftmaxLinearModel::accuracy(const RowMajorMatrixXd& X, const Eigen::VectorXi& y,
                                    const VectorXd& params) const {
  Eigen::Map<const MatrixXd> W(params.data(), X.cols(), C_);
  long correct = 0;
  const int chunk = 1024;
  MatrixXd Z;
  for (int start = 0; start < X.rows(); start += chunk) {
    const int k = static_cast<int>(std::min<long>(chunk, X.rows() - start));
    Z.noalias() = X.middleRows(start, k) * W;
    for (int r = 0; r < k; ++r) {
      Eigen::Index arg;
      Z.row(r).maxCoeff(&arg);
      if (static_cast<int>(arg) == y[start + r]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(X.rows());
}

// --- Oracles and estimators --------------------------------------------------

void MinibatchOracle::gradient(long round, long step, const VectorXd& x, VectorXd& g) const {
  const int m = model->n_components(client);
  if (batch > m)
    throw std::invalid_argument("MinibatchOracle: batch size " + std::to_string(batch) +
                                " exceeds component count " + std::to_string(m));
  if (!x.allFinite()) throw std::invalid_argument("MinibatchOracle: non-finite point");
  RngStream stream(seed, static_cast<std::uint64_t>(client) + 1,
                   static_cast<std::uint64_t>(round) + 1, static_cast<std::uint64_t>(step) + 1);
  const auto idx = stream.sample_without_replacement(m, batch);
  model->batch_gradient(client, idx, x, g);
}

double estimate_smoothness(const FiniteSumModel& model) {
  if (const auto* q = dynamic_cast<const SyntheticQuadratic*>(&model)) return q->exact_smoothness();
  const auto* s = dynamic_cast<const SoftmaxLinearModel*>(&model);
  if (s == nullptr)
    throw std::invalid_argument("estimate_smoothness: unsupported model " + model.name());
  const auto& X = s->features();
  const long N = X.rows();
  const int d = static_cast<int>(X.cols());
  VectorXd v(d);
  for (int k = 0; k < d; ++k) v[k] = 1.0 + 1e-3 * k;  // deterministic non-degenerate start
  v.normalize();
  double lam = 0.0;
  bool converged = false;
  for (int it = 0; it < 500; ++it) {
    VectorXd w = X.transpose() * (X * v) / static_cast<double>(N);
    const double lam_next = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) {
      lam = 0.0;
      converged = true;
      break;
    }
    v = w / nw;
    if (it > 0 && std::abs(lam_next - lam) <= 1e-6 * std::max(1.0, std::abs(lam_next))) {
      lam = lam_next;
      converged = true;
      break;
    }
    lam = lam_next;
  }
  if (!converged)
    std::cerr << "[hew] warning: smoothness power iteration did not converge; using best estimate\n";
  return 0.5 * lam + s->l2_reg();
}

double estimate_variance_proxy(const FiniteSumModel& model, int client, const VectorXd& x_probe,
                               int k, double ball_R) {
  if (k < 2) throw std::invalid_argument("estimate_variance_proxy: need k >= 2");
  if (const auto* q = dynamic_cast<const SyntheticQuadratic*>(&model))
    return q->exact_variance_sup(client, ball_R);
  const int m = model.n_components(client);
  std::vector<int> comps;
  if (k >= m) {
    comps.resize(static_cast<std::size_t>(m));
    std::iota(comps.begin(), comps.end(), 0);
  } else {
    RngStream stream(0xFACE, static_cast<std::uint64_t>(client) + 1);
    comps = stream.sample_without_replacement(m, k);
  }
  VectorXd mean(model.dim());
  model.batch_gradient(client, comps, x_probe, mean);
  VectorXd g(model.dim());
  double acc = 0.0;
  for (int j : comps) {
    model.component_gradient(client, j, x_probe, g);
    acc += (g - mean).squaredNorm();
  }
  return 1.5 * acc / static_cast<double>(comps.size());
}

BallSpec compute_reference_optimum(const FiniteSumModel& model, double tol, const VectorXd& x0) {
  const double L_hat = estimate_smoothness(model);
  VectorXd x = x0;
  VectorXd g(model.dim());
  const long cap = 1000000;
  bool converged = false;
  for (long it = 0; it < cap; ++it) {
    model.full_gradient(x, g);
    if (g.norm() <= tol) {
      converged = true;
      break;
    }
    x -= g / L_hat;
  }
  BallSpec spec;
  spec.x_star_ref = x;
  spec.L_hat = L_hat;
  spec.F_star_ref = model.value(x);
  spec.converged = converged;
  const bool synthetic = dynamic_cast<const SyntheticQuadratic*>(&model) != nullptr;
  spec.R = (synthetic ? 1.0 : 2.0) * (x0 - x).norm();
  return spec;
}

}  // namespace hew
