#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hew/certificate.hpp"
#include "hew/control_solver.hpp"
#include "hew/models.hpp"

namespace hew {

enum class MethodKind {
  HEW,
  HEWFixed,
  PostHet,
  PostHom,
  FedAvg,
  UniformLocalSGD,
  FedNova,
  Scaffold,
  FedProx,
  MBSGD
};

std::string method_name(MethodKind kind);
MethodKind method_from_name(const std::string& name);
// Methods that maintain SCAFFOLD-style control variates.
bool method_is_corrected(MethodKind kind);

// Exact round communication in scalars: 2d + 2dS + S + nu.
long comm_round_cost(long S, long d, long nu);
// Same accounting with method-appropriate broadcast/upload/control terms.
long method_comm_cost(MethodKind kind, long S, long d, long nu);

// Server-side state shared by all methods; control vectors are kept for all
// clients, active or not.
struct ServerState {
  VectorXd x;
  VectorXd c;
  MatrixXd c_i;  // d x n
  long round = 0;

  static ServerState zero_init(int dim, int n_clients);
};

// Simulation environment: the model, fixed per-client schedules, seeding.
struct FedEnv {
  const FiniteSumModel* model = nullptr;
  std::vector<int> H;      // per-client local horizons
  std::vector<int> batch;  // per-client minibatch sizes
  std::uint64_t seed = 0;
  double L = 1.0;
  int threads = 1;
  const BallSpec* ball = nullptr;  // optional invariant-ball monitor

  void validate() const;
};

// Per-round controls. `w`/`theta` are indexed by client id (length n) and are
// consulted only by the methods that use them.
struct RoundPlan {
  MethodKind kind = MethodKind::FedAvg;
  std::vector<int> active;  // client ids, ascending
  VectorXd w;               // HEW certificate / frozen weights
  VectorXd theta;           // per-node amplitudes (HEW certificate mode)
  double vartheta = 1.0;    // common amplitude
  double Lambda = 0.0;      // post-local curvature
  double lr_scale = 1.0;    // baseline stepsize scale: eta = lr_scale / L
  double prox_mu = 0.0;     // FedProx proximal coefficient
  long nu = 0;              // extra uploaded proxy scalars (comm accounting)
  SolverConfig solver;
};

struct RoundResult {
  long comm = 0;
  VectorXd weights;       // effective aggregation weights on clients (sums to 1)
  double cv_residual = 0.0;       // worst control-variates average identity residual
  double server_avg_residual = 0.0;  // server-average identity residual
  double hom_identity_residual = 0.0;  // d(uniform) + (vartheta/L) g_bar residual
  bool ball_exit = false;
};

// Executes one communication round of the given method. Throws on non-finite
// iterates, with diagnostics.
RoundResult run_round(ServerState& state, const RoundPlan& plan, const FedEnv& env);

// One full local pass per client: c_{i,0} = grad F_i(x_0), c_0 their average.
void init_controls_exact(ServerState& state, const FedEnv& env);

// --- certificate-mode driver ---------------------------------------------------

// Tracks the deterministic surrogate upper state (u_t, chi_t) and produces
// per-round HEW plans by the alternating local-control solver.
class CertificateDriver {
 public:
  CertificateDriver(std::vector<NodeSchedule> schedules, double L, double R, double u0,
                    double chi0, SolverConfig solver = {});

  // Solve controls for the current state; fills plan.w/plan.theta for the
  // given active set (certificate branch requires full participation).
  ControlPair solve_controls() const;
  // Advance (u, chi) using the optimized objective value.
  void advance(double optimized_objective);

  const SurrogateState& state() const { return state_; }
  double bar_f() const { return bar_f_; }
  double last_objective() const { return last_objective_; }
  const std::vector<NodeSchedule>& schedules() const { return schedules_; }

 private:
  std::vector<NodeSchedule> schedules_;
  double L_, R_, bar_f_;
  SurrogateState state_;
  TrackingCoeffs tracking_;
  SolverConfig solver_;
  double last_objective_ = 0.0;
};

// Map client horizons/batches/proxies to per-node schedules with a common
// amplitude box.
std::vector<NodeSchedule> make_schedules(const std::vector<int>& H, const std::vector<int>& batch,
                                         const std::vector<double>& v2, double theta_lo,
                                         double theta_hi);

}  // namespace hew
