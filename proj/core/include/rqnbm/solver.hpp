#pragma once

#include <array>
#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rqnbm/line_search.hpp"
#include "rqnbm/spd_operator.hpp"

namespace rqnbm {

/// Which operator policy the driver runs.
///   Full:     SR1 updates after null steps, BFGS after serious steps,
///             scaling and correction as gated.
///   Identity: the ablation baseline — H stays the identity; updates,
///             scaling, and correction are all skipped.
enum class UpdateMode { Full, Identity };

struct SolverConfig {
  double rho = 0.1;      // correction weight, in (0, 1)
  int Gamma = 100;       // corrections before the i_C flag latches, >= 1
  double t_min = 2.22e-16;
  double t_max = 1.0;
  double mu0 = 0.18;     // step-length cap |t d| <= mu0 (injectivity bound)
  double D = 1.0;        // operator bound |H g| <= D
  double eps = 1e-5;     // stopping threshold on w
  int max_iter = 100000;
  LineSearchParams ls;
  bool diagnostic_mode = false;
  UpdateMode update_mode = UpdateMode::Full;

  void validate() const;
};

/// Solver state between outer iterations.
///   x        stability center x_k with value f_x
///   g_tilde  aggregate subgradient at x, with locality weight alpha_tilde
///   w        optimality measure <g_tilde, H g_tilde> + 2 alpha_tilde
///   g_m      basic subgradient: the oracle subgradient at the center
///   H        inverse-Hessian approximation anchored at x
///   i_C      latched once n_C corrections have accumulated (>= Gamma)
///   i_U      whether the previous iteration executed an operator update
///   k, m     iteration counter and index of the last serious step + 1
struct BundleState {
  ManifoldPoint x;
  double f_x = 0.0;
  TangentCoords g_tilde;
  double alpha_tilde = 0.0;
  double w = 0.0;
  TangentCoords g_m;
  SpdOperator H;
  int i_C = 0;
  int i_U = 0;
  int n_C = 0;
  int k = 1;
  int m = 1;
};

enum class StepKind { Serious, Null };
enum class UpdateUsed { None, Sr1, Bfgs };
enum class Termination { Converged, MaxIter, Stalled };

std::string to_string(StepKind k);
std::string to_string(UpdateUsed u);
std::string to_string(Termination t);

/// One row per outer iteration. The first block mirrors the public trace
/// format; the fields after qp_value are replay diagnostics (NaN when not
/// applicable, e.g. qp_value on serious rows or hg_norm in Identity mode).
struct TraceRecord {
  int k = 0;
  StepKind kind = StepKind::Null;
  double f = 0.0;       // f at the center after this iteration
  double w = 0.0;       // w_k used by this iteration's tests
  double t_L = 0.0;
  double t_R = 0.0;
  double alpha = 0.0;   // locality measure of the new bundle element
  std::array<double, 3> lambda{0.0, 0.0, 0.0};
  UpdateUsed update = UpdateUsed::None;
  bool corrected = false;
  bool scaled = false;
  double qp_value = std::numeric_limits<double>::quiet_NaN();
  // replay diagnostics
  double f_prev = std::numeric_limits<double>::quiet_NaN();   // f at the center before this iteration
  double gnorm = std::numeric_limits<double>::quiet_NaN();    // |g_tilde_{k+1}|
  double w_next = std::numeric_limits<double>::quiet_NaN();   // w_{k+1}
  double w_resid = std::numeric_limits<double>::quiet_NaN();  // |w_{k+1} - (<g,Hg> + 2 alpha~)|
  double step_len = std::numeric_limits<double>::quiet_NaN(); // t_R |d_k|
  double hg_norm = std::numeric_limits<double>::quiet_NaN();  // |H g_tilde_{k+1}| entering the correction test
  double wall_time = 0.0;  // seconds spent in this iteration
};

/// Extremal residuals and counters collected when diagnostic_mode is on.
struct DiagnosticStats {
  double max_w_identity_resid = 0.0;
  double min_w_lower_margin = std::numeric_limits<double>::infinity();  // min of w - rho |g|^2
  double min_eig_H = std::numeric_limits<double>::infinity();
  double max_sr1_secant_rel = 0.0;
  double max_bfgs_secant_rel = 0.0;
  double max_sr1_trace_increase = -std::numeric_limits<double>::infinity();
  double max_sr1_wcheck_excess = -std::numeric_limits<double>::infinity();
  double max_ledger_g_resid = 0.0;
  double max_ledger_alpha_resid = 0.0;
  long n_sr1 = 0;
  long n_bfgs = 0;
  long n_corrections = 0;
  long n_scaled = 0;
};

struct SolveResult {
  ManifoldPoint x;
  double f_opt = 0.0;
  double w_final = 0.0;
  Termination termination = Termination::Converged;
  std::vector<TraceRecord> trace;
  long n_f = 0;
  int n_iter = 0;
  int n_serious = 0;
  int n_null = 0;
  double t_total = 0.0;
  double t_qp = 0.0;
  double t_f = 0.0;
  DiagnosticStats diag;  // meaningful only when run with diagnostic_mode
};

/// Restricted-memory quasi-Newton bundle driver.
///
/// Each outer iteration: direction d = -H g_tilde; initial stepsize
/// t_I = min(t_max, mu0/|d|) (upper endpoint, nudged down so t_I |d| <= mu0
/// exactly); line search; then
///   - null step: solve the 3-variable simplex QP on the Gram matrix of
///     (g_m, pulled-back trial subgradient, g_tilde) to aggregate the new
///     subgradient and locality weight; SR1 update, gated on
///     <g_tilde, v> < 0 and (i_C == 0 or the curvature-ratio conditions on
///     the new aggregate);
///   - serious step: center moves, aggregation resets to the new oracle
///     subgradient, H is carried over by transport conjugation; BFGS
///     update gated on <u, s> > rho;
///   - tail: scale H so |H g| <= D; recompute w; if w < rho |g|^2 or both
///     flags are set, add rho I and count a correction; latch i_C once
///     n_C >= Gamma.
class BundleSolver {
public:
  /// Evaluates the oracle once at x1 and initializes the state
  /// (g_tilde = g_1, alpha_tilde = 0, H = identity, w = <g, Hg>).
  BundleSolver(ProblemOracle prob, ManifoldPoint x1, SolverConfig cfg);

  const BundleState& state() const { return state_; }
  const SolverConfig& config() const { return cfg_; }
  long n_f() const { return n_f_; }
  double t_f() const { return t_f_; }
  double t_qp() const { return t_qp_; }
  const DiagnosticStats& diagnostics() const { return diag_; }

  bool done() const { return state_.w <= cfg_.eps; }

  /// One outer iteration. t_I_scale < 1 shrinks the initial stepsize (used
  /// by the stall retry policy). Throws line_search_stall if the inner
  /// loop gives up.
  TraceRecord step(double t_I_scale = 1.0);

  /// Loop until w <= eps, max_iter, or stall. A stall directly after a
  /// null step is retried once with t_I halved; a stall after a serious
  /// step (or on the first iteration, or on the retry) terminates the run
  /// as Stalled with the partial trace.
  SolveResult run();

private:
  EvalResult eval_counted(const ManifoldPoint& p);

  ProblemOracle prob_;
  SolverConfig cfg_;
  BundleState state_;
  std::vector<TraceRecord> trace_;
  std::optional<StepKind> last_kind_;
  std::chrono::steady_clock::time_point t_start_;
  long n_f_ = 0;
  double t_f_ = 0.0;
  double t_qp_ = 0.0;
  DiagnosticStats diag_;

  // Aggregation ledger (diagnostic mode): the explicit convex combination
  // g_tilde = sum_i weight_i * g_i with the pulled-back bundle
  // subgradients and their locality measures. Reset at serious steps.
  struct LedgerEntry {
    Eigen::VectorXd g_coords;  // pulled back to the current center
    double alpha;
    double weight;
  };
  std::vector<LedgerEntry> ledger_;
};

/// Convenience wrapper: construct, run, and stamp t_total.
SolveResult run_solver(const ProblemOracle& prob, const ManifoldPoint& x1,
                       const SolverConfig& cfg);

}  // namespace rqnbm
