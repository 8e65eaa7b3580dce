#include "rqnbm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "rqnbm/simplex_qp.hpp"

namespace rqnbm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

std::string to_string(StepKind k) {
  return k == StepKind::Serious ? "serious" : "null";
}

std::string to_string(UpdateUsed u) {
  switch (u) {
    case UpdateUsed::Sr1: return "sr1";
    case UpdateUsed::Bfgs: return "bfgs";
    default: return "none";
  }
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIter: return "max_iter";
    default: return "stalled";
  }
}

void SolverConfig::validate() const {
  if (!(rho > 0.0 && rho < 1.0))
    throw precondition_violation("rho must lie in (0, 1)");
  if (Gamma < 1) throw precondition_violation("Gamma must be at least 1");
  if (!(t_min > 0.0 && t_min < 1.0))
    throw precondition_violation("t_min must lie in (0, 1)");
  if (!(t_max >= 1.0)) throw precondition_violation("t_max must be at least 1");
  if (!(mu0 > 0.0)) throw precondition_violation("mu0 must be positive");
  if (!(D > 0.0)) throw precondition_violation("D must be positive");
  if (!(eps >= 0.0)) throw precondition_violation("eps must be nonnegative");
  if (max_iter < 1) throw precondition_violation("max_iter must be at least 1");
  ls.validate();
}

BundleSolver::BundleSolver(ProblemOracle prob, ManifoldPoint x1,
                           SolverConfig cfg)
    : prob_(std::move(prob)), cfg_(cfg) {
  cfg_.validate();
  t_start_ = std::chrono::steady_clock::now();

  const EvalResult e0 = eval_counted(x1);
  state_.x = std::move(x1);
  state_.f_x = e0.f;
  state_.g_tilde = e0.g;
  state_.alpha_tilde = 0.0;
  state_.g_m = e0.g;
  state_.H = identity_operator(prob_.manifold.dim(), state_.x);
  state_.w = quad_form(state_.H, state_.g_tilde, state_.g_tilde);
  state_.k = 1;
  state_.m = 1;

  if (cfg_.diagnostic_mode) {
    ledger_.clear();
    ledger_.push_back({state_.g_m.coords, 0.0, 1.0});
  }
}

EvalResult BundleSolver::eval_counted(const ManifoldPoint& p) {
  const auto t0 = std::chrono::steady_clock::now();
  EvalResult r = prob_.eval(p);
  t_f_ += seconds_since(t0);
  ++n_f_;
  if (!std::isfinite(r.f) || !r.g.coords.allFinite())
    throw oracle_error("problem oracle returned a non-finite value");
  return r;
}

TraceRecord BundleSolver::step(double t_I_scale) {
  if (done())
    throw precondition_violation("step() called on a converged state");
  const auto iter_t0 = std::chrono::steady_clock::now();
  const Manifold& m = prob_.manifold;
  const int n = m.dim();
  const double rho = cfg_.rho;
  const bool identity_mode = cfg_.update_mode == UpdateMode::Identity;

  TraceRecord rec;
  rec.k = state_.k;
  rec.w = state_.w;
  rec.f_prev = state_.f_x;

  TangentCoords d = apply(state_.H, state_.g_tilde);
  d.coords = -d.coords;
  const double dn = norm(d);
  // w > 0 (not done) with a zero direction means the aggregate vanished
  // while its locality weight did not: no line search can make progress
  if (!(dn > 0.0))
    throw line_search_stall("model direction vanished", 0.0, 0.0, 0.0, 0.0, 0);

  // upper endpoint of the admissible range, nudged down so that t_I |d|
  // never exceeds mu0 after rounding; every trial then stays inside the
  // injectivity region and the recorded step length meets the cap exactly
  double t_I = std::min(cfg_.t_max, cfg_.mu0 / dn) * t_I_scale;
  while (t_I * dn > cfg_.mu0) t_I = std::nextafter(t_I, 0.0);

  ProblemOracle counted{
      m, [this](const ManifoldPoint& p) { return eval_counted(p); },
      prob_.description};
  const LineSearchResult ls =
      line_search(counted, m, state_.x, state_.f_x, d, state_.w, t_I,
                  cfg_.t_min, cfg_.D, cfg_.ls);

  rec.kind = ls.outcome == StepOutcome::Serious ? StepKind::Serious
                                                : StepKind::Null;
  rec.t_L = ls.t_L;
  rec.t_R = ls.t_R;
  rec.alpha = ls.alpha;
  rec.step_len = ls.t_R * dn;

  // transport along the accepted trial; recomputing it reproduces the line
  // search's endpoint bit for bit because the inputs are identical
  const TransportMap T = m.transport(state_.x, scaled(d, ls.t_R));
  if (!same_point(T.to, ls.y))
    throw std::logic_error("transport endpoint diverged from the trial point");

  // H_pre: the operator at the step's center before any update (transported
  // on serious steps). H_work: after the gated quasi-Newton update, then
  // mutated further by scaling/correction in the common tail below.
  SpdOperator H_pre = state_.H;
  SpdOperator H_work = state_.H;
  TangentCoords g_plus = state_.g_tilde;
  double alpha_plus = 0.0;
  UpdateUsed used = UpdateUsed::None;
  int i_U_new = 0;
  QuasiNewtonVectors qv;
  bool have_qv = false;

  if (rec.kind == StepKind::Null) {
    // bundle quantities stay anchored at the standing center; the trial
    // subgradient comes back through the hat pullback, the displacement
    // data through the plain inverse transport
    const Eigen::VectorXd u_at_y =
        ls.g_y.coords - apply_map(T, state_.g_m).coords;
    const Eigen::VectorXd u_tilde = T.matrix.transpose() * u_at_y;
    const Eigen::VectorXd s_coords = ls.t_R * d.coords;
    const Eigen::VectorXd v_coords = state_.H.mat * u_tilde - s_coords;
    qv = QuasiNewtonVectors{m.tangent(state_.x, s_coords),
                            m.tangent(state_.x, u_tilde),
                            m.tangent(state_.x, v_coords)};
    have_qv = true;

    const TangentCoords g_hat = apply_hat_pullback(T, ls.g_y);

    // aggregation subproblem over (basic, trial, aggregate)
    Eigen::MatrixXd A(n, 3);
    A.col(0) = state_.g_m.coords;
    A.col(1) = g_hat.coords;
    A.col(2) = state_.g_tilde.coords;
    Qp3Input qp;
    const Eigen::Matrix3d gram = A.transpose() * (state_.H.mat * A);
    qp.gram = 0.5 * (gram + gram.transpose());
    qp.lin = Eigen::Vector3d(0.0, 2.0 * ls.alpha, 2.0 * state_.alpha_tilde);

    const auto qp_t0 = std::chrono::steady_clock::now();
    const Qp3Solution sol = solve_simplex_qp(qp);
    t_qp_ += seconds_since(qp_t0);

    rec.lambda = {sol.lambda(0), sol.lambda(1), sol.lambda(2)};
    rec.qp_value = sol.value;

    g_plus = m.tangent(state_.x, sol.lambda(0) * state_.g_m.coords +
                                     sol.lambda(1) * g_hat.coords +
                                     sol.lambda(2) * state_.g_tilde.coords);
    alpha_plus =
        sol.lambda(1) * ls.alpha + sol.lambda(2) * state_.alpha_tilde;

    if (cfg_.diagnostic_mode) {
      for (LedgerEntry& e : ledger_) e.weight *= sol.lambda(2);
      ledger_.front().weight += sol.lambda(0);
      ledger_.push_back({g_hat.coords, ls.alpha, sol.lambda(1)});
    }

    if (!identity_mode) {
      const double gv = state_.g_tilde.coords.dot(v_coords);
      const double uv = u_tilde.dot(v_coords);
      bool gate = gv < 0.0 && uv > 1e-14;
      if (gate && state_.i_C == 1) {
        // with corrections latched the update must also clear the
        // curvature-ratio conditions evaluated at the new aggregate
        const double gpv = g_plus.coords.dot(v_coords);
        gate = rho * g_plus.coords.squaredNorm() <= gpv * gpv / uv &&
               rho * n <= v_coords.squaredNorm() / uv;
      }
      if (gate) {
        H_work = sr1_update(H_pre, qv);
        used = UpdateUsed::Sr1;
        i_U_new = 1;
      }
    }
  } else {
    // the trial point becomes the center and everything moves there; the
    // aggregation machinery resets, so its columns are not applicable
    rec.lambda = {kNaN, kNaN, kNaN};
    const Eigen::VectorXd u_coords =
        ls.g_y.coords - apply_map(T, state_.g_m).coords;
    const Eigen::VectorXd s_coords = T.matrix * (ls.t_R * d.coords);

    state_.x = ls.y;
    state_.f_x = ls.f_y;
    state_.g_m = ls.g_y;
    g_plus = ls.g_y;
    alpha_plus = 0.0;
    state_.m = state_.k + 1;

    if (identity_mode) {
      H_pre = identity_operator(n, state_.x);
      H_work = H_pre;
    } else {
      H_pre = transport_operator(state_.H, T, state_.x);
      H_work = H_pre;
      qv = QuasiNewtonVectors{
          m.tangent(state_.x, s_coords), m.tangent(state_.x, u_coords),
          m.tangent(state_.x, H_pre.mat * u_coords - s_coords)};
      have_qv = true;

      if (u_coords.dot(s_coords) > rho) {
        H_work = bfgs_update(H_pre, qv.s, qv.u, rho);
        used = UpdateUsed::Bfgs;
        i_U_new = 1;
      }
    }

    if (cfg_.diagnostic_mode) {
      ledger_.clear();
      ledger_.push_back({state_.g_m.coords, 0.0, 1.0});
    }
  }

  // post-update operator, kept before scaling mutates H_work (diagnostics
  // replay the update bounds against exactly this object)
  std::optional<SpdOperator> H_updated;
  if (cfg_.diagnostic_mode && used != UpdateUsed::None) H_updated = H_work;

  // common tail: scaling, the w recomputation, and the rho-correction
  double w_plus;
  double w_check = kNaN;
  if (identity_mode) {
    w_plus = g_plus.coords.squaredNorm() + 2.0 * alpha_plus;
    rec.hg_norm = kNaN;
  } else {
    const double hg_before = norm(apply(H_work, g_plus));
    if (hg_before > cfg_.D) {
      H_work = scale_to_bound(H_work, g_plus, cfg_.D);
      rec.scaled = true;
      ++diag_.n_scaled;
    }
    rec.hg_norm = norm(apply(H_work, g_plus));
    w_check = quad_form(H_work, g_plus, g_plus) + 2.0 * alpha_plus;
    const double g_sq = g_plus.coords.squaredNorm();
    if (w_check < rho * g_sq || (state_.i_C == 1 && i_U_new == 1)) {
      H_work = correct(H_work, rho);
      w_plus = w_check + rho * g_sq;
      rec.corrected = true;
      state_.n_C += 1;
      ++diag_.n_corrections;
    } else {
      w_plus = w_check;
    }
  }

  state_.H = H_work;
  state_.g_tilde = g_plus;
  state_.alpha_tilde = alpha_plus;
  state_.w = w_plus;
  state_.i_U = i_U_new;
  if (state_.n_C >= cfg_.Gamma) state_.i_C = 1;
  state_.k += 1;

  rec.update = used;
  rec.f = state_.f_x;
  rec.gnorm = norm(state_.g_tilde);
  rec.w_next = state_.w;
  rec.w_resid = std::abs(
      state_.w - (quad_form(state_.H, state_.g_tilde, state_.g_tilde) +
                  2.0 * state_.alpha_tilde));

  if (cfg_.diagnostic_mode) {
    diag_.max_w_identity_resid =
        std::max(diag_.max_w_identity_resid, rec.w_resid);
    diag_.min_w_lower_margin =
        std::min(diag_.min_w_lower_margin,
                 state_.w - rho * state_.g_tilde.coords.squaredNorm());
    if (n <= 45)
      diag_.min_eig_H = std::min(diag_.min_eig_H, min_eigenvalue(state_.H));

    if (H_updated) {
      const double secant_rel =
          (H_updated->mat * qv.u.coords - qv.s.coords).norm() /
          std::max(1.0, qv.s.coords.norm());
      if (used == UpdateUsed::Sr1) {
        diag_.max_sr1_secant_rel =
            std::max(diag_.max_sr1_secant_rel, secant_rel);
        diag_.max_sr1_trace_increase =
            std::max(diag_.max_sr1_trace_increase,
                     H_updated->mat.trace() - H_pre.mat.trace());
        diag_.max_sr1_wcheck_excess = std::max(
            diag_.max_sr1_wcheck_excess,
            w_check - (quad_form(H_pre, g_plus, g_plus) + 2.0 * alpha_plus));
        ++diag_.n_sr1;
      } else {
        diag_.max_bfgs_secant_rel =
            std::max(diag_.max_bfgs_secant_rel, secant_rel);
        ++diag_.n_bfgs;
      }
      if (n <= 45)
        diag_.min_eig_H = std::min(diag_.min_eig_H, min_eigenvalue(*H_updated));
    }

    Eigen::VectorXd ledger_g = Eigen::VectorXd::Zero(n);
    double ledger_alpha = 0.0;
    for (const LedgerEntry& e : ledger_) {
      ledger_g += e.weight * e.g_coords;
      ledger_alpha += e.weight * e.alpha;
    }
    diag_.max_ledger_g_resid =
        std::max(diag_.max_ledger_g_resid,
                 (ledger_g - state_.g_tilde.coords).norm());
    diag_.max_ledger_alpha_resid =
        std::max(diag_.max_ledger_alpha_resid,
                 std::abs(ledger_alpha - state_.alpha_tilde));
  }

  last_kind_ = rec.kind;
  rec.wall_time = seconds_since(iter_t0);
  return rec;
}

SolveResult BundleSolver::run() {
  Termination term = Termination::Converged;
  while (!done()) {
    if (static_cast<int>(trace_.size()) >= cfg_.max_iter) {
      term = Termination::MaxIter;
      break;
    }
    try {
      trace_.push_back(step());
    } catch (const line_search_stall&) {
      if (last_kind_ == StepKind::Null) {
        // one rescue attempt from a shorter initial step; a second stall
        // (or any stall following a serious step) ends the run honestly
        try {
          trace_.push_back(step(0.5));
        } catch (const line_search_stall&) {
          term = Termination::Stalled;
          break;
        }
      } else {
        term = Termination::Stalled;
        break;
      }
    }
  }

  SolveResult res;
  res.x = state_.x;
  res.f_opt = state_.f_x;
  res.w_final = state_.w;
  res.termination = term;
  res.trace = trace_;
  res.n_f = n_f_;
  res.n_iter = static_cast<int>(trace_.size());
  for (const TraceRecord& r : trace_)
    (r.kind == StepKind::Serious ? res.n_serious : res.n_null) += 1;
  res.t_total = seconds_since(t_start_);
  res.t_qp = t_qp_;
  res.t_f = t_f_;
  res.diag = diag_;
  return res;
}

SolveResult run_solver(const ProblemOracle& prob, const ManifoldPoint& x1,
                       const SolverConfig& cfg) {
  BundleSolver solver(prob, x1, cfg);
  return solver.run();
}

}  // namespace rqnbm
